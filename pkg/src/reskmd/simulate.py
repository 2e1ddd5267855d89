"""Synthetic tipping and non-tipping trajectories from bifurcation normal forms.

Integrates a drift field with a fixed-step fifth-order Runge-Kutta scheme
while a bifurcation parameter ramps linearly in time, and kicks the state
with additive Gaussian noise at each emitted sample. Every run is fully
determined by its seed.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .timeseries import RawSeries

__all__ = [
    "OdeSystem",
    "RampSchedule",
    "SimConfig",
    "EnsembleMember",
    "saddle_node",
    "hopf",
    "get_system",
    "rk5_step",
    "simulate",
    "make_ensemble",
]

#: state-norm threshold at which a run is truncated as diverged
DIVERGENCE_LIMIT = 1e6

# Dormand-Prince coefficients, 5th-order solution (6 stages suffice).
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)


@dataclass(frozen=True)
class OdeSystem:
    """A parameterized drift field ``drift(state, beta) -> derivative``.

    ``drift`` must broadcast: ``state`` is ``(..., dim)`` and ``beta`` a
    scalar or ``(..., 1)`` column, returning ``(..., dim)``; this lets
    ensembles integrate in lockstep.
    """

    name: str
    dim: int
    drift: callable
    beta_star: float = 0.0  # parameter value at which stability is lost


def saddle_node():
    """1-D system with a fold of equilibria at beta = 0.

    For beta > 0 the branch near x = 1 + sqrt(beta) is stable; at beta = 0
    it collides with the unstable branch 1 - sqrt(beta) and the state
    falls to the remaining attractor at x = -1.
    """

    def drift(x, beta):
        return -(x + 1.0) * ((x - 1.0) ** 2 - beta)

    return OdeSystem("saddle_node", 1, drift)


def hopf():
    """2-D system whose origin loses stability subcritically at beta = 0.

    For beta < -1/4 the origin is globally attracting; past beta = 0 the
    trajectory jumps to a large limit cycle (delayed in practice).
    """

    def drift(state, beta):
        x = state[..., :1]
        y = state[..., 1:]
        r2 = x * x + y * y
        damp = r2 * (r2 - 1.0)
        two_pi = 2.0 * math.pi
        return np.concatenate(
            [beta * x - two_pi * y - x * damp, two_pi * x + beta * y - y * damp],
            axis=-1,
        )

    return OdeSystem("hopf", 2, drift)


_SYSTEMS = {"saddle_node": saddle_node, "hopf": hopf}


def get_system(name):
    try:
        return _SYSTEMS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r}") from None


@dataclass(frozen=True)
class RampSchedule:
    """Linear parameter drift ``beta(t) = beta0 + rate * t`` over [0, t_end].

    ``rate = 0`` encodes a fixed-parameter (non-tipping) run; ``clamp``
    optionally pins beta once it reaches that terminal value.
    """

    beta0: float
    rate: float
    t_end: float
    clamp: float = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")

    def beta_at(self, t):
        beta = self.beta0 + self.rate * t
        if self.clamp is not None:
            if self.rate < 0:
                beta = max(beta, self.clamp)
            elif self.rate > 0:
                beta = min(beta, self.clamp)
        return beta

    def crossing_time(self, beta_star=0.0):
        """Time at which beta reaches ``beta_star``, or None if it never does."""
        if self.rate == 0 or self.beta0 == beta_star:
            return None
        t_star = (beta_star - self.beta0) / self.rate
        if not 0 < t_star <= self.t_end:
            return None
        if self.clamp is not None and self.beta_at(t_star) != beta_star:
            return None
        return t_star


@dataclass(frozen=True)
class SimConfig:
    """Integration and sampling settings for one run."""

    x0: tuple
    dt: float = 0.01
    sample_every: int = 10
    sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def rk5_step(sys, state, beta, dt):
    """One deterministic Dormand-Prince (5th order) step at fixed beta."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    state = np.asarray(state, dtype=float)
    ks = []
    for row in _DP_A:
        xi = state
        for a, k in zip(row, ks):
            xi = xi + dt * a * k
        ki = np.asarray(sys.drift(xi, beta), dtype=float)
        if not np.all(np.isfinite(ki)):
            raise DivergenceError(float("nan"), "non-finite drift inside RK stage")
        ks.append(ki)
    out = state
    for b, k in zip(_DP_B, ks):
        out = out + dt * b * k
    return out


def simulate(sys, ramp, cfg):
    """Integrate one run and return the sampled noisy trajectory.

    The drift is advanced at fixed ``cfg.dt`` with beta frozen per step;
    every ``cfg.sample_every``-th step the state receives an additive
    ``sigma * N(0, I)`` kick which is both recorded and fed back, so the
    sampled sequence follows a discrete stochastic map. If the state norm
    exceeds ``DIVERGENCE_LIMIT`` the series is truncated and its ``meta``
    flagged with the escape time.
    """
    state = np.asarray(cfg.x0, dtype=float).ravel()
    if state.shape[0] != sys.dim:
        raise ConfigurationError(
            f"x0 has dim {state.shape[0]}, system {sys.name} expects {sys.dim}"
        )
    rng = np.random.default_rng(cfg.seed)
    n_steps = int(round(ramp.t_end / cfg.dt))
    times = [0.0]
    samples = [state.copy()]
    meta = f"{sys.name} beta0={ramp.beta0:g} rate={ramp.rate:g} seed={cfg.seed}"
    diverged_at = None
    for k in range(1, n_steps + 1):
        beta = ramp.beta_at((k - 1) * cfg.dt)
        try:
            state = rk5_step(sys, state, beta, cfg.dt)
        except DivergenceError:
            diverged_at = k * cfg.dt
            break
        if k % cfg.sample_every == 0:
            state = state + cfg.sigma * rng.standard_normal(sys.dim)
            if np.linalg.norm(state) > DIVERGENCE_LIMIT:
                diverged_at = k * cfg.dt
                break
            times.append(k * cfg.dt)
            samples.append(state.copy())
    if diverged_at is not None:
        meta += f" diverged_t={diverged_at:g}"
        if len(samples) < 2:
            raise DivergenceError(diverged_at, "run diverged before 2 samples")
    return RawSeries(np.asarray(times), np.asarray(samples), meta)


@dataclass(frozen=True)
class EnsembleMember:
    """One labeled run: pre-tipping segment plus provenance."""

    run_id: str
    rate: float
    seed: int
    tipping: bool
    series: RawSeries  # pre-tipping segment, the input to EWS computation
    full_series: RawSeries
    crossing_time: float = None


def _batch_simulate(sys, ramp, rates, seeds, cfg):
    """Integrate one run per (rate, seed) in lockstep.

    Elementwise math only, so each row is bit-identical to a standalone
    :func:`simulate` with the same seed. Rows that diverge are handed
    back as None for the caller to rerun individually.
    """
    n = len(rates)
    rates = np.asarray(rates, dtype=float)[:, None]
    states = np.tile(np.asarray(cfg.x0, dtype=float).ravel(), (n, 1))
    rngs = [np.random.default_rng(s) for s in seeds]
    n_steps = int(round(ramp.t_end / cfg.dt))
    alive = np.ones(n, dtype=bool)
    times = [0.0]
    samples = [states.copy()]
    with np.errstate(all="ignore"):
        for k in range(1, n_steps + 1):
            beta = ramp.beta0 + rates * ((k - 1) * cfg.dt)
            if ramp.clamp is not None:
                lo = np.where(rates[:, 0] < 0, ramp.clamp, -np.inf)[:, None]
                hi = np.where(rates[:, 0] > 0, ramp.clamp, np.inf)[:, None]
                beta = np.clip(beta, lo, hi)
            ks = []
            for row in _DP_A:
                xi = states
                for a, kk in zip(row, ks):
                    xi = xi + cfg.dt * a * kk
                ks.append(np.asarray(sys.drift(xi, beta), dtype=float))
            out = states
            for b, kk in zip(_DP_B, ks):
                out = out + cfg.dt * b * kk
            states = out
            if k % cfg.sample_every == 0:
                kicks = np.stack([r.standard_normal(sys.dim) for r in rngs])
                states = states + cfg.sigma * kicks
                ok = np.isfinite(states).all(axis=1)
                ok &= np.linalg.norm(np.where(ok[:, None], states, 0.0), axis=1) <= (
                    DIVERGENCE_LIMIT
                )
                alive &= ok
                if not alive.any():
                    break
                times.append(k * cfg.dt)
                samples.append(states.copy())
    t_arr = np.asarray(times)
    sample_arr = np.asarray(samples)  # (n_samples, n, dim)
    out = []
    for i in range(n):
        if not alive[i]:
            out.append(None)
            continue
        meta = (
            f"{sys.name} beta0={ramp.beta0:g} rate={rates[i, 0]:g} seed={seeds[i]}"
        )
        out.append(RawSeries(t_arr, sample_arr[:, i, :], meta))
    return out


def make_ensemble(sys, ramp, rates, n_per_rate, cfg):
    """Simulate ``n_per_rate`` runs per rate with derived seeds and labels.

    A run is labeled tipping when its ramp crosses the system's
    bifurcation value within the horizon; its retained series is then cut
    to the samples strictly before the crossing.
    """
    if not list(rates):
        raise ConfigurationError("rates list must be nonempty")
    if n_per_rate < 1:
        raise ConfigurationError("n_per_rate must be >= 1")
    run_rates, run_seeds = [], []
    for rate in rates:
        for _ in range(n_per_rate):
            run_seeds.append(cfg.seed * 1_000_003 + len(run_seeds))
            run_rates.append(rate)
    batch = _batch_simulate(sys, ramp, run_rates, run_seeds, cfg)
    members = []
    for index, (rate, seed, series) in enumerate(zip(run_rates, run_seeds, batch)):
        run_ramp = replace(ramp, rate=rate)
        t_cross = run_ramp.crossing_time(sys.beta_star)
        if series is None:  # diverged in the batch; rerun for exact truncation
            series = simulate(sys, run_ramp, replace(cfg, seed=seed))
        if t_cross is not None:
            keep = int(np.searchsorted(series.times, t_cross, side="left"))
            if keep < 4:
                raise ConfigurationError(
                    f"rate {rate:g}: fewer than 4 pre-tipping samples"
                )
            pre = series.slice(0, keep)
        else:
            pre = series
        members.append(
            EnsembleMember(
                run_id=f"{sys.name}-{index:03d}",
                rate=rate,
                seed=seed,
                tipping=t_cross is not None,
                series=pre,
                full_series=series,
                crossing_time=t_cross,
            )
        )
    return members
