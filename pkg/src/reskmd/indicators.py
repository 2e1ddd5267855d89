"""Sliding-window early-warning indicator series and trend scores.

Provides the Koopman-residual signal through both estimator pipelines and
the three conventional baselines (variance, lag-1 autocorrelation, leading
DMD eigenvalue modulus). Each indicator maps a series to a time-stamped
value per window; windows that cannot be processed leave a gap rather
than failing the whole series.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import kendalltau

from ._validation import frozen_array
from .dmd import ExactDMD, KernelEDMD, KernelSpec
from .errors import (
    ConfigurationError,
    DegenerateEigenfunctionError,
    DegenerateWindowError,
    InsufficientDataError,
)
from .residual import residual_report
from .timeseries import DelayConfig, hankel_embed, windows

__all__ = [
    "EwsSeries",
    "DetectionScore",
    "variance_ews",
    "lag1_autocorr",
    "dmd_max_eig",
    "reskmd_exact_pipeline",
    "reskmd_kernel_pipeline",
    "trend_score",
    "auto_delay_config",
    "compute_indicator",
    "kernel_indicator_name",
    "parse_indicator_name",
    "save_ews_csv",
    "read_ews_csv",
    "BASELINE_INDICATORS",
]

logger = logging.getLogger(__name__)

RESKMD_EXACT = "reskmd_exact"
RESKMD_KERNEL_PREFIX = "reskmd_kernel"
BASELINE_INDICATORS = ("variance", "lag1_ac", "dmd_max_eig")

#: delay depth used when the caller does not pin one (scaled to the window)
MAX_DEFAULT_DELAY = 300


@dataclass(frozen=True)
class EwsSeries:
    """Time-indexed values of one indicator over sliding windows."""

    indicator: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = frozen_array(self.times, ndim=1)
        values = frozen_array(self.values, ndim=1)
        if times.shape != values.shape:
            raise ValueError("times and values must have equal length")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.shape[0]


@dataclass(frozen=True)
class DetectionScore:
    """Scalar trend score of an indicator trace, in [-1, 1]."""

    indicator: str
    score: float
    method: str = "kendall_tau_b"

    def __post_init__(self):
        if not -1.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score!r} outside [-1, 1]")


def variance_ews(window):
    """Unbiased sample variance; multivariate input averages per-dimension."""
    values = _window_values(window)
    if values.shape[0] < 2:
        raise InsufficientDataError("variance needs at least 2 samples")
    return float(np.var(values, axis=0, ddof=1).mean())


def lag1_autocorr(window):
    """Pearson correlation of the series with its one-step shift."""
    values = _window_values(window)
    if values.shape[0] < 3:
        raise InsufficientDataError("lag-1 autocorrelation needs at least 3 samples")
    rs = []
    for col in values.T:
        a, b = col[:-1], col[1:]
        sa, sb = a.std(), b.std()
        if sa == 0 or sb == 0:
            raise DegenerateWindowError("zero variance in window")
        rs.append(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    return float(np.clip(np.mean(rs), -1.0, 1.0))


def _window_values(window):
    values = getattr(window, "values", window)
    values = np.asarray(values, dtype=float)
    return values[:, None] if values.ndim == 1 else values


def dmd_max_eig(window, cfg, rank=None):
    """Largest eigenvalue modulus of the exact-DMD operator on one window.

    The one-step map is fitted with an intercept (X and Y centered by
    their own weighted means); otherwise the nonzero equilibrium offset
    pins the top eigenvalue at ~1 and the indicator carries no
    slowing-down information. On exactly linear data the centering is a
    no-op for the spectrum.
    """
    if window.n_samples < cfg.d_hankel + 2:
        raise InsufficientDataError("window too short for the delay depth")
    snapshots = hankel_embed(window, cfg.d_hankel)
    w = snapshots.weights
    x_centered = snapshots.X - (w[:, None] * snapshots.X).sum(axis=0)
    y_centered = snapshots.Y - (w[:, None] * snapshots.Y).sum(axis=0)
    if np.all(x_centered == 0.0):
        raise DegenerateWindowError("window is constant; no dynamics to fit")
    model = ExactDMD(rank=rank).fit(x_centered, y_centered, w)
    return float(np.abs(model.eigenvalues_).max())


def _sliding(series, cfg, window_fn, indicator):
    times, values = [], []
    for w in windows(series, cfg):
        try:
            value = window_fn(w)
        except (DegenerateWindowError, DegenerateEigenfunctionError) as exc:
            logger.warning(
                "%s: skipped window ending at t=%g (%s)",
                indicator,
                w.times[-1],
                exc,
            )
            continue
        times.append(w.times[-1])
        values.append(value)
    return EwsSeries(indicator, np.asarray(times), np.asarray(values))


def reskmd_exact_pipeline(series, cfg, rank=None):
    """Mean squared eigenpair residual per window, identity dictionary."""

    def one_window(w):
        model = ExactDMD(rank=rank).fit(hankel_embed(w, cfg.d_hankel))
        return residual_report(model, window_time=w.times[-1]).reskmd_sq

    return _sliding(series, cfg, one_window, RESKMD_EXACT)


def reskmd_kernel_pipeline(series, cfg, kernel, rank=None):
    """Mean squared eigenpair residual per window, kernel dictionary."""

    def one_window(w):
        snapshots = hankel_embed(w, cfg.d_hankel)
        model = KernelEDMD(kernel=kernel, rank=rank).fit(snapshots)
        return residual_report(model, window_time=w.times[-1]).reskmd_sq

    return _sliding(series, cfg, one_window, kernel_indicator_name(kernel))


def kernel_indicator_name(kernel):
    return f"{RESKMD_KERNEL_PREFIX}:{kernel.label}"


def parse_indicator_name(name):
    """Split an indicator id into (base, KernelSpec or None)."""
    if name == RESKMD_EXACT or name in BASELINE_INDICATORS:
        return name, None
    if name.startswith(RESKMD_KERNEL_PREFIX + ":"):
        payload = name[len(RESKMD_KERNEL_PREFIX) + 1 :]
        try:
            kind, gamma = payload.split(",")
            return RESKMD_KERNEL_PREFIX, KernelSpec(kind.strip(), float(gamma))
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"bad kernel indicator {name!r}: {exc}") from exc
    raise ConfigurationError(f"unknown indicator {name!r}")


def trend_score(series):
    """Kendall rank correlation (tau-b) of the trace against window order."""
    if len(series) < 3:
        raise InsufficientDataError("trend score needs at least 3 windows")
    if np.all(series.values == series.values[0]):
        return DetectionScore(series.indicator, 0.0)
    tau = kendalltau(np.arange(len(series)), series.values).statistic
    return DetectionScore(series.indicator, float(np.clip(tau, -1.0, 1.0)))


def auto_delay_config(n_samples, d_hankel=None, t_window=None, stride=None,
                      max_windows=48):
    """Window geometry defaults: half-length windows, delay capped at 300.

    The stride is chosen to keep at most ``max_windows`` windows unless
    given explicitly (use ``stride=1`` for a dense sweep).
    """
    if t_window is None:
        t_window = n_samples // 2
    if t_window > n_samples:
        raise InsufficientDataError(
            f"t_window {t_window} exceeds series length {n_samples}"
        )
    if d_hankel is None:
        d_hankel = max(1, min(MAX_DEFAULT_DELAY, t_window // 2))
    if stride is None:
        span = n_samples - t_window
        stride = max(1, -(-span // max(1, max_windows - 1)))
    return DelayConfig(d_hankel=d_hankel, t_window=t_window, stride=stride)


def compute_indicator(name, series, cfg=None, rank=None, detrend=None):
    """Dispatch an indicator id to its pipeline over one series.

    ``detrend`` is a pass-through hook ``RawSeries -> RawSeries`` applied
    before windowing; by default nothing is removed from the data.
    """
    base, kernel = parse_indicator_name(name)
    if detrend is not None:
        series = detrend(series)
    if cfg is None:
        cfg = auto_delay_config(series.n_samples)
    if base == RESKMD_EXACT:
        return reskmd_exact_pipeline(series, cfg, rank=rank)
    if base == RESKMD_KERNEL_PREFIX:
        return reskmd_kernel_pipeline(series, cfg, kernel, rank=rank)
    if base == "variance":
        return _sliding(series, cfg, variance_ews, name)
    if base == "lag1_ac":
        return _sliding(series, cfg, lag1_autocorr, name)
    if base == "dmd_max_eig":
        return _sliding(series, cfg, lambda w: dmd_max_eig(w, cfg, rank=rank), name)
    raise ConfigurationError(f"unknown indicator {name!r}")


def save_ews_csv(series, path):
    """Write an indicator trace as ``time,indicator,value`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "indicator", "value"])
        for t, v in zip(series.times, series.values):
            writer.writerow([repr(float(t)), series.indicator, repr(float(v))])


def read_ews_csv(path):
    """Read back a trace written by :func:`save_ews_csv`."""
    times, values, indicator = [], [], None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            indicator = row["indicator"]
            times.append(float(row["time"]))
            values.append(float(row["value"]))
    if indicator is None:
        raise InsufficientDataError(f"{path}: empty indicator trace")
    return EwsSeries(indicator, np.asarray(times), np.asarray(values))
