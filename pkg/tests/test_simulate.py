import math

import numpy as np
import pytest
from scipy.optimize import brentq

from reskmd import (
    RampSchedule,
    SimConfig,
    hopf,
    make_ensemble,
    rk5_step,
    saddle_node,
    simulate,
)
from reskmd.errors import ConfigurationError, DivergenceError
from reskmd.simulate import OdeSystem


class TestRk5Step:
    def test_zero_field_leaves_state(self):
        sys_ = OdeSystem("still", 1, lambda x, b: np.zeros_like(x))
        out = rk5_step(sys_, np.array([1.3]), 0.0, 0.1)
        np.testing.assert_array_equal(out, [1.3])

    def test_exponential_decay_against_closed_form(self):
        sys_ = OdeSystem("decay", 1, lambda x, b: -x)
        out = rk5_step(sys_, np.array([1.0]), 0.0, 0.1)
        # oracle: exp(-0.1)
        assert abs(out[0] - math.exp(-0.1)) < 1e-9

    def test_saddle_node_fixed_point_is_stationary(self):
        # x = 2 solves (x-1)^2 = beta at beta = 1
        sys_ = saddle_node()
        assert abs(sys_.drift(np.array([2.0]), 1.0)[0]) == 0.0
        out = rk5_step(sys_, np.array([2.0]), 1.0, 0.05)
        assert abs(out[0] - 2.0) < 1e-12

    def test_fifth_order_convergence(self):
        sys_ = OdeSystem("decay", 1, lambda x, b: -x)

        def terminal_error(dt):
            x = np.array([1.0])
            for _ in range(int(round(1.0 / dt))):
                x = rk5_step(sys_, x, 0.0, dt)
            return abs(x[0] - math.exp(-1.0))

        assert terminal_error(0.1) / terminal_error(0.05) >= 16.0

    def test_divergent_drift_raises(self):
        sys_ = OdeSystem("blow", 1, lambda x, b: x * np.inf)
        with pytest.raises(DivergenceError):
            rk5_step(sys_, np.array([1.0]), 0.0, 0.1)


class TestSimulate:
    def test_saddle_node_converges_to_stable_root(self):
        # oracle: root of the drift near 2.0 found by brentq
        sys_ = saddle_node()
        root = brentq(lambda x: sys_.drift(np.array([x]), 1.0)[0], 1.5, 2.5)
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=20.0)
        cfg = SimConfig(x0=(1.8,), sigma=0.0, seed=0)
        run = simulate(sys_, ramp, cfg)
        assert abs(run.values[-1, 0] - root) < 1e-6
        assert abs(root - 2.0) < 1e-12

    def test_hopf_origin_attracts(self):
        ramp = RampSchedule(beta0=-1.0, rate=0.0, t_end=20.0)
        cfg = SimConfig(x0=(0.1, 0.0), sigma=0.0, seed=0)
        run = simulate(hopf(), ramp, cfg)
        assert np.linalg.norm(run.values[-1]) < 1e-6

    def test_tipping_run_falls_to_lower_branch(self):
        # after beta crosses 0 the upper branch is gone; state settles near -1
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=-0.02, t_end=80.0)
        cfg = SimConfig(x0=(1.8,), sigma=0.0, seed=0)
        run = simulate(sys_, ramp, cfg)
        assert abs(run.values[-1, 0] - (-1.0)) < 1e-3
        before = run.values[run.times < 40.0, 0]
        assert before.min() > 0.9  # still on the upper branch pre-crossing

    def test_determinism_bit_identical(self):
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=-0.01, t_end=30.0)
        cfg = SimConfig(x0=(1.8,), sigma=0.02, seed=123)
        a = simulate(sys_, ramp, cfg)
        b = simulate(sys_, ramp, cfg)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.times, b.times)

    def test_uniform_timestamps(self):
        run = simulate(
            saddle_node(),
            RampSchedule(beta0=1.0, rate=0.0, t_end=5.0),
            SimConfig(x0=(1.8,), seed=1),
        )
        steps = np.diff(run.times)
        assert np.allclose(steps, steps[0], rtol=1e-12)

    def test_noise_statistics_pure_diffusion(self):
        # drift 0: sampled increments are iid N(0, sigma^2)
        sys_ = OdeSystem("flat", 1, lambda x, b: np.zeros_like(x))
        sigma = 0.05
        run = simulate(
            sys_,
            RampSchedule(beta0=0.0, rate=0.0, t_end=400.0),
            SimConfig(x0=(0.0,), dt=0.01, sample_every=10, sigma=sigma, seed=7),
        )
        inc = np.diff(run.values[:, 0])
        n = inc.size
        assert abs(inc.mean()) < 3 * sigma / math.sqrt(n)
        assert abs(inc.std(ddof=1) - sigma) < 3 * sigma / math.sqrt(n)

    def test_divergence_truncates_and_flags(self):
        sys_ = OdeSystem("explode", 1, lambda x, b: x**3)
        with np.errstate(over="ignore", invalid="ignore"):
            run = simulate(
                sys_,
                RampSchedule(beta0=0.0, rate=0.0, t_end=50.0),
                SimConfig(x0=(1.5,), dt=0.01, sample_every=5, sigma=0.0, seed=0),
            )
        assert "diverged_t=" in run.meta
        assert run.times[-1] < 50.0


class TestRampSchedule:
    def test_crossing_time_closed_form(self):
        ramp = RampSchedule(beta0=1.0, rate=-0.01, t_end=200.0)
        assert ramp.crossing_time(0.0) == pytest.approx(100.0)

    def test_zero_rate_never_crosses(self):
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=200.0)
        assert ramp.crossing_time(0.0) is None

    def test_ramp_beyond_horizon_does_not_cross(self):
        ramp = RampSchedule(beta0=1.0, rate=-0.001, t_end=200.0)
        assert ramp.crossing_time(0.0) is None

    def test_clamp_blocks_crossing(self):
        ramp = RampSchedule(beta0=1.0, rate=-0.01, t_end=500.0, clamp=0.2)
        assert ramp.crossing_time(0.0) is None
        assert ramp.beta_at(400.0) == pytest.approx(0.2)

    def test_clamped_ramp_settles_at_clamped_equilibrium(self):
        # beta pinned at 0.25 -> stable root 1 + sqrt(0.25) = 1.5
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=-0.01, t_end=275.0, clamp=0.25)
        run = simulate(sys_, ramp, SimConfig(x0=(1.8,), sigma=0.0, seed=0))
        assert abs(run.values[-1, 0] - 1.5) < 1e-5

    def test_divergence_error_carries_time(self):
        sys_ = OdeSystem("blow", 1, lambda x, b: x * np.inf)
        with pytest.raises(DivergenceError) as err:
            simulate(
                sys_,
                RampSchedule(beta0=0.0, rate=0.0, t_end=5.0),
                SimConfig(x0=(1.0,), sigma=0.0, seed=0),
            )
        assert err.value.time == pytest.approx(0.01)


class TestMakeEnsemble:
    def test_zero_rate_runs_are_null(self):
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=10.0)
        cfg = SimConfig(x0=(1.8,), seed=0)
        members = make_ensemble(sys_, ramp, [0.0], 5, cfg)
        assert len(members) == 5
        assert all(not m.tipping for m in members)
        seeds = {m.seed for m in members}
        assert len(seeds) == 5

    def test_pre_tipping_segment_length(self):
        # beta reaches 0 at t = 100; dt=0.01, sample_every=10 -> 1000 samples
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=200.0)
        cfg = SimConfig(x0=(1.8,), dt=0.01, sample_every=10, sigma=0.01, seed=2)
        (member,) = make_ensemble(sys_, ramp, [-0.01], 1, cfg)
        assert member.tipping
        assert member.crossing_time == pytest.approx(100.0)
        assert member.series.n_samples == 1000
        assert member.series.times[-1] < 100.0

    def test_mixed_rates_labels_match_crossing_arithmetic(self):
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=150.0)
        cfg = SimConfig(x0=(1.8,), seed=5)
        rates = [0.0, -0.004, -0.01, -0.05]
        members = make_ensemble(sys_, ramp, rates, 1, cfg)
        expected = [1.0 / abs(r) <= 150.0 if r != 0 else False for r in rates]
        assert [m.tipping for m in members] == expected

    def test_empty_rates_rejected(self):
        with pytest.raises(ConfigurationError):
            make_ensemble(
                saddle_node(),
                RampSchedule(beta0=1.0, rate=0.0, t_end=10.0),
                [],
                1,
                SimConfig(x0=(1.8,)),
            )

    def test_determinism_across_calls(self):
        sys_ = saddle_node()
        ramp = RampSchedule(beta0=1.0, rate=0.0, t_end=10.0)
        cfg = SimConfig(x0=(1.8,), seed=9)
        a = make_ensemble(sys_, ramp, [-0.05, 0.0], 2, cfg)
        b = make_ensemble(sys_, ramp, [-0.05, 0.0], 2, cfg)
        for ma, mb in zip(a, b):
            np.testing.assert_array_equal(ma.series.values, mb.series.values)

    @pytest.mark.parametrize("system", ["saddle_node", "hopf"])
    def test_members_bit_identical_to_standalone_runs(self, system):
        # the lockstep ensemble path must reproduce simulate() exactly
        from reskmd.simulate import get_system
        from dataclasses import replace

        sys_ = get_system(system)
        x0 = (1.8,) if system == "saddle_node" else (0.1, 0.0)
        beta0 = 1.0 if system == "saddle_node" else -1.0
        rate = -0.05 if system == "saddle_node" else 0.05
        ramp = RampSchedule(beta0=beta0, rate=0.0, t_end=12.0)
        cfg = SimConfig(x0=x0, sigma=0.02, seed=17)
        members = make_ensemble(sys_, ramp, [rate, 0.0], 2, cfg)
        for m in members:
            solo = simulate(sys_, replace(ramp, rate=m.rate), replace(cfg, seed=m.seed))
            np.testing.assert_array_equal(m.full_series.values, solo.values)
            np.testing.assert_array_equal(m.full_series.times, solo.times)
