import numpy as np
import pytest

from cogra.mcsim import (
    SimConfig,
    StartState,
    overlap_samples,
    simulate_collision,
    simulate_on_fraction,
    simulate_throughput,
)
from cogra.policy import Variant, constant_power_eval, evaluate, optimal_power
from cogra.optimizer import solve_multipliers
from cogra.sensing import SensingSpec
from cogra.traffic import VOIP, TrafficModel, collision_ratios, conditional_ratios


def cfg(state, trials=100_000, seed=0):
    return SimConfig(trials=trials, seed=seed, start_state=state)


class TestConfig:
    def test_minimum_trials(self):
        with pytest.raises(ValueError):
            SimConfig(trials=999)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            SimConfig(seed=2**64)
        with pytest.raises(ValueError):
            SimConfig(seed=-1)

    def test_state_from_string(self):
        assert SimConfig(start_state="busy").start_state is StartState.BUSY

    def test_frame_must_exceed_tau(self):
        with pytest.raises(ValueError):
            simulate_collision(VOIP, 5.0, 5.0, SimConfig())

    def test_idle_decision_needs_sensing(self):
        with pytest.raises(ValueError):
            simulate_collision(VOIP, 100.0, 0.0, SimConfig(start_state="idle-decision"))


class TestCollision:
    def test_voip_idle_start(self):
        m, se = simulate_collision(VOIP, 100.0, 0.0, cfg("idle"))
        pc0, _ = conditional_ratios(VOIP, 100.0)
        assert pc0 == pytest.approx(0.0668, abs=1e-4)
        assert abs(m - pc0) <= 3 * se

    def test_voip_busy_start(self):
        m, se = simulate_collision(VOIP, 100.0, 0.0, cfg("busy"))
        _, pc1 = conditional_ratios(VOIP, 100.0)
        assert pc1 == pytest.approx(0.8766, abs=1e-4)
        assert abs(m - pc1) <= 3 * se

    def test_tiny_window_limits(self):
        busy, _ = simulate_collision(VOIP, 1e-4, 0.0, cfg("busy", 5000))
        idle, _ = simulate_collision(VOIP, 1e-4, 0.0, cfg("idle", 5000))
        assert busy > 1 - 1e-5
        assert idle < 1e-5

    @pytest.mark.parametrize("seed", range(4))
    def test_random_instances_idle_decision(self, seed):
        rng = np.random.default_rng(100 + seed)
        tr = TrafficModel(float(rng.uniform(50, 1000)), float(rng.uniform(50, 1000)))
        sens = SensingSpec(float(rng.uniform(0.6, 0.99)), float(rng.uniform(0.01, 0.3)), tau=5.0)
        frame = float(rng.uniform(10, 1000))
        m, se = simulate_collision(tr, frame, 5.0, cfg("idle-decision", 50_000, seed), sens)
        assert abs(m - collision_ratios(tr, sens, frame, 5.0).pc_avg) <= 3 * se

    def test_deterministic(self):
        a = simulate_collision(VOIP, 300.0, 7.0, cfg("stationary", 20_000, 7))
        b = simulate_collision(VOIP, 300.0, 7.0, cfg("stationary", 20_000, 7))
        c = simulate_collision(VOIP, 300.0, 7.0, cfg("stationary", 20_000, 8))
        assert a == b
        assert a != c

    def test_trends_follow_the_limits(self):
        windows = [20.0, 200.0, 2000.0]
        pc0 = [simulate_collision(VOIP, t, 0.0, cfg("idle", 20_000))[0] for t in windows]
        pc1 = [simulate_collision(VOIP, t, 0.0, cfg("busy", 20_000))[0] for t in windows]
        pr_busy = VOIP.priors()[1]
        assert pc0[0] < pc0[1] < pc0[2] < pr_busy
        assert pc1[0] > pc1[1] > pc1[2] > pr_busy

    def test_long_run_on_fraction(self):
        pr_busy = VOIP.priors()[1]
        m, se = simulate_on_fraction(VOIP, 20 * (VOIP.mean_on + VOIP.mean_off), cfg("idle", 20_000))
        # idle start biases the mean down by at most t_char / horizon
        bias = VOIP.t_char / (20 * (VOIP.mean_on + VOIP.mean_off)) * pr_busy
        assert abs(m - (pr_busy - bias)) <= 3 * se + 1e-3
        m, se = simulate_on_fraction(VOIP, 5000.0, cfg("stationary", 20_000))
        assert abs(m - pr_busy) <= 3 * se

    def test_short_rows_are_redrawn(self):
        # horizon far beyond the first segment budget still returns valid overlaps
        rng = np.random.default_rng(0)
        tr = TrafficModel(1.0, 1.0)
        out = overlap_samples(tr, 500.0, np.zeros(200, dtype=bool), rng)
        assert np.all((out >= 0) & (out <= 500.0))
        assert out.mean() / 500.0 == pytest.approx(0.5, abs=0.02)


class TestThroughput:
    def test_zero_power(self, make_scenario):
        m, se = simulate_throughput(make_scenario(), 0.0, SimConfig(trials=5000))
        assert m == 0.0 and se == 0.0

    def test_constant_power_matches_quadrature(self, make_scenario):
        sc = make_scenario(frame=200.0, grid_order=64)
        m, se = simulate_throughput(sc, 5.0, SimConfig())
        ref = constant_power_eval(5.0, sc).rate
        assert abs(m - ref) <= 3 * se
        assert se / m < 0.01

    def test_policy_rule_matches_quadrature(self, make_scenario):
        sc = make_scenario(frame=150.0, p_avg_db=0.0, q_avg_db=-10.0, grid_order=64)
        params = solve_multipliers(sc, 0.5).params

        def rule(h, g):
            return optimal_power(params, (h, g), sc.consts, sc.limits)

        m, se = simulate_throughput(sc, rule, SimConfig(seed=3))
        assert abs(m - evaluate(params, sc).rate) <= 3 * se

    def test_deterministic(self, make_scenario):
        sc = make_scenario()
        assert simulate_throughput(sc, 2.0, SimConfig(trials=5000, seed=4)) == simulate_throughput(
            sc, 2.0, SimConfig(trials=5000, seed=4)
        )
