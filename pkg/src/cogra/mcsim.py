"""Monte Carlo oracle for collision ratios and throughput.

The primary user's activity over the transmit window is simulated as an
alternating sequence of exponential ON/OFF sojourns. Memorylessness lets every
trial start with a fresh residual sojourn in its initial state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .scenario import Scenario
from .sensing import SensingSpec, posterior_given_idle
from .traffic import TrafficModel

CHUNK = 20_000


class StartState(str, Enum):
    IDLE = "idle"
    BUSY = "busy"
    STATIONARY = "stationary"  # drawn from the priors
    IDLE_DECISION = "idle-decision"  # drawn from the posteriors given an idle decision


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    seed: int = 0
    start_state: StartState = StartState.STATIONARY

    def __post_init__(self):
        object.__setattr__(self, "start_state", StartState(self.start_state))
        if self.trials < 1000:
            raise ValueError(f"need at least 1000 trials, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


def _rng(seed, chunk):
    # one independent Philox stream per chunk, so results do not depend on
    # how chunks are scheduled
    return np.random.Generator(np.random.Philox(key=[seed, chunk]))


def _p_busy_start(traffic, state, sensing):
    if state is StartState.IDLE:
        return 0.0
    if state is StartState.BUSY:
        return 1.0
    if state is StartState.STATIONARY:
        return traffic.priors()[1]
    if sensing is None:
        raise ValueError("the idle-decision start state needs a sensing spec")
    return posterior_given_idle(traffic, sensing.p_d, sensing.p_f).post_busy


def _segments_needed(traffic, horizon):
    # enough alternations that running short is rare; short rows are redrawn
    per_cycle = traffic.mean_on + traffic.mean_off
    return int(2 * math.ceil(horizon / per_cycle + 6.0 * math.sqrt(horizon / per_cycle + 1.0)) + 8)


def overlap_samples(traffic: TrafficModel, horizon, start_busy, rng):
    """ON time inside ``(0, horizon]`` for each entry of ``start_busy``."""
    start_busy = np.asarray(start_busy, dtype=bool)
    k = _segments_needed(traffic, horizon)
    out = np.empty(start_busy.size)
    todo = np.arange(start_busy.size)
    while todo.size:
        draws = rng.standard_exponential((todo.size, k))
        ov, short = kernels.renewal_overlap(
            start_busy[todo], draws, traffic.mean_on, traffic.mean_off, horizon
        )
        done = ~np.asarray(short, dtype=bool)
        out[todo[done]] = ov[done]
        todo = todo[~done]
        k *= 2
    return out


def _chunks(trials):
    for c, lo in enumerate(range(0, trials, CHUNK)):
        yield c, min(CHUNK, trials - lo)


def _mean_se(total, total_sq, n):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def simulate_collision(
    traffic: TrafficModel,
    frame,
    tau,
    cfg: SimConfig,
    sensing: Optional[SensingSpec] = None,
):
    """Mean collision ratio over the transmit window ``(tau, frame]`` and its standard error."""
    if not frame > tau:
        raise ValueError(f"frame {frame} ms must exceed tau={tau} ms")
    horizon = frame - tau
    p_busy = _p_busy_start(traffic, cfg.start_state, sensing)
    total = total_sq = 0.0
    for c, n in _chunks(cfg.trials):
        rng = _rng(cfg.seed, c)
        start = rng.random(n) < p_busy
        ratio = overlap_samples(traffic, horizon, start, rng) / horizon
        total += float(ratio.sum())
        total_sq += float(np.dot(ratio, ratio))
    return _mean_se(total, total_sq, cfg.trials)


PowerRule = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def simulate_throughput(scenario: Scenario, fixed_power_rule: PowerRule, cfg: SimConfig):
    """Average throughput (bits/s/Hz) of a power rule and its standard error.

    ``fixed_power_rule`` is a constant power or a function of the gain arrays
    ``(h, g)``. Each trial draws the initial channel state from the priors, a
    fading state and a trajectory; the frame's rate mixes the clean and the
    interfered log terms by the realized collision fraction and is weighted by
    the probability of an idle decision in that state. ``cfg.start_state`` is
    ignored.
    """
    tau = scenario.tau
    frame = scenario._fixed_frame()
    horizon = frame - tau
    duty = scenario.duty()
    traffic = scenario.traffic
    n0, s2 = scenario.consts.n0, scenario.consts.sigma_s2
    pr_busy = traffic.priors()[1]
    w_idle = 1.0 - scenario.sensing.p_f
    w_busy = 1.0 - scenario.sensing.p_d
    total = total_sq = 0.0
    for c, n in _chunks(cfg.trials):
        rng = _rng(cfg.seed, c)
        start = rng.random(n) < pr_busy
        h = rng.standard_exponential(n)
        g = rng.standard_exponential(n)
        if callable(fixed_power_rule):
            p = np.broadcast_to(np.asarray(fixed_power_rule(h, g), dtype=float), h.shape)
        else:
            p = np.full(n, float(fixed_power_rule))
        frac = overlap_samples(traffic, horizon, start, rng) / horizon
        clean = np.log1p(p * h / n0)
        noisy = np.log1p(p * h / (n0 + s2))
        rate = kernels.LOG2E * duty * np.where(start, w_busy, w_idle) * (
            (1.0 - frac) * clean + frac * noisy
        )
        total += float(rate.sum())
        total_sq += float(np.dot(rate, rate))
    return _mean_se(total, total_sq, cfg.trials)


def simulate_on_fraction(traffic: TrafficModel, horizon, cfg: SimConfig):
    """Fraction of ``(0, horizon]`` spent ON, starting from ``cfg.start_state``."""
    return simulate_collision(traffic, horizon, 0.0, cfg)
