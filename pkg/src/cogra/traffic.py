"""Exponential ON/OFF primary-user model and collision-duration ratios.

All durations are in milliseconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .sensing import SensingSpec, posterior_given_idle


class CollisionInfeasible(ValueError):
    """No frame duration satisfies the collision-ratio limit."""


@dataclass(frozen=True)
class TrafficModel:
    """Alternating renewal process with exponential ON and OFF sojourns."""

    mean_on: float
    mean_off: float

    def __post_init__(self):
        if not (self.mean_on > 0.0 and self.mean_off > 0.0):
            raise ValueError(
                f"mean ON/OFF durations must be positive, got {self.mean_on}, {self.mean_off}"
            )

    def priors(self):
        """``(pr_idle, pr_busy)``."""
        pr_idle = self.mean_off / (self.mean_on + self.mean_off)
        return pr_idle, 1.0 - pr_idle

    @property
    def t_char(self):
        """Relaxation time of the ON/OFF chain, ``mean_on*mean_off/(mean_on+mean_off)``."""
        return self.mean_on * self.mean_off / (self.mean_on + self.mean_off)


VOIP = TrafficModel(mean_on=352.0, mean_off=650.0)
HEAVY = TrafficModel(mean_on=650.0, mean_off=350.0)


def priors(traffic: TrafficModel):
    return traffic.priors()


class CollisionRatios(NamedTuple):
    pc0: float
    pc1: float
    pc_avg: float


class FrameBound(NamedTuple):
    """Largest admissible frame and whether the collision limit is what caps it."""

    tf_max: float
    binding: bool


# pc sits within this distance of its asymptote at the default frame cap
CAP_GAP = 5e-5


def default_tf_cap(traffic: TrafficModel, tau=0.0):
    """Frame beyond which every collision ratio is within ``CAP_GAP`` of its limit.

    The gap to the asymptote is at most ``t_char / T_tx``, so the cap is
    ``tau + t_char / CAP_GAP``.
    """
    return tau + traffic.t_char / CAP_GAP


def _relax(x, t_tx):
    # (1 - exp(-x)) / x
    if t_tx < 1e-6:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def _relax_slope(x):
    # (1 - (1 + x) exp(-x)) / x**2
    if x < 1e-2:
        return 0.5 - x / 3.0 + x * x / 8.0 - x**3 / 30.0 + x**4 / 144.0
    return -(math.expm1(-x) + x * math.exp(-x)) / (x * x)


def conditional_ratios(traffic: TrafficModel, t_tx):
    """Collision ratios ``(pc0, pc1)`` for a transmit window of ``t_tx`` ms.

    ``pc0`` conditions on the channel being idle at the start of transmission,
    ``pc1`` on it being busy.
    """
    if t_tx <= 0.0:
        raise ValueError(f"transmit duration must be positive, got {t_tx}")
    pr_idle, pr_busy = traffic.priors()
    tc = traffic.t_char
    phi = _relax(t_tx / tc, t_tx)
    # pr_busy*tc == mean_off*pr_busy**2 and pr_idle*tc == mean_on*pr_idle**2
    pc0 = pr_busy - pr_busy * phi
    pc1 = pr_busy + pr_idle * phi
    return pc0, pc1


def collision_ratios(traffic: TrafficModel, sensing: SensingSpec, frame, tau=None):
    """Collision-duration ratios for a frame of ``frame`` ms.

    ``tau`` defaults to the sensing duration of ``sensing``.
    """
    tau = sensing.tau if tau is None else tau
    if frame <= tau:
        raise ValueError(f"frame {frame} ms leaves no transmit phase after tau={tau} ms")
    pc0, pc1 = conditional_ratios(traffic, frame - tau)
    post = posterior_given_idle(traffic, sensing.p_d, sensing.p_f)
    return CollisionRatios(pc0, pc1, post.post_idle * pc0 + post.post_busy * pc1)


def collision_ratio_derivative(traffic: TrafficModel, sensing: SensingSpec, frame, tau=None):
    """d pc_avg / d frame, in 1/ms."""
    tau = sensing.tau if tau is None else tau
    if frame <= tau:
        raise ValueError(f"frame {frame} ms leaves no transmit phase after tau={tau} ms")
    pr_idle, pr_busy = traffic.priors()
    post = posterior_given_idle(traffic, sensing.p_d, sensing.p_f)
    tc = traffic.t_char
    weight = post.post_idle * traffic.mean_off * pr_busy**2 - (
        post.post_busy * traffic.mean_on * pr_idle**2
    )
    return weight * _relax_slope((frame - tau) / tc) / tc**2


def max_frame_for_collision(
    traffic: TrafficModel,
    sensing: SensingSpec,
    tau,
    pc_max,
    tf_cap=None,
    tol=1e-3,
):
    """Largest frame duration whose average collision ratio stays below ``pc_max``.

    Raises
    ------
    CollisionInfeasible
        If the limit is violated for every frame (``pc_max`` below the
        post-decision busy probability).
    """
    if not 0.0 < pc_max < 1.0:
        raise ValueError(f"pc_max must lie in (0, 1), got {pc_max}")
    if tf_cap is None:
        tf_cap = default_tf_cap(traffic, tau)
    if tf_cap <= tau:
        raise ValueError(f"tf_cap={tf_cap} must exceed tau={tau}")
    post = posterior_given_idle(traffic, sensing.p_d, sensing.p_f)
    _, pr_busy = traffic.priors()

    if sensing.p_f >= sensing.p_d:
        if post.post_busy <= pc_max:
            return FrameBound(tf_cap, False)
        raise CollisionInfeasible(
            f"post_busy={post.post_busy:.6g} exceeds pc_max={pc_max:.6g}"
        )
    if post.post_busy > pc_max:
        raise CollisionInfeasible(
            f"post_busy={post.post_busy:.6g} exceeds pc_max={pc_max:.6g}"
        )
    if pr_busy <= pc_max:
        return FrameBound(tf_cap, False)

    def pc(tf):
        return collision_ratios(traffic, sensing, tf, tau).pc_avg

    if pc(tf_cap) <= pc_max:
        return FrameBound(tf_cap, False)
    lo, hi = tau, tf_cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pc(mid) <= pc_max:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol and (lo == tau or pc_max - pc(lo) < 1e-9):
            break
    return FrameBound(lo, True)
