"""Problem-instance containers shared by the policy evaluators and the optimizer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .fading import FadingGrid, build_grid
from .sensing import SensingSpec, posterior_given_idle
from .traffic import TrafficModel, collision_ratios, default_tf_cap


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelConstants:
    n0: float = 0.01
    sigma_s2: float = 0.1

    def __post_init__(self):
        if self.n0 <= 0.0 or self.sigma_s2 < 0.0:
            raise ValueError(f"need n0 > 0 and sigma_s2 >= 0, got {self.n0}, {self.sigma_s2}")


@dataclass(frozen=True)
class PowerConstraints:
    """Limits on the secondary link; powers are linear, not dB.

    Exactly one of ``p_avg`` (average transmit power) and ``p_pk`` (peak
    transmit power) must be given.
    """

    q_avg: float
    pc_max: float
    p_avg: Optional[float] = None
    p_pk: Optional[float] = None
    ee_min: Optional[float] = None
    p_cr: float = 1.0

    def __post_init__(self):
        if (self.p_avg is None) == (self.p_pk is None):
            raise ValueError("exactly one of p_avg and p_pk must be set")
        for name in ("p_avg", "p_pk", "q_avg"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not 0.0 < self.pc_max < 1.0:
            raise ValueError(f"pc_max must lie in (0, 1), got {self.pc_max}")
        if self.ee_min is not None and self.ee_min < 0.0:
            raise ValueError(f"ee_min must be >= 0, got {self.ee_min}")
        if not self.p_cr > 0.0:
            raise ValueError(f"p_cr must be positive, got {self.p_cr}")

    @property
    def peak(self):
        return self.p_pk is not None

    @property
    def clamp(self):
        return math.inf if self.p_pk is None else self.p_pk


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for the optimisation loops.

    ``budget_form`` selects the collision weight inside the min-EE budget
    policy: ``"collision"`` uses the mixed ratio ``pc`` (the exact
    stationary point), ``"printed"`` uses ``Pr{idle decision} * pc``.
    ``subgradient`` is ``"adaptive"`` (per-multiplier step control) or
    ``"fixed"`` (constant step ``step_t`` on the raw slacks).
    """

    step_t: float = 0.1
    dinkelbach_eps: float = 1e-5
    slack_delta: float = 1e-4
    max_inner: int = 5000
    max_outer: int = 50
    frame_grid: int = 200
    frame_tol: float = 1e-3
    tf_cap: Optional[float] = None
    grid_order: int = 64
    budget_form: str = "collision"
    subgradient: str = "adaptive"

    def __post_init__(self):
        for name in ("step_t", "dinkelbach_eps", "slack_delta", "frame_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_inner", "max_outer", "frame_grid"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.frame_grid < 3:
            raise ValueError("frame_grid must be >= 3")
        if self.budget_form not in ("collision", "printed"):
            raise ValueError(f"unknown budget_form {self.budget_form!r}")
        if self.subgradient not in ("adaptive", "fixed"):
            raise ValueError(f"unknown subgradient mode {self.subgradient!r}")


@dataclass(frozen=True, eq=False)
class Scenario:
    """A full problem instance. ``frame`` is in ms; ``None`` means free."""

    traffic: TrafficModel
    sensing: SensingSpec
    limits: PowerConstraints
    consts: ChannelConstants = field(default_factory=ChannelConstants)
    frame: Optional[float] = None
    grid: Optional[FadingGrid] = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", build_grid(self.solver.grid_order))
        if self.frame is not None and not self.frame > self.sensing.tau:
            raise ValueError(
                f"frame {self.frame} ms must exceed the sensing duration {self.sensing.tau} ms"
            )

    @property
    def tau(self):
        return self.sensing.tau

    @property
    def tf_cap(self):
        if self.solver.tf_cap is not None:
            return self.solver.tf_cap
        return default_tf_cap(self.traffic, self.tau)

    def with_frame(self, frame):
        return replace(self, frame=frame)

    def replace(self, **changes):
        return replace(self, **changes)

    def _fixed_frame(self):
        if self.frame is None:
            raise ValueError("scenario has no frame duration set")
        return self.frame

    def duty(self):
        """Fraction of the frame spent transmitting, ``(T_f - tau)/T_f``."""
        tf = self._fixed_frame()
        return (tf - self.tau) / tf

    def ratios(self):
        return collision_ratios(self.traffic, self.sensing, self._fixed_frame())

    def posterior(self):
        return posterior_given_idle(self.traffic, self.sensing.p_d, self.sensing.p_f)
