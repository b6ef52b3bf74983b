"""Closed-form power policies and the rate/power/EE evaluators built on them.

Every policy variant reduces to the same per-node rule: the positive root of

    log2(e) * [(1 - w) h / (n0 + P h) + w h / (n0 + s2 + P h)] = d0 + kg * g

clipped to ``[0, clamp]``, where ``w`` is the collision weight. The variants
differ only in how ``(d0, kg, w, clamp)`` are formed from the multipliers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .scenario import ChannelConstants, PowerConstraints, Scenario
from .traffic import CollisionRatios

LOG2E = kernels.LOG2E


class InvalidVariantParams(ValueError):
    """A multiplier required by the policy variant is missing."""


class Variant(str, Enum):
    EE_AVG = "ee-avg"  # EE, average transmit + interference limits
    EE_PEAK = "ee-peak"  # EE, peak transmit + interference limits
    MIN_EE_BUDGET = "min-ee-budget"  # power level meeting EE_min with equality
    RATE_MIN_EE_AVG = "rate-min-ee-avg"
    RATE_MIN_EE_PEAK = "rate-min-ee-peak"


@dataclass(frozen=True)
class PolicyParams:
    """Multipliers selecting one member of the closed-form policy family.

    ``lam``/``nu`` belong to the average-power EE policy, ``mu`` to the
    peak-power EE policy, ``vartheta``/``varphi`` to the throughput policies
    and ``eta`` to the min-EE budget policy. ``pc`` is the average collision
    ratio in effect and ``pr_idle_decision`` the probability of sensing idle.
    """

    variant: Variant
    pc: float
    pr_idle_decision: float
    alpha: float = 0.0
    lam: Optional[float] = None
    nu: Optional[float] = None
    mu: Optional[float] = None
    vartheta: Optional[float] = None
    varphi: Optional[float] = None
    eta: Optional[float] = None
    budget_form: str = "collision"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("alpha", "lam", "nu", "mu", "vartheta", "varphi", "eta"):
            v = getattr(self, name)
            if v is not None and not v >= 0.0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if not 0.0 <= self.pc <= 1.0:
            raise ValueError(f"pc must lie in [0, 1], got {self.pc}")

    def replace(self, **changes):
        return replace(self, **changes)


def _need(params, *names):
    for n in names:
        if getattr(params, n) is None:
            raise InvalidVariantParams(f"{params.variant.value} policy needs {n}")


def policy_coefficients(params: PolicyParams, limits: Optional[PowerConstraints] = None):
    """``(d0, kg, w, clamp)`` of the per-node rule for ``params``."""
    v = params.variant
    pc = params.pc
    clamp = math.inf
    if v is Variant.EE_AVG:
        _need(params, "lam", "nu")
        return params.alpha + params.lam, params.nu * pc, pc, clamp
    if v is Variant.RATE_MIN_EE_AVG:
        _need(params, "vartheta", "varphi")
        return params.vartheta, params.varphi * pc, pc, clamp
    if limits is None:
        raise InvalidVariantParams(f"{v.value} policy needs the power constraints")
    if v is Variant.EE_PEAK:
        _need(params, "mu")
        return params.alpha, params.mu * pc, pc, _peak(limits)
    if v is Variant.RATE_MIN_EE_PEAK:
        _need(params, "vartheta", "varphi")
        return params.vartheta, params.varphi * pc, pc, _peak(limits)
    # min-EE budget policy
    _need(params, "eta")
    if limits.ee_min is None:
        raise InvalidVariantParams("min-ee-budget policy needs ee_min")
    eta = params.eta
    d0 = limits.ee_min if math.isinf(eta) else eta * limits.ee_min / (1.0 + eta)
    if params.budget_form == "printed":
        w = params.pr_idle_decision * pc
    else:
        w = pc
    return d0, 0.0, w, limits.clamp


def _peak(limits):
    if limits.p_pk is None:
        raise InvalidVariantParams("peak-power policy needs p_pk")
    return limits.p_pk


def optimal_power(params, gains, consts: ChannelConstants, limits=None):
    """Optimal transmit power at fading state(s) ``gains = (gain_h, gain_g)``."""
    gain_h, gain_g = gains
    d0, kg, w, clamp = policy_coefficients(params, limits)
    h = np.atleast_1d(np.asarray(gain_h, dtype=float))
    g = np.broadcast_to(np.asarray(gain_g, dtype=float), h.shape)
    p = kernels.policy_power(h, g, d0, kg, consts.n0, consts.sigma_s2, w, clamp)
    if np.ndim(gain_h) == 0 and np.ndim(gain_g) == 0:
        return float(p[0])
    return p


def kkt_residual(params, gains, power, consts: ChannelConstants, limits=None):
    """Per-node stationarity residual of the policy's Lagrangian.

    ``log2(e) [(1-w) h/(n0+P h) + w h/(n0+s2+P h)] - (d0 + kg g)``. It is zero
    at an interior optimum and nonpositive when the power is zero. Where a
    peak clamp is active the peak multiplier absorbs any positive part, so
    only a negative residual is reported there.
    """
    gain_h, gain_g = gains
    d0, kg, w, clamp = policy_coefficients(params, limits)
    h = np.asarray(gain_h, dtype=float)
    g = np.asarray(gain_g, dtype=float)
    p = np.asarray(power, dtype=float)
    n0, s2 = consts.n0, consts.sigma_s2
    raw = LOG2E * ((1.0 - w) * h / (n0 + p * h) + w * h / (n0 + s2 + p * h)) - (d0 + kg * g)
    if math.isfinite(clamp):
        raw = np.where(p >= clamp, np.minimum(raw, 0.0), raw)
    return float(raw) if raw.ndim == 0 else raw


class PolicyEval(NamedTuple):
    rate: float
    avg_tx_power: float
    avg_interference: float
    ee: float


def rate_weights(scenario: Scenario, ratios: Optional[CollisionRatios] = None):
    """Weights ``(clean, interfered)`` of the two log-rate terms in the average rate.

    Each is summed over the true channel state at the start of the frame,
    jointly with an idle sensing decision.
    """
    if ratios is None:
        ratios = scenario.ratios()
    pr_idle, pr_busy = scenario.traffic.priors()
    a = pr_idle * (1.0 - scenario.sensing.p_f)
    b = pr_busy * (1.0 - scenario.sensing.p_d)
    clean = a * (1.0 - ratios.pc0) + b * (1.0 - ratios.pc1)
    noisy = a * ratios.pc0 + b * ratios.pc1
    return clean, noisy


def evaluate(params: PolicyParams, scenario: Scenario, ratios=None) -> PolicyEval:
    """Average rate, average transmit power, average interference and EE in one pass."""
    grid = scenario.grid
    consts = scenario.consts
    d0, kg, w, clamp = policy_coefficients(params, scenario.limits)
    ep, epg, e_clean, e_noisy = kernels.rate_moments(
        grid.gain_h, grid.gain_g, grid.weight, d0, kg, consts.n0, consts.sigma_s2, w, clamp
    )
    return _assemble(scenario, params.pc, params.pr_idle_decision, ep, epg, e_clean, e_noisy, ratios)


def _assemble(scenario, pc, pr_idle_decision, ep, epg, e_clean, e_noisy, ratios=None):
    duty = scenario.duty()
    wc, wn = rate_weights(scenario, ratios)
    if ep == 0.0:
        rate = 0.0
    else:
        rate = duty * (wc * e_clean + wn * e_noisy)
    tx = duty * pr_idle_decision * ep
    interference = duty * pc * pr_idle_decision * epg
    return PolicyEval(rate, tx, interference, rate / (tx + scenario.limits.p_cr))


def avg_rate(params, scenario, ratios=None):
    """Average throughput in bits/s/Hz."""
    r = evaluate(params, scenario, ratios).rate
    if not math.isfinite(r):
        from .fading import NonFiniteIntegrand

        raise NonFiniteIntegrand("average rate is not finite for this policy")
    return r


def resource_usage(params, scenario):
    """``(avg_tx_power, avg_interference)`` of the policy."""
    grid = scenario.grid
    consts = scenario.consts
    d0, kg, w, clamp = policy_coefficients(params, scenario.limits)
    ep, epg = kernels.policy_moments(
        grid.gain_h, grid.gain_g, grid.weight, d0, kg, consts.n0, consts.sigma_s2, w, clamp
    )
    duty = scenario.duty()
    return duty * params.pr_idle_decision * ep, duty * params.pc * params.pr_idle_decision * epg


def energy_efficiency(params, scenario):
    """Average rate over total consumed power, bits/joule."""
    return evaluate(params, scenario).ee


def params_for(scenario: Scenario, variant, **multipliers):
    """PolicyParams with ``pc`` and ``Pr{idle decision}`` taken from ``scenario``."""
    return PolicyParams(
        variant=variant,
        pc=scenario.ratios().pc_avg,
        pr_idle_decision=scenario.posterior().pr_idle_decision,
        budget_form=scenario.solver.budget_form,
        **multipliers,
    )


def constant_power_eval(power, scenario, ratios=None) -> PolicyEval:
    """Evaluation of a constant (channel-independent) transmit power."""
    grid = scenario.grid
    consts = scenario.consts
    post = scenario.posterior()
    pc = (ratios or scenario.ratios()).pc_avg
    if power <= 0.0:
        return _assemble(scenario, pc, post.pr_idle_decision, 0.0, 0.0, 0.0, 0.0, ratios)
    ph = power * grid.gain_h
    e_clean = float(np.dot(grid.weight, np.log1p(ph / consts.n0))) * LOG2E
    e_noisy = float(np.dot(grid.weight, np.log1p(ph / (consts.n0 + consts.sigma_s2)))) * LOG2E
    epg = power * float(np.dot(grid.weight, grid.gain_g))
    return _assemble(scenario, pc, post.pr_idle_decision, power, epg, e_clean, e_noisy, ratios)


def interference_limited_power(scenario, p_pk=None):
    """Constant power that meets the interference limit with equality, capped at ``p_pk``.

    This is the fixed-power rule ``min{p_pk, T_f/(T_f - tau) * Q_avg /
    (Pr{H0, idle} pc0 + Pr{H1, idle} pc1)}``.
    """
    ratios = scenario.ratios()
    pr_idle, pr_busy = scenario.traffic.priors()
    a = pr_idle * (1.0 - scenario.sensing.p_f)
    b = pr_busy * (1.0 - scenario.sensing.p_d)
    den = a * ratios.pc0 + b * ratios.pc1
    p = math.inf if den == 0.0 else scenario.limits.q_avg / (scenario.duty() * den)
    cap = scenario.limits.p_pk if p_pk is None else p_pk
    return p if cap is None else min(cap, p)
