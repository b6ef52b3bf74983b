"""Joint power-policy and frame-duration optimisation.

Two problems are solved:

* EE maximisation: Dinkelbach's method over the EE ratio, with the
  constraint multipliers found by projected subgradient iterations, and a
  one-dimensional search over the frame duration.
* Throughput maximisation under a minimum EE: the average power level at
  which EE_min binds is found first, then the throughput policy runs under
  the resulting effective power budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from .policy import (
    PolicyEval,
    PolicyParams,
    Variant,
    constant_power_eval,
    evaluate,
    params_for,
    resource_usage,
)
from .scenario import Scenario, SolverConfig  # noqa: F401  (re-exported)
from .traffic import CollisionInfeasible, max_frame_for_collision

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class MaxIterations(RuntimeError):
    """An iteration cap was hit before the stopping rule was met."""

    def __init__(self, msg, multipliers=None, slacks=None):
        super().__init__(msg)
        self.multipliers = multipliers
        self.slacks = slacks


class NoBinding(ValueError):
    """EE_min exceeds the largest EE any power level can reach."""


class OperatingCase(str, Enum):
    BUDGET_BINDS = "budget-binds"  # EE_min sets the power budget
    AVG_TX_BINDS = "avg-tx-binds"  # P_avg is tighter than the EE_min budget
    PEAK_BINDS = "peak-binds"  # peak variant: EE_min is met even at full peak power
    INFEASIBLE = "infeasible"


@dataclass
class OptResult:
    feasible: bool
    tf_opt: float
    ee: float
    rate: float
    params: Optional[PolicyParams]
    slacks: Dict[str, float] = field(default_factory=dict)
    iterations: tuple = (0, 0)
    pc_avg: float = 0.0
    multimodal: bool = False
    tf_max: float = 0.0
    case: Optional[OperatingCase] = None
    p_avg_star: Optional[float] = None
    avg_tx_power: float = 0.0
    avg_interference: float = 0.0

    @classmethod
    def infeasible(cls, **kw):
        return cls(feasible=False, tf_opt=0.0, ee=0.0, rate=0.0, params=None, **kw)


# --------------------------------------------------------------------------
# multipliers

# (multiplier name, constraint kind) per variant; "tx" limits average transmit
# power, "int" limits average interference
_CONSTRAINTS = {
    Variant.EE_AVG: (("lam", "tx"), ("nu", "int")),
    Variant.EE_PEAK: (("mu", "int"),),
    Variant.RATE_MIN_EE_AVG: (("vartheta", "tx"), ("varphi", "int")),
    Variant.RATE_MIN_EE_PEAK: (("vartheta", "tx"), ("varphi", "int")),
}


def ee_variant(scenario):
    return Variant.EE_PEAK if scenario.limits.peak else Variant.EE_AVG


def rate_variant(scenario):
    return Variant.RATE_MIN_EE_PEAK if scenario.limits.peak else Variant.RATE_MIN_EE_AVG


@dataclass
class MultiplierSolution:
    params: PolicyParams
    multipliers: Dict[str, float]
    slacks: Dict[str, float]
    iterations: int


def solve_multipliers(
    scenario: Scenario,
    alpha=0.0,
    variant: Optional[Variant] = None,
    budget: Optional[float] = None,
    start: Optional[Dict[str, float]] = None,
) -> MultiplierSolution:
    """Lagrange multipliers of the average-power constraints at a fixed frame.

    Iterates ``m <- (m - t * slack)^+`` for each multiplier until every
    complementary-slackness product ``|m * slack|`` is within
    ``solver.slack_delta`` and no constraint is violated by more than that.
    For the throughput variants ``budget`` replaces ``P_avg`` as the transmit
    limit; an infinite budget drops that constraint.

    With ``solver.subgradient == "adaptive"`` the step of each multiplier is
    scaled by the multiplier's own magnitude, grown while the slack keeps its
    sign and halved when it flips. A lone multiplier is found by bisection
    instead, and a pair that fails to settle falls back to nested bisection.
    ``"fixed"`` uses the plain update on raw slacks with step ``step_t``.
    """
    cfg = scenario.solver
    variant = ee_variant(scenario) if variant is None else Variant(variant)
    limits = scenario.limits
    post = scenario.posterior()
    pc = scenario.ratios().pc_avg

    lims = {}
    for name, kind in _CONSTRAINTS[variant]:
        if kind == "int":
            lims[name] = ("int", limits.q_avg)
        elif variant in (Variant.RATE_MIN_EE_AVG, Variant.RATE_MIN_EE_PEAK):
            b = budget if budget is not None else limits.p_avg
            lims[name] = ("tx", math.inf if b is None else b)
        else:
            lims[name] = ("tx", limits.p_avg)

    mult = {name: 0.0 for name in lims}
    if start:
        mult.update({k: v for k, v in start.items() if k in mult})
    for name, (_, lim) in lims.items():
        if math.isinf(lim):
            mult[name] = 0.0
    active = [n for n, (_, lim) in lims.items() if math.isfinite(lim)]
    start_mult = dict(mult)

    def make(m):
        return PolicyParams(
            variant=variant,
            pc=pc,
            pr_idle_decision=post.pr_idle_decision,
            alpha=alpha if variant in (Variant.EE_AVG, Variant.EE_PEAK) else 0.0,
            budget_form=cfg.budget_form,
            **m,
        )

    ref = {}
    for name in active:
        kind = lims[name][0]
        base = max(alpha, 1e-3) if kind == "tx" else max(alpha, 1e-3) / max(pc, 1e-6)
        ref[name] = base
    step = {n: cfg.step_t for n in active}
    last_sign = {n: 0 for n in active}
    delta = cfg.slack_delta

    if len(active) == 1 and cfg.subgradient == "adaptive":
        return _bisect_multipliers(scenario, make, mult, active, lims, ref)

    slacks = {}
    for it in range(cfg.max_inner + 1):
        params = make(mult)
        tx, inter = resource_usage(params, scenario)
        usage = {"tx": tx, "int": inter}
        slacks = {n: lims[n][1] - usage[lims[n][0]] for n in active}
        done = all(
            (mult[n] == 0.0 or abs(mult[n] * slacks[n]) <= delta)
            and slacks[n] >= -delta * min(1.0, lims[n][1])
            for n in active
        )
        if done:
            return MultiplierSolution(params, dict(mult), _all_slacks(slacks, lims), it)
        if it == cfg.max_inner:
            break
        for n in active:
            s = slacks[n]
            if cfg.subgradient == "fixed":
                mult[n] = max(0.0, mult[n] - cfg.step_t * s)
                continue
            rel = s / lims[n][1]
            rel = max(rel, -10.0) if not math.isnan(rel) else -10.0
            sign = 1 if rel > 0 else -1
            if mult[n] == 0.0 and sign > 0:
                last_sign[n] = 0
                continue
            if last_sign[n] == sign:
                step[n] = min(step[n] * 1.5, 10.0)
            elif last_sign[n] != 0:
                step[n] *= 0.5
            last_sign[n] = sign
            scale = max(mult[n], ref[n])
            nxt = mult[n] - step[n] * rel * scale
            # shrink towards zero instead of jumping there, so an overshoot
            # does not throw away the scale learned so far
            if nxt > 0.0:
                mult[n] = nxt
            elif 0.1 * mult[n] * abs(s) > delta:
                mult[n] *= 0.1
            else:
                mult[n] = 0.0
    if cfg.subgradient == "adaptive":
        return _bisect_multipliers(scenario, make, start_mult, active, lims, ref)
    raise MaxIterations(
        f"multipliers did not converge in {cfg.max_inner} iterations (slacks {slacks})",
        multipliers=dict(mult),
        slacks=dict(slacks),
    )


def _monotone_root(slack, start, ref, delta, tol, max_evals, name):
    """Smallest-enough ``m >= 0`` with ``slack(m) >= -tol`` and ``|m slack(m)| <= delta``.

    ``slack`` must be nondecreasing in ``m`` and return ``(value, payload)``.
    Returns ``(m, value, payload, evaluations)``.
    """
    evals = 1
    s0, p0 = slack(0.0)
    if s0 >= -tol:
        return 0.0, s0, p0, evals

    def fail(m, s):
        return MaxIterations(
            f"multipliers did not converge in {max_evals} iterations (slacks {{{name!r}: {s}}})",
            multipliers={name: m},
            slacks={name: s},
        )

    lo, hi = 0.0, max(start, ref)
    s_hi, p_hi = slack(hi)
    evals += 1
    while s_hi < 0.0:
        if evals > max_evals:
            raise fail(hi, s_hi)
        lo, hi = hi, hi * 4.0
        s_hi, p_hi = slack(hi)
        evals += 1
    # hi stays feasible; tighten until complementary slackness holds
    while abs(hi * s_hi) > delta and hi - lo > 1e-12 * hi:
        if evals > max_evals:
            raise fail(hi, s_hi)
        floor = max(lo, ref)
        mid = 0.5 * (lo + hi) if hi < 8.0 * floor else math.sqrt(floor * hi)
        s_mid, p_mid = slack(mid)
        evals += 1
        if s_mid >= 0.0:
            hi, s_hi, p_hi = mid, s_mid, p_mid
        else:
            lo = mid
    return hi, s_hi, p_hi, evals


def _bisect_multipliers(scenario, make, mult, active, lims, ref):
    # usage falls monotonically in a lone multiplier; with two, the transmit
    # usage also falls in the outer one once the inner one is re-solved
    cfg = scenario.solver
    delta = cfg.slack_delta

    def usage_slack(name, m):
        params = make(m)
        tx, inter = resource_usage(params, scenario)
        kind, lim = lims[name]
        return lim - (tx if kind == "tx" else inter), params

    def solve_inner(fixed):
        name = active[-1]
        lim = lims[name][1]
        m, s, params, n = _monotone_root(
            lambda x: usage_slack(name, {**fixed, name: x}),
            mult.get(name, 0.0),
            ref[name],
            delta,
            delta * min(1.0, lim),
            cfg.max_inner,
            name,
        )
        return {**fixed, name: m}, s, params, n

    if len(active) == 1:
        m, s, params, n = solve_inner(dict(mult))
        return MultiplierSolution(params, m, _all_slacks({active[0]: s}, lims), n)

    outer = active[0]
    inner = active[1]
    total = 0

    def outer_slack(x):
        nonlocal total
        m, s_in, params, n = solve_inner({**mult, outer: x})
        total += n
        s_out, _ = usage_slack(outer, m)
        return s_out, (m, s_in, params)

    lim = lims[outer][1]
    x, s_out, (m, s_in, params), n = _monotone_root(
        outer_slack, mult.get(outer, 0.0), ref[outer], delta, delta * min(1.0, lim), cfg.max_inner, outer
    )
    return MultiplierSolution(params, m, _all_slacks({outer: s_out, inner: s_in}, lims), total)


def _all_slacks(slacks, lims):
    out = {}
    for n, s in slacks.items():
        out["avg_tx" if lims[n][0] == "tx" else "interference"] = s
    return out


# --------------------------------------------------------------------------
# Dinkelbach


@dataclass
class DinkelbachResult:
    alpha: float
    params: PolicyParams
    evaluation: PolicyEval
    slacks: Dict[str, float]
    f_value: float
    alphas: list
    outer: int
    inner: int

    @property
    def multipliers(self):
        p = self.params
        return {k: getattr(p, k) for k in ("lam", "nu", "mu") if getattr(p, k) is not None}


def dinkelbach_ee(scenario: Scenario, variant=None, start=None) -> DinkelbachResult:
    """Maximum EE at the scenario's fixed frame.

    Starting from ``alpha = 0``, each step solves the parameterised problem
    ``max R - alpha * (power + P_cr)`` under the constraints and sets
    ``alpha`` to the EE of its solution, until ``|F(alpha)| <= eps``.
    """
    cfg = scenario.solver
    variant = ee_variant(scenario) if variant is None else Variant(variant)
    alpha = 0.0
    mult = dict(start or {})
    inner = 0
    alphas = []
    for k in range(cfg.max_outer):
        sol = solve_multipliers(scenario, alpha, variant, start=mult)
        mult = sol.multipliers
        inner += sol.iterations
        ev = evaluate(sol.params, scenario)
        f = ev.rate - alpha * (ev.avg_tx_power + scenario.limits.p_cr)
        alphas.append(alpha)
        if abs(f) <= cfg.dinkelbach_eps:
            return DinkelbachResult(alpha, sol.params, ev, sol.slacks, f, alphas, k + 1, inner)
        alpha = ev.ee
    raise MaxIterations(f"Dinkelbach did not converge in {cfg.max_outer} iterations")


# --------------------------------------------------------------------------
# frame search


def golden_max(f: Callable[[float], float], a, b, tol):
    """Maximiser of a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def frame_candidates(tau, tf_max, n):
    """Coarse frame grid: transmit durations log-spaced up to ``tf_max - tau``."""
    span = tf_max - tau
    lo = min(1.0, 1e-3 * span)
    return tau + np.geomspace(lo, span, n)


def count_sign_changes(values):
    d = np.diff(np.asarray(values, dtype=float))
    s = np.sign(d[np.abs(d) > 1e-12 * max(1.0, np.max(np.abs(values)))])
    return int(np.sum(s[1:] != s[:-1])) if s.size else 0


def search_frame(objective, tau, tf_max, cfg: SolverConfig):
    """Maximise ``objective(tf)`` over ``(tau, tf_max]``.

    Returns ``(tf_best, value, multimodal)``. The coarse grid maximum is
    refined by golden-section search between its neighbours; when the grid
    values are not unimodal the grid maximum is kept as is.
    """
    grid = frame_candidates(tau, tf_max, cfg.frame_grid)
    vals = np.array([objective(t) for t in grid])
    i = int(np.argmax(vals))
    multimodal = count_sign_changes(vals) > 1
    best_t, best_v = float(grid[i]), float(vals[i])
    if multimodal:
        return best_t, best_v, True
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, len(grid) - 1)])
    if b - a > cfg.frame_tol:
        t, v = golden_max(objective, a, b, cfg.frame_tol)
        if v > best_v:
            best_t, best_v = t, v
    return best_t, best_v, False


def _frame_bound(scenario):
    return max_frame_for_collision(
        scenario.traffic, scenario.sensing, scenario.tau, scenario.limits.pc_max, scenario.tf_cap
    )


def _collision_ok(scenario):
    return scenario.ratios().pc_avg <= scenario.limits.pc_max + 1e-12


# --------------------------------------------------------------------------
# EE maximisation


def _ee_result(scenario, dk: DinkelbachResult, tf_max, multimodal=False):
    ev = dk.evaluation
    slacks = dict(dk.slacks)
    slacks["collision"] = scenario.limits.pc_max - dk.params.pc
    return OptResult(
        feasible=True,
        tf_opt=scenario.frame,
        ee=ev.ee,
        rate=ev.rate,
        params=dk.params,
        slacks=slacks,
        iterations=(dk.outer, dk.inner),
        pc_avg=dk.params.pc,
        multimodal=multimodal,
        tf_max=tf_max,
        avg_tx_power=ev.avg_tx_power,
        avg_interference=ev.avg_interference,
    )


def optimize_ee(scenario: Scenario, variant=None) -> OptResult:
    """Jointly optimal power policy and frame duration for maximum EE.

    A fixed ``scenario.frame`` skips the frame search.
    """
    post = scenario.posterior()
    if scenario.limits.pc_max < post.post_busy:
        return OptResult.infeasible(pc_avg=post.post_busy)
    try:
        bound = _frame_bound(scenario)
    except CollisionInfeasible:
        return OptResult.infeasible(pc_avg=post.post_busy)
    if scenario.frame is not None:
        if not _collision_ok(scenario):
            return OptResult.infeasible(pc_avg=scenario.ratios().pc_avg, tf_max=bound.tf_max)
        return _ee_result(scenario, dinkelbach_ee(scenario, variant), bound.tf_max)

    warm = {}
    cache = {}

    def objective(tf):
        sc = scenario.with_frame(tf)
        dk = dinkelbach_ee(sc, variant, start=warm)
        warm.clear()
        warm.update(dk.multipliers)
        cache[tf] = dk
        return dk.alpha

    tf, _, multimodal = search_frame(objective, scenario.tau, bound.tf_max, scenario.solver)
    return _ee_result(scenario.with_frame(tf), cache[tf], bound.tf_max, multimodal)


def constant_power_ee(scenario: Scenario) -> OptResult:
    """Best EE with a channel-independent transmit power (baseline).

    At each frame the power is the EE-maximising constant level that meets the
    transmit and interference limits.
    """
    post = scenario.posterior()
    limits = scenario.limits
    try:
        bound = _frame_bound(scenario)
    except CollisionInfeasible:
        return OptResult.infeasible(pc_avg=post.post_busy)

    def at_frame(sc):
        duty = sc.duty()
        pc = sc.ratios().pc_avg
        caps = [limits.q_avg / (duty * pc * post.pr_idle_decision)] if pc > 0 else []
        if limits.p_avg is not None:
            caps.append(limits.p_avg / (duty * post.pr_idle_decision))
        if limits.p_pk is not None:
            caps.append(limits.p_pk)
        cap = min(caps)
        p, _ = golden_max(lambda x: constant_power_eval(x, sc).ee, 0.0, cap, 1e-9 * max(cap, 1.0))
        return p, constant_power_eval(p, sc)

    if scenario.frame is not None:
        if not _collision_ok(scenario):
            return OptResult.infeasible(pc_avg=scenario.ratios().pc_avg)
        tf = scenario.frame
    else:
        tf, _, _ = search_frame(
            lambda t: at_frame(scenario.with_frame(t))[1].ee, scenario.tau, bound.tf_max, scenario.solver
        )
    sc = scenario.with_frame(tf)
    p, ev = at_frame(sc)
    return OptResult(
        feasible=True,
        tf_opt=tf,
        ee=ev.ee,
        rate=ev.rate,
        params=None,
        slacks={"collision": limits.pc_max - sc.ratios().pc_avg, "power": p},
        pc_avg=sc.ratios().pc_avg,
        tf_max=bound.tf_max,
        avg_tx_power=ev.avg_tx_power,
        avg_interference=ev.avg_interference,
    )


# --------------------------------------------------------------------------
# throughput under a minimum EE


@dataclass
class BudgetResult:
    p_avg_star: float
    eta: float
    params: Optional[PolicyParams]
    binding: bool


def min_ee_power_budget(scenario: Scenario, rtol=1e-6) -> BudgetResult:
    """Average power at which the minimum-EE constraint holds with equality.

    The budget policy's EE rises monotonically with its multiplier ``eta`` on
    the relevant branch, so ``eta`` is bracketed and bisected (in log space)
    until ``EE(eta) = ee_min``. For the peak variant a budget that never binds
    (EE_min met even at full peak power) is reported with ``binding=False``.

    Raises
    ------
    NoBinding
        If ``ee_min`` exceeds the largest EE the policy family can reach.
    """
    limits = scenario.limits
    if limits.ee_min is None:
        raise ValueError("scenario has no ee_min")
    ee_min = limits.ee_min
    if ee_min == 0.0:
        return BudgetResult(math.inf, 0.0, None, False)

    def make(eta):
        return params_for(scenario, Variant.MIN_EE_BUDGET, eta=eta)

    def ee_of(eta):
        ev = evaluate(make(eta), scenario)
        return ev.ee if math.isfinite(ev.avg_tx_power) else 0.0

    if ee_of(math.inf) < ee_min:
        raise NoBinding(f"ee_min={ee_min:g} exceeds the largest reachable EE")

    lo, hi = math.log(1e-12), math.log(1e12)
    if ee_of(math.exp(lo)) >= ee_min:
        # only reachable with a peak clamp: EE_min holds at full peak power
        params = make(0.0)
        tx, _ = resource_usage(params, scenario)
        return BudgetResult(tx, 0.0, params, False)
    if ee_of(math.exp(hi)) < ee_min:
        eta = math.inf
    else:
        while hi - lo > rtol:
            mid = 0.5 * (lo + hi)
            if ee_of(math.exp(mid)) >= ee_min:
                hi = mid
            else:
                lo = mid
        eta = math.exp(hi)
    params = make(eta)
    tx, _ = resource_usage(params, scenario)
    return BudgetResult(tx, eta, params, True)


def operating_power_case(scenario: Scenario, budget: Optional[BudgetResult]):
    """Operating average power and which limit sets it.

    ``budget`` is the result of :func:`min_ee_power_budget`, or ``None`` when
    that raised :class:`NoBinding`. Returns ``(case, p_op, max_ee)`` where
    ``max_ee`` is the best EE under the transmit and interference limits (only
    computed when needed, else ``None``).
    """
    limits = scenario.limits
    tol = scenario.solver.dinkelbach_eps
    if budget is None:
        return OperatingCase.INFEASIBLE, 0.0, None
    if limits.peak:
        max_ee = dinkelbach_ee(scenario).alpha
        if max_ee < limits.ee_min - tol:
            return OperatingCase.INFEASIBLE, 0.0, max_ee
        if budget.binding:
            return OperatingCase.BUDGET_BINDS, budget.p_avg_star, max_ee
        return OperatingCase.PEAK_BINDS, math.inf, max_ee
    if limits.p_avg >= budget.p_avg_star:
        return OperatingCase.BUDGET_BINDS, budget.p_avg_star, None
    max_ee = dinkelbach_ee(scenario).alpha
    if max_ee >= limits.ee_min - tol:
        return OperatingCase.AVG_TX_BINDS, limits.p_avg, max_ee
    return OperatingCase.INFEASIBLE, 0.0, max_ee


def _rate_policy(scenario, variant, budget, start):
    sol = solve_multipliers(scenario, 0.0, variant, budget=budget, start=start)
    return sol, evaluate(sol.params, scenario)


def _rate_at_frame(scenario, warm=None):
    limits = scenario.limits
    try:
        budget = min_ee_power_budget(scenario)
    except NoBinding:
        budget = None
    case, p_op, _ = operating_power_case(scenario, budget)
    p_star = budget.p_avg_star if budget is not None else None
    if case is OperatingCase.INFEASIBLE:
        return None, case, p_star
    variant = rate_variant(scenario)
    sol = solve_multipliers(scenario, 0.0, variant, budget=p_op, start=warm)
    ev = evaluate(sol.params, scenario)
    tol = scenario.solver.dinkelbach_eps
    if ev.ee < limits.ee_min - tol:
        # the interference limit pulls the policy off the budget path; shrink
        # the budget until EE_min holds again, or give up if it never can
        dk = dinkelbach_ee(scenario)
        if dk.alpha < limits.ee_min - tol:
            return None, OperatingCase.INFEASIBLE, p_star
        lo = dk.evaluation.avg_tx_power
        hi = p_op if math.isfinite(p_op) else ev.avg_tx_power
        best = _rate_policy(scenario, variant, lo, sol.multipliers)
        while hi - lo > 1e-7 * max(hi, 1e-3):
            mid = 0.5 * (lo + hi)
            cand = _rate_policy(scenario, variant, mid, best[0].multipliers)
            if cand[1].ee >= limits.ee_min:
                lo, best = mid, cand
            else:
                hi = mid
        sol, ev = best
        case, p_op = OperatingCase.BUDGET_BINDS, lo
    slacks = dict(sol.slacks)
    slacks["collision"] = limits.pc_max - sol.params.pc
    slacks["min_ee"] = ev.ee - limits.ee_min
    if math.isfinite(p_op):
        slacks["budget"] = p_op - ev.avg_tx_power
    return (sol, ev, slacks), case, p_star


def optimize_throughput_min_ee(scenario: Scenario) -> OptResult:
    """Throughput-optimal power policy and frame duration subject to EE >= ee_min."""
    limits = scenario.limits
    if limits.ee_min is None:
        raise ValueError("scenario has no ee_min")
    post = scenario.posterior()
    if limits.pc_max < post.post_busy:
        return OptResult.infeasible(pc_avg=post.post_busy, case=OperatingCase.INFEASIBLE)
    try:
        bound = _frame_bound(scenario)
    except CollisionInfeasible:
        return OptResult.infeasible(pc_avg=post.post_busy, case=OperatingCase.INFEASIBLE)

    def build(sc, out, case, p_star, multimodal=False):
        if out is None:
            return OptResult.infeasible(
                pc_avg=sc.ratios().pc_avg, case=case, p_avg_star=p_star, tf_max=bound.tf_max
            )
        sol, ev, slacks = out
        return OptResult(
            feasible=True,
            tf_opt=sc.frame,
            ee=ev.ee,
            rate=ev.rate,
            params=sol.params,
            slacks=slacks,
            iterations=(1, sol.iterations),
            pc_avg=sol.params.pc,
            multimodal=multimodal,
            tf_max=bound.tf_max,
            case=case,
            p_avg_star=p_star,
            avg_tx_power=ev.avg_tx_power,
            avg_interference=ev.avg_interference,
        )

    if scenario.frame is not None:
        if not _collision_ok(scenario):
            return OptResult.infeasible(
                pc_avg=scenario.ratios().pc_avg, case=OperatingCase.INFEASIBLE, tf_max=bound.tf_max
            )
        return build(scenario, *_rate_at_frame(scenario))

    warm = {}
    cache = {}

    def objective(tf):
        sc = scenario.with_frame(tf)
        res = _rate_at_frame(sc, warm)
        cache[tf] = res
        out = res[0]
        if out is None:
            return 0.0
        warm.clear()
        warm.update(out[0].multipliers)
        return out[1].rate

    tf, _, multimodal = search_frame(objective, scenario.tau, bound.tf_max, scenario.solver)
    return build(scenario.with_frame(tf), *cache[tf], multimodal=multimodal)
