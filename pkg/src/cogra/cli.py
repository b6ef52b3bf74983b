"""Command-line front end: ``cogra-opt <command> --scenario FILE --out FILE``.

Exit codes: 0 on success, 2 when the scenario is infeasible, 1 on a schema or
solver error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import jsonschema
import numpy as np

from .fading import build_grid, expect, mc_expect
from .mcsim import SimConfig, simulate_collision, simulate_throughput
from .optimizer import (
    MaxIterations,
    OptResult,
    constant_power_ee,
    optimize_ee,
    optimize_throughput_min_ee,
)
from .policy import constant_power_eval, interference_limited_power
from .scenario import ChannelConstants, PowerConstraints, Scenario, SolverConfig, db_to_linear
from .sensing import SensingSpec, threshold_for_pf
from .traffic import CollisionInfeasible, TrafficModel, conditional_ratios, max_frame_for_collision

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

RESULT_COLUMNS = [
    "ee_bits_per_joule",
    "rate_bits_s_hz",
    "tf_opt_ms",
    "pc_avg",
    "lambda",
    "nu",
    "feasible",
    "iterations",
    "outer_iterations",
    "tau_ms",
    "tf_max_ms",
    "avg_tx_power",
    "avg_interference",
    "power",
    "ee_min",
    "p_avg_star",
    "case",
    "multimodal",
    "rate_mc",
    "rate_mc_se",
]
VALIDATE_COLUMNS = ["quantity", "frame_ms", "analytic", "mc", "se", "z", "within_3se"]


class ScenarioError(ValueError):
    """The scenario file is malformed or violates the schema."""


# --------------------------------------------------------------------------
# scenario files


def load_schema():
    return json.loads(resources.files("cogra").joinpath("scenario_schema.json").read_text())


def _locate(text, path):
    # line of the last key of ``path`` found by scanning the keys in order
    pos, line = 0, None
    for key in path:
        if not isinstance(key, str):
            continue
        i = text.find(json.dumps(key), pos)
        if i < 0:
            break
        pos = i + 1
        line = text.count("\n", 0, i) + 1
    return line


def parse_scenario(text):
    """Parse and schema-check a scenario document.

    Raises
    ------
    ScenarioError
        With the offending line number when it can be determined.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"line {e.lineno}: invalid JSON: {e.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = []
        for e in errors[:5]:
            path = list(e.absolute_path)
            where = ".".join(map(str, path)) or "<root>"
            line = _locate(text, path) if path else 1
            prefix = f"line {line}: " if line else ""
            msgs.append(f"{prefix}{where}: {e.message}")
        raise ScenarioError("\n".join(msgs))
    return doc


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def apply_overrides(doc, overrides):
    """Copy of ``doc`` with dotted-path keys (``"sensing.pd"``) set."""
    out = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        node = out
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    # setting one of a mutually exclusive pair drops the other
    c = out.get("constraints", {})
    for a, b in (("p_avg_db", "p_pk_db"), ("ee_min", "ee_min_gain")):
        for x, y in ((a, b), (b, a)):
            if f"constraints.{x}" in overrides:
                c.pop(y, None)
    return out


def build_sensing(sec):
    snr = sec.get("snr_s", 0.1)
    fs = sec.get("fs_hz", 100e3)
    if sec["mode"] == "roc":
        thr = threshold_for_pf(snr, sec["tau_ms"], fs, sec["pf"])
        return SensingSpec.from_threshold(thr, sec["tau_ms"], snr_s=snr, fs=fs)
    if "tau_ms" in sec:
        return SensingSpec(p_d=sec["pd"], p_f=sec["pf"], tau=sec["tau_ms"], fs=fs, snr_s=snr)
    return SensingSpec.from_targets(sec["pd"], sec["pf"], snr_s=snr, fs=fs)


def build_scenario(doc, grid_order=None, ee_min=None):
    """Scenario for ``doc``. ``frame.mode`` other than ``fixed`` leaves the frame free."""
    tr = doc["traffic"]
    traffic = TrafficModel(tr["mean_on_ms"], tr["mean_off_ms"])
    sensing = build_sensing(doc["sensing"])
    ch = doc.get("channel", {})
    consts = ChannelConstants(n0=ch.get("n0", 0.01), sigma_s2=ch.get("sigma_s2", 0.1))
    c = doc["constraints"]
    limits = PowerConstraints(
        q_avg=db_to_linear(c["q_avg_db"]),
        pc_max=c["pc_max"],
        p_avg=db_to_linear(c["p_avg_db"]) if "p_avg_db" in c else None,
        p_pk=db_to_linear(c["p_pk_db"]) if "p_pk_db" in c else None,
        ee_min=c.get("ee_min", ee_min),
        p_cr=c.get("p_cr", 1.0),
    )
    solver_kw = dict(doc.get("solver", {}))
    if grid_order is not None:
        solver_kw["grid_order"] = grid_order
    solver = SolverConfig(**solver_kw)
    fr = doc.get("frame", {"mode": "free"})
    frame = fr["fixed_ms"] if fr["mode"] == "fixed" else None
    return Scenario(traffic, sensing, limits, consts, frame=frame, grid=build_grid(solver.grid_order), solver=solver)


# --------------------------------------------------------------------------
# evaluation of one point


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".10g")
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def _multipliers(params):
    if params is None:
        return None, None
    lam = params.lam if params.lam is not None else params.vartheta
    nu = next((m for m in (params.nu, params.mu, params.varphi) if m is not None), None)
    return lam, nu


def _result_row(res: OptResult, sc: Scenario, ee_min=None, power=None):
    lam, nu = _multipliers(res.params)
    return {
        "ee_bits_per_joule": res.ee,
        "rate_bits_s_hz": res.rate,
        "tf_opt_ms": res.tf_opt if res.feasible else None,
        "pc_avg": res.pc_avg,
        "lambda": lam,
        "nu": nu,
        "feasible": res.feasible,
        "iterations": res.iterations[1],
        "outer_iterations": res.iterations[0],
        "tau_ms": sc.tau,
        "tf_max_ms": res.tf_max or None,
        "avg_tx_power": res.avg_tx_power if res.feasible else None,
        "avg_interference": res.avg_interference if res.feasible else None,
        "power": power if power is not None else res.slacks.get("power"),
        "ee_min": ee_min,
        "p_avg_star": res.p_avg_star,
        "case": res.case,
        "multimodal": res.multimodal,
    }


def _ee_reference(doc, grid_order):
    """EE optimum used to resolve ``ee_optimal`` frames and ``ee_min_gain``."""
    return optimize_ee(build_scenario(doc, grid_order, ee_min=0.0))


def _resolve_rate_doc(doc, grid_order):
    """Fix the frame when it is EE-optimal and turn ``ee_min_gain`` into ``ee_min``."""
    doc = copy.deepcopy(doc)
    fr = doc.get("frame", {"mode": "free"})
    gain = doc["constraints"].pop("ee_min_gain", None)
    if fr["mode"] == "ee_optimal" or gain is not None:
        ref_doc = copy.deepcopy(doc)
        if fr["mode"] == "ee_optimal":
            ref_doc["frame"] = {"mode": "free"}
        ref_doc["constraints"].pop("ee_min", None)
        ref = _ee_reference(ref_doc, grid_order)
        if not ref.feasible:
            return None
        if fr["mode"] == "ee_optimal":
            doc["frame"] = {"mode": "fixed", "fixed_ms": ref.tf_opt}
        if gain is not None:
            doc["constraints"]["ee_min"] = gain * ref.ee
    if "ee_min" not in doc["constraints"]:
        raise ScenarioError("rate-min-ee needs constraints.ee_min or constraints.ee_min_gain")
    return doc


def evaluate_point(doc, objective, grid_order=None, mc_trials=None, seed=0):
    """Result row (column name -> value) for one scenario document."""
    row = dict.fromkeys(RESULT_COLUMNS)
    try:
        if objective == "rate-min-ee":
            resolved = _resolve_rate_doc(doc, grid_order)
            if resolved is None:
                sc = build_scenario({**doc, "frame": {"mode": "free"}}, grid_order, ee_min=0.0)
                row.update(_result_row(OptResult.infeasible(), sc))
                return row
            sc = build_scenario(resolved, grid_order)
            res = optimize_throughput_min_ee(sc)
            row.update(_result_row(res, sc, ee_min=sc.limits.ee_min))
            return row
        if objective == "fixed-power-rate":
            if doc.get("frame", {}).get("mode") != "fixed":
                raise ScenarioError("fixed-power-rate needs frame.mode = fixed")
            sc = build_scenario(doc, grid_order)
            return _fixed_power_row(sc, row, mc_trials, seed)
        doc_ee = doc
        if doc.get("frame", {}).get("mode") == "ee_optimal":
            doc_ee = {**doc, "frame": {"mode": "free"}}
        sc = build_scenario(doc_ee, grid_order)
        res = constant_power_ee(sc) if objective == "constant-power-ee" else optimize_ee(sc)
        row.update(_result_row(res, sc))
        return row
    except CollisionInfeasible:
        row.update({"feasible": False})
        return row


def _fixed_power_row(sc, row, mc_trials, seed):
    pc = sc.ratios().pc_avg
    feasible = pc <= sc.limits.pc_max
    p = interference_limited_power(sc, p_pk=sc.limits.p_pk or sc.limits.p_avg)
    ev = constant_power_eval(p, sc)
    row.update(
        {
            "ee_bits_per_joule": ev.ee,
            "rate_bits_s_hz": ev.rate,
            "tf_opt_ms": sc.frame,
            "pc_avg": pc,
            "feasible": feasible,
            "iterations": 0,
            "outer_iterations": 0,
            "tau_ms": sc.tau,
            "avg_tx_power": ev.avg_tx_power,
            "avg_interference": ev.avg_interference,
            "power": p,
        }
    )
    if mc_trials:
        rate, se = simulate_throughput(sc, p, SimConfig(trials=mc_trials, seed=seed))
        row.update({"rate_mc": rate, "rate_mc_se": se})
    return row


# --------------------------------------------------------------------------
# sweeps


def sweep_values(sweep):
    if "values" in sweep:
        return [float(v) for v in sweep["values"]]
    n = sweep["points"]
    if n == 1:
        return [float(sweep["from"])]
    return [float(v) for v in np.linspace(sweep["from"], sweep["to"], n)]


def _sweep_task(args):
    doc, objective, grid_order, mc_trials, seed = args
    return evaluate_point(doc, objective, grid_order, mc_trials, seed)


def _workers():
    try:
        return max(1, int(os.environ.get("COGRA_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(doc, grid_order=None, seed=0, trials=None):
    """Header and rows of a sweep, in sweep order."""
    if "sweep" not in doc:
        raise ScenarioError("scenario has no sweep section")
    sweep = doc["sweep"]
    param = sweep["parameter"]
    objective = doc.get("objective", "ee")
    mc_trials = trials if trials is not None else sweep.get("mc_trials")
    series = doc.get("series") or [{"label": ""}]
    tasks, keys = [], []
    for s in series:
        base = apply_overrides(doc, s.get("set", {}))
        obj = s.get("objective", objective)
        for i, v in enumerate(sweep_values(sweep)):
            tasks.append((apply_overrides(base, {param: v}), obj, grid_order, mc_trials, seed + i))
            keys.append((s["label"], v))
    workers = min(_workers(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    header = (["series"] if doc.get("series") else []) + [param] + RESULT_COLUMNS
    rows = []
    for (label, v), res in zip(keys, results):
        lead = [label] if doc.get("series") else []
        rows.append(lead + [v] + [res[c] for c in RESULT_COLUMNS])
    return header, rows


# --------------------------------------------------------------------------
# oracle validation


def run_validate(doc, grid_order=None, seed=0, trials=100_000):
    """Analytic-versus-Monte-Carlo comparison rows."""
    doc = {**doc, "frame": {"mode": "free"}}
    sc = build_scenario(doc, grid_order, ee_min=0.0)
    frames = doc.get("validate", {}).get("frames_ms")
    if frames is None:
        frames = [sc.tau + t for t in (10.0, 100.0, 400.0)]
    rows = []
    k = 0

    def add(quantity, frame, analytic, est):
        nonlocal k
        mean, se = est
        z = (mean - analytic) / se if se > 0 else (0.0 if mean == analytic else math.inf)
        rows.append([quantity, frame, analytic, mean, se, z, abs(z) <= 3.0])
        k += 1

    for tf in frames:
        if not tf > sc.tau:
            raise ScenarioError(f"validation frame {tf} ms must exceed tau={sc.tau} ms")
        t_tx = tf - sc.tau
        pc0, pc1 = conditional_ratios(sc.traffic, t_tx)
        for q, state, val in (("pc0", "idle", pc0), ("pc1", "busy", pc1)):
            add(q, tf, val, simulate_collision(sc.traffic, tf, sc.tau, SimConfig(trials, seed + k, state)))
        fsc = sc.with_frame(tf)
        add(
            "pc_avg",
            tf,
            fsc.ratios().pc_avg,
            simulate_collision(sc.traffic, tf, sc.tau, SimConfig(trials, seed + k, "idle-decision"), sc.sensing),
        )
        p = interference_limited_power(fsc, p_pk=sc.limits.p_pk or sc.limits.p_avg)
        add("rate_fixed_power", tf, constant_power_eval(p, fsc).rate, simulate_throughput(fsc, p, SimConfig(trials, seed + k)))
    horizon = 20.0 * (sc.traffic.mean_on + sc.traffic.mean_off)
    add(
        "on_fraction",
        horizon,
        sc.traffic.priors()[1],
        simulate_collision(sc.traffic, horizon, 0.0, SimConfig(trials, seed + k, "stationary")),
    )
    n0 = sc.consts.n0
    log_rate = lambda h, g: np.log2(1.0 + h / n0)  # noqa: E731
    add("mean_log2_rate", None, expect(log_rate, sc.grid), mc_expect(log_rate, trials, seed + k))
    return VALIDATE_COLUMNS, rows


# --------------------------------------------------------------------------
# single runs


def _infeasible_reason(sc: Scenario):
    post = sc.posterior()
    if post.post_busy > sc.limits.pc_max:
        return f"infeasible: post_busy={post.post_busy:.6g} exceeds pc_max={sc.limits.pc_max:.6g}"
    if sc.frame is not None:
        pc = sc.ratios().pc_avg
        if pc > sc.limits.pc_max:
            return f"infeasible: pc_avg={pc:.6g} at frame {sc.frame:g} ms exceeds pc_max={sc.limits.pc_max:.6g}"
    return "infeasible: no power policy meets every constraint"


def run_feasibility(doc, grid_order=None):
    sc = build_scenario({**doc, "frame": {"mode": "free"}}, grid_order, ee_min=0.0)
    post = sc.posterior()
    pr_idle, pr_busy = sc.traffic.priors()
    try:
        bound = max_frame_for_collision(sc.traffic, sc.sensing, sc.tau, sc.limits.pc_max, sc.tf_cap)
        tf_max, binding, feasible = bound.tf_max, bound.binding, True
    except CollisionInfeasible:
        tf_max, binding, feasible = None, None, False
    header = ["pr_idle", "post_busy", "pc_max", "tau_ms", "pd", "pf", "tf_max_ms", "collision_binds", "feasible"]
    row = [pr_idle, post.post_busy, sc.limits.pc_max, sc.tau, sc.sensing.p_d, sc.sensing.p_f, tf_max, binding, feasible]
    return header, [row], feasible, sc


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _single(doc, objective, args):
    row = evaluate_point(doc, objective, args.grid_order, args.trials, args.seed)
    write_csv(args.out, RESULT_COLUMNS, [[row[c] for c in RESULT_COLUMNS]])
    if not row["feasible"]:
        fr = doc.get("frame", {})
        d = doc if fr.get("mode") == "fixed" else {**doc, "frame": {"mode": "free"}}
        print(_infeasible_reason(build_scenario(d, args.grid_order, ee_min=0.0)), file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="cogra-opt", description=__doc__.splitlines()[0])
    ap.add_argument(
        "command", choices=["optimize-ee", "optimize-rate-min-ee", "feasibility", "validate", "sweep"]
    )
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--out", required=True, help="output CSV path")
    ap.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    ap.add_argument("--grid-order", type=int, default=None, help="Gauss-Laguerre order per gain")
    ap.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = load_scenario(args.scenario)
        if args.command == "optimize-ee":
            return _single(doc, "ee", args)
        if args.command == "optimize-rate-min-ee":
            return _single(doc, "rate-min-ee", args)
        if args.command == "feasibility":
            header, rows, feasible, sc = run_feasibility(doc, args.grid_order)
            write_csv(args.out, header, rows)
            if not feasible:
                print(_infeasible_reason(sc), file=sys.stderr)
                return EXIT_INFEASIBLE
            return EXIT_OK
        if args.command == "validate":
            header, rows = run_validate(doc, args.grid_order, args.seed, args.trials or 100_000)
            write_csv(args.out, header, rows)
            bad = [r[0] for r in rows if not r[-1]]
            if bad:
                print(f"outside 3 standard errors: {', '.join(bad)}", file=sys.stderr)
                return EXIT_ERROR
            return EXIT_OK
        header, rows = run_sweep(doc, args.grid_order, args.seed, args.trials)
        write_csv(args.out, header, rows)
        return EXIT_OK
    except ScenarioError as e:
        print(f"{args.scenario}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, MaxIterations, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
