import csv
import json
from pathlib import Path

import pytest

from cogra import cli

SCENARIOS = sorted((Path(__file__).resolve().parents[1] / "scenarios").glob("*.json"))

BASE = {
    "traffic": {"mean_on_ms": 352, "mean_off_ms": 650},
    "sensing": {"mode": "targets", "pd": 0.9, "pf": 0.1},
    "constraints": {"p_avg_db": 10, "q_avg_db": -20, "pc_max": 0.2},
    "frame": {"mode": "free"},
    "solver": {"frame_grid": 20, "grid_order": 24},
}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, command, doc, *extra):
    out = tmp_path / f"{command}.csv"
    rc = cli.main([command, "--scenario", str(write(tmp_path, doc)), "--out", str(out), *extra])
    return rc, out


class TestSchema:
    @pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
    def test_shipped_scenarios_validate(self, path):
        doc = cli.load_scenario(path)
        cli.build_scenario(doc)

    def test_error_names_the_line(self):
        text = json.dumps({**BASE, "constraints": {"p_avg_db": 10, "q_avg_db": -20, "pc_max": 2}}, indent=2)
        with pytest.raises(cli.ScenarioError) as info:
            cli.parse_scenario(text)
        line = next(i for i, s in enumerate(text.splitlines(), 1) if '"pc_max"' in s)
        assert f"line {line}" in str(info.value)
        assert "constraints.pc_max" in str(info.value)

    def test_syntax_error_names_the_line(self):
        with pytest.raises(cli.ScenarioError, match="line 3"):
            cli.parse_scenario('{\n "traffic": {},\n "sensing": ,\n}')

    @pytest.mark.parametrize(
        "constraints",
        [
            {"q_avg_db": -20, "pc_max": 0.2},
            {"p_avg_db": 1, "p_pk_db": 1, "q_avg_db": -20, "pc_max": 0.2},
            {"p_avg_db": 1, "q_avg_db": -20, "pc_max": 0.2, "ee_min": 1, "ee_min_gain": 0.5},
        ],
    )
    def test_constraint_exclusivity(self, constraints):
        with pytest.raises(cli.ScenarioError):
            cli.parse_scenario(json.dumps({**BASE, "constraints": constraints}))

    def test_roc_mode_rejects_pd(self):
        doc = {**BASE, "sensing": {"mode": "roc", "pd": 0.9, "pf": 0.1, "tau_ms": 5}}
        with pytest.raises(cli.ScenarioError):
            cli.parse_scenario(json.dumps(doc))

    def test_roc_mode_derives_pd(self):
        doc = {**BASE, "sensing": {"mode": "roc", "pf": 0.1, "tau_ms": 7.2115}}
        sc = cli.build_scenario(cli.parse_scenario(json.dumps(doc)))
        assert sc.sensing.p_d == pytest.approx(0.9, abs=1e-4)

    def test_fixed_frame_needs_length(self):
        with pytest.raises(cli.ScenarioError):
            cli.parse_scenario(json.dumps({**BASE, "frame": {"mode": "fixed"}}))

    def test_db_conversion(self):
        sc = cli.build_scenario({**BASE, "constraints": {"p_pk_db": 10, "q_avg_db": -10, "pc_max": 0.2}})
        assert sc.limits.p_pk == pytest.approx(10.0)
        assert sc.limits.q_avg == pytest.approx(0.1)
        assert sc.limits.p_avg is None

    def test_override_swaps_exclusive_partner(self):
        doc = cli.apply_overrides(BASE, {"constraints.p_pk_db": 3.0})
        assert "p_avg_db" not in doc["constraints"]
        assert BASE["constraints"]["p_avg_db"] == 10


class TestCommands:
    def test_optimize_ee(self, tmp_path):
        rc, out = run(tmp_path, "optimize-ee", BASE)
        assert rc == cli.EXIT_OK
        text = out.read_text()
        assert text.splitlines()[0].split(",") == cli.RESULT_COLUMNS
        (row,) = read_csv(out)
        assert row["feasible"] == "1"
        assert float(row["pc_avg"]) <= 0.2 + 1e-6

    def test_infeasible_exit_code(self, tmp_path, capsys):
        doc = {**BASE, "sensing": {"mode": "targets", "pd": 0.55, "pf": 0.1, "tau_ms": 7.21}}
        rc, out = run(tmp_path, "optimize-ee", doc)
        assert rc == cli.EXIT_INFEASIBLE
        err = capsys.readouterr().err
        assert "post_busy=" in err and "pc_max=0.2" in err
        assert read_csv(out)[0]["feasible"] == "0"

    def test_schema_error_exit_code(self, tmp_path, capsys):
        rc, _ = run(tmp_path, "optimize-ee", {**BASE, "frame": {"mode": "sometimes"}})
        assert rc == cli.EXIT_ERROR
        assert "line " in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        rc = cli.main(["sweep", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.csv")])
        assert rc == cli.EXIT_ERROR

    def test_rate_min_ee(self, tmp_path):
        doc = {**BASE, "constraints": {"p_avg_db": 0, "q_avg_db": 10, "pc_max": 0.3, "ee_min_gain": 0.5},
               "frame": {"mode": "fixed", "fixed_ms": 125}}
        rc, out = run(tmp_path, "optimize-rate-min-ee", doc)
        assert rc == cli.EXIT_OK
        (row,) = read_csv(out)
        assert float(row["ee_bits_per_joule"]) >= float(row["ee_min"]) - 1e-6

    @pytest.mark.parametrize("pd,rc_expected", [(0.9, 0), (0.55, 2)])
    def test_feasibility(self, tmp_path, pd, rc_expected):
        doc = {**BASE, "sensing": {"mode": "targets", "pd": pd, "pf": 0.1, "tau_ms": 7.21}}
        rc, out = run(tmp_path, "feasibility", doc)
        assert rc == rc_expected
        (row,) = read_csv(out)
        assert float(row["post_busy"]) > 0

    def test_validate(self, tmp_path):
        doc = cli.load_scenario(next(p for p in SCENARIOS if p.stem == "voip_validate"))
        rc, out = run(tmp_path, "validate", doc, "--trials", "20000")
        assert rc == cli.EXIT_OK
        rows = read_csv(out)
        assert list(rows[0]) == cli.VALIDATE_COLUMNS
        assert all(r["within_3se"] == "1" for r in rows)

    def test_sweep_without_section(self, tmp_path):
        rc, _ = run(tmp_path, "sweep", BASE)
        assert rc == cli.EXIT_ERROR


SWEEP = {
    **BASE,
    "sweep": {"parameter": "sensing.pd", "values": [0.55, 0.7, 0.9]},
    "series": [{"label": "opt"}, {"label": "const", "objective": "constant-power-ee"}],
}


class TestSweep:
    def test_rows_in_sweep_order(self, tmp_path):
        rc, out = run(tmp_path, "sweep", SWEEP)
        assert rc == cli.EXIT_OK
        rows = read_csv(out)
        assert [(r["series"], float(r["sensing.pd"])) for r in rows] == [
            (s, v) for s in ("opt", "const") for v in (0.55, 0.7, 0.9)
        ]
        assert rows[0]["feasible"] == "0"
        for a, b in zip(rows[:3], rows[3:]):
            assert float(a["ee_bits_per_joule"]) >= float(b["ee_bits_per_joule"]) - 1e-9

    def test_byte_identical_and_thread_independent(self, tmp_path, monkeypatch):
        doc = {
            **BASE,
            "objective": "fixed-power-rate",
            "constraints": {"p_pk_db": 10, "q_avg_db": -10, "pc_max": 0.5},
            "frame": {"mode": "fixed", "fixed_ms": 100},
            "sweep": {"parameter": "frame.fixed_ms", "values": [30, 100, 300], "mc_trials": 5000},
        }
        _, a = run(tmp_path, "sweep", doc, "--seed", "11")
        first = a.read_bytes()
        _, b = run(tmp_path, "sweep", doc, "--seed", "11")
        assert b.read_bytes() == first
        monkeypatch.setenv("COGRA_THREADS", "2")
        _, c = run(tmp_path, "sweep", doc, "--seed", "11")
        assert c.read_bytes() == first
        rows = read_csv(c)
        for r in rows:
            assert abs(float(r["rate_bits_s_hz"]) - float(r["rate_mc"])) <= 4 * float(r["rate_mc_se"])

    def test_linspace_values(self):
        assert cli.sweep_values({"from": 0, "to": 1, "points": 3}) == [0.0, 0.5, 1.0]
        assert cli.sweep_values({"from": 2, "to": 5, "points": 1}) == [2.0]
