import pytest

from cogra.scenario import PowerConstraints, Scenario, SolverConfig, db_to_linear
from cogra.sensing import SensingSpec
from cogra.traffic import HEAVY, VOIP


@pytest.fixture(scope="session")
def sens90():
    return SensingSpec.from_targets(0.9, 0.1)


@pytest.fixture(scope="session")
def sens80():
    return SensingSpec.from_targets(0.8, 0.1)


@pytest.fixture
def make_scenario(sens90):
    """Scenario factory with VoIP traffic and (0.9, 0.1) sensing by default."""

    def make(
        frame=100.0,
        traffic=VOIP,
        sensing=None,
        p_avg_db=10.0,
        p_pk_db=None,
        q_avg_db=-10.0,
        pc_max=0.3,
        ee_min=None,
        grid_order=32,
        **solver,
    ):
        limits = PowerConstraints(
            q_avg=db_to_linear(q_avg_db),
            pc_max=pc_max,
            p_avg=None if p_pk_db is not None else db_to_linear(p_avg_db),
            p_pk=None if p_pk_db is None else db_to_linear(p_pk_db),
            ee_min=ee_min,
        )
        return Scenario(
            traffic,
            sensing or sens90,
            limits,
            frame=frame,
            solver=SolverConfig(grid_order=grid_order, **solver),
        )

    return make


@pytest.fixture(scope="session")
def heavy():
    return HEAVY


# --------------------------------------------------------------------------
# acceptance criteria report: one pass/fail line per criterion

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[number] = (title, report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, duration = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title} ({duration:.1f} s)")
