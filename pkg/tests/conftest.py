"""Shared, expensive fixtures: the three filter-experiment runs (and one
grid-doubled rerun) are computed once per session."""

import time

import pytest

from atomfilter.potential import PotentialSpec
from atomfilter.wavepacket import FilterConfig, Grid, filter_experiment

FIG5_TEMPLATE = PotentialSpec("gaussian", 300.0, 0.0, 6.0, 2.0)
FIG5_DEPTHS = (140.0, 150.0, 160.0)


@pytest.fixture(scope="session")
def fig5_runs():
    """{depth: (FilterReport, wall seconds)} at the default resolution."""
    runs = {}
    for vw in FIG5_DEPTHS:
        start = time.perf_counter()
        report = filter_experiment(FilterConfig(FIG5_TEMPLATE.with_depth(vw)))
        runs[vw] = (report, time.perf_counter() - start)
    return runs


@pytest.fixture(scope="session")
def fig5_doubled():
    """The 150 1/s run again with twice as many grid points."""
    grid = Grid()
    return filter_experiment(FilterConfig(FIG5_TEMPLATE.with_depth(150.0),
                                          grid=Grid(grid.x_min, grid.x_max, 2 * grid.n)))


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record sub-checks as ``acceptance(criterion, label, ok, detail)``."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(criterion: int, label: str, ok: bool, detail: str = "") -> bool:
        table.setdefault(criterion, []).append((label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(ACCEPTANCE, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in range(1, 11):
        checks = table.get(criterion)
        if not checks:
            terminalreporter.write_line(f"criterion {criterion:2d}: NOT RUN")
            continue
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        parts = "; ".join(f"{label} {'ok' if ok else 'FAILED'} ({detail})" for label, ok, detail in checks)
        terminalreporter.write_line(f"criterion {criterion:2d}: {status} - {parts}")
