import numpy as np
import pytest

from selfstab import AlphaModel, PointSet, figure_model, solve_sequential
from selfstab.simulate import simulate_tempered

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) the numba passes once, so per-test timings exclude JIT."""
    ps = PointSet(0.0, 1.0, [0.25, 0.5], [2.0, -3.0])
    for model in (AlphaModel.constant(0.6), figure_model(1), figure_model(2)):
        solve_sequential(ps, model, 0.0)
        solve_sequential(ps, model, 0.0)
    simulate_tempered(figure_model(1), 1.0, 10, 0, 4)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when in ("setup", "call"):
        # setup time counts too: shared fixtures do the heavy lifting for some criteria
        ok = report.outcome == "passed"
        prev = _CRITERIA.get(number, (title, True, 0.0))
        _CRITERIA[number] = (title, prev[1] and ok, prev[2] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, seconds = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  ({seconds:6.1f} s)  {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
