import pytest

from superrobust import Experiment


@pytest.fixture
def five_pairs():
    """1-D offsets {2, 2, 7, 9, 11}: two exact fits at a=2, three outliers."""
    return Experiment.from_pairs([(0, 2), (0, 2), (0, 7), (0, 9), (0, 11)])


_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        title = marker.args[1]
        if hasattr(item, "callspec"):
            title = f"{title} [{item.callspec.id}]"
        _criteria.append((marker.args[0], title, rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, passed, duration in sorted(_criteria):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title} ({duration:.2f}s)")
