import pytest

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _criteria.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _criteria:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
