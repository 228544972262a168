import pytest

ACCEPTANCE_MODULE = "test_acceptance.py"
_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == ACCEPTANCE_MODULE:
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _results.append((report.passed, label))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance")
    for passed, label in _results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
