import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict[tuple[int, str], str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.failed:
        _outcomes[key] = "FAIL"
    elif report.when == "call" and report.passed:
        _outcomes.setdefault(key, "PASS")
    elif report.skipped:
        _outcomes.setdefault(key, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_outcomes.items()):
        terminalreporter.write_line(f"criterion {num} {name.replace('_', ' ')}: {outcome}")
