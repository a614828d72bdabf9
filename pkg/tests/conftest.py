import pytest

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1].split("[")[0]
        label = name.removeprefix("test_").replace("_", " ")
        ok = report.outcome == "passed" and _acceptance.get(label, "PASS") == "PASS"
        _acceptance[label] = "PASS" if ok else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _acceptance.items():
        terminalreporter.write_line(f"{status}  {label}")
