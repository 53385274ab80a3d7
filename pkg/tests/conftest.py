from __future__ import annotations

import pytest

_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or report.failed:
        if report.failed or _results.get(label) != "FAIL":
            _results[label] = "FAIL" if report.failed else ("PASS" if report.passed else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")

    def order(label):
        head = label.split()[0]
        return int(head[1:]) if head[1:].isdigit() else 99

    for label in sorted(_results, key=order):
        terminalreporter.write_line(f"{_results[label]}  {label}")
