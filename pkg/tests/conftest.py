"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _results.setdefault(number, {"title": title, "states": [], "skipped": []})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["states"].append(report.outcome)
        if report.outcome == "skipped":
            entry["skipped"].append(title)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        states = entry["states"]
        if any(s == "failed" for s in states):
            verdict = "FAIL"
        elif states and all(s == "skipped" for s in states):
            verdict = "SKIP"
        elif states:
            verdict = "PASS"
        else:
            verdict = "NOT RUN"
        line = f"criterion {number}: {verdict}  {entry['title']}"
        if verdict == "PASS" and entry["skipped"]:
            line += f"  [skipped: {'; '.join(entry['skipped'])}]"
        terminalreporter.write_line(line)
