"""Collects the outcome of every acceptance criterion and prints one line
per criterion at the end of the session."""

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    prev = _results.get(number)
    ok = rep.passed and (prev is None or prev[1])
    details = [d for d in ((prev[2] if prev else ""), detail) if d]
    _results[number] = (title, ok, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, ok, detail = _results[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
