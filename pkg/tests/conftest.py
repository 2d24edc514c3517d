"""Collects one pass/fail line per acceptance criterion and prints them at the end."""
import pytest

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    k = marker.args[0]
    ok, details = _CRITERIA.get(k, (True, []))
    detail = "; ".join(v for name, v in item.user_properties if name == "detail")
    _CRITERIA[k] = (ok and rep.passed, details + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, details = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {' | '.join(details)}")
