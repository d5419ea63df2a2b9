import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", max_examples=15, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA: dict[str, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    entry = _CRITERIA.setdefault(cid, {"title": title, "ok": True, "details": []})
    if report.failed:
        entry["ok"] = False
    if report.when == "call":
        entry["details"].extend(f"{k}={v}" for k, v in report.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: (len(c), c)):
        entry = _CRITERIA[cid]
        verdict = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        line = f"{verdict} criterion {cid}: {entry['title']}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
