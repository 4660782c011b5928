import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from oulab.field import GridSpec  # noqa: E402


@pytest.fixture(scope="session")
def spec1():
    return GridSpec(1, 16.0, 256)


@pytest.fixture(scope="session")
def spec1_fine():
    return GridSpec(1, 16.0, 1024)


@pytest.fixture(scope="session")
def spec2():
    return GridSpec(2, 12.0, 64)


# --- acceptance summary: one status line per criterion ------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": 0, "xfailed": []})
    if hasattr(rep, "wasxfail") and rep.skipped:
        entry["xfailed"].append(rep.wasxfail)
    elif rep.failed or rep.skipped:
        entry["failed"] += 1
    elif rep.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "FAIL" if e["failed"] else ("XFAIL" if e["xfailed"] else "PASS")
        line = f"criterion {number:>2}  {status:<5}  {e['title']}: {e['passed']} passed"
        if e["failed"]:
            line += f", {e['failed']} failed"
        for reason in e["xfailed"]:
            line += f"; expected failure: {reason}"
        terminalreporter.write_line(line)
