import os
import sys
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from qtree.graph import load_fixture  # noqa: E402

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@lru_cache(maxsize=None)
def fixture(name):
    return load_fixture(name)


@pytest.fixture
def fig2():
    return fixture("fig2")


@pytest.fixture
def k5():
    return fixture("k5")


@pytest.fixture
def cycle():
    return fixture("cycle")


@pytest.fixture
def lollipop():
    return fixture("lollipop")


@pytest.fixture
def interval():
    return fixture("interval")


# one PASS/FAIL line per acceptance criterion at the end of the run
_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None and (rep.when == "call" or rep.failed):
        _acceptance.append((mark.args[0], rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, dt in sorted(_acceptance, key=lambda t: int(t[0].split(".")[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  [{dt:.1f} s]")
