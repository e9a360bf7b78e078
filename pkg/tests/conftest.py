import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pwlab.limit import wave_profile
from pwlab.scenarios import scenario
from pwlab.transport import geodesic_with_frame

settings.register_profile(
    "pwlab", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("pwlab")

ACCEPTANCE_FILE = "test_acceptance.py"
SESSION = {"start": None, "outcomes": {}, "lines": []}


def pytest_sessionstart(session):
    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run last so the runtime criterion sees the whole suite
    items.sort(key=lambda item: item.nodeid.split("::")[0].endswith(ACCEPTANCE_FILE))


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        prev = SESSION["outcomes"].get(report.nodeid, "passed")
        SESSION["outcomes"][report.nodeid] = report.outcome if prev == "passed" else prev


def pytest_terminal_summary(terminalreporter):
    if SESSION["lines"]:
        terminalreporter.section("acceptance criteria")
        for line in SESSION["lines"]:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def session_state():
    return SESSION


def _profile(name, span=None):
    sc = scenario(name)
    span = span or sc.span
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, span, t0=min(max(sc.t0, span[0]), span[1]))
    return sc, rec, fr, wave_profile(rec, fr)


@pytest.fixture(scope="session")
def ssmm():
    """The (--++) pp-wave example along (0, s, 0, 0) on [0, 2.5 pi]."""
    return _profile("pp-example-ssmm")


@pytest.fixture(scope="session")
def sphere3():
    return _profile("sphere-3", (0.0, 6.0))


@pytest.fixture(scope="session")
def torus():
    return _profile("torus")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
