import sys

import pytest

from isss import CondensationSet, RatioVector, golden_mean
from systems import cantor_maps, make_spec


@pytest.fixture
def cantor():
    return make_spec(cantor_maps())


@pytest.fixture
def cantor_point():
    return make_spec(cantor_maps(), CondensationSet.points([[0.5]]))


@pytest.fixture
def golden():
    return golden_mean()


@pytest.fixture
def halves():
    return RatioVector.of(0.5, 0.5)


@pytest.fixture
def thirds():
    return RatioVector.of(1 / 3, 1 / 3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
