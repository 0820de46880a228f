import math

import pytest
from hypothesis import HealthCheck, settings

from qbm_objectivity.model import make_ensemble

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def fig2_ensemble():
    return make_ensemble(7.0, [5.0])


@pytest.fixture
def fig4_ensemble():
    return make_ensemble(7.0, [2.0, 3.0, 4.0, 5.0, 6.0])


@pytest.fixture
def near57_ensemble():
    return make_ensemble(7.0, [math.sqrt(25 + 0.01 * k) for k in range(1, 6)])


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
