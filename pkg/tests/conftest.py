import os

import pytest
from hypothesis import HealthCheck, settings

from loadsched.config import ScenarioConfig
from loadsched.forecast import ClearSkyProfile
from loadsched.loads import table_one
from loadsched.mpc import CriterionConfig

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CLEAR_DAY = ClearSkyProfile(1.0, 21600.0, 64800.0)
CLOUD_STEPS = ((36000.0, 37800.0, 0.35), (46800.0, 48000.0, 0.6))


def day_config(**changes) -> ScenarioConfig:
    """Table I loads on the 06:00-18:00 half-sine day, perfect forecast."""
    base = ScenarioConfig(
        loads=tuple(table_one()),
        dt=60.0,
        decision_interval=60.0,
        horizon=360.0,
        scenario="perfect",
        name="clear-perfect",
        clearsky=CLEAR_DAY,
        criterion=CriterionConfig(),
        end_rule="extendable",
    )
    return base.replace(**changes)


@pytest.fixture
def loads_table():
    return table_one()


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
