import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from affinecurve import families
from affinecurve.chart import arclength_chart

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SQUARE = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@pytest.fixture(scope="session")
def circle_chart():
    return arclength_chart(families.circle(n=4096))


@pytest.fixture(scope="session")
def ellipse_chart():
    return arclength_chart(families.ellipse(2.0, 1.0, n=4096))


@pytest.fixture(scope="session")
def square_chart():
    from affinecurve.curve import build_curve

    return arclength_chart(build_curve(SQUARE))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
