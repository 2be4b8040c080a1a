import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ifsm import systems

settings.register_profile("ifsm", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ifsm")

# closed forms, evaluated at 30 digits with mpmath and frozen
LOG_RHO_E2 = {0.5: 0.28092980362016137146, 1.0: 0.62011450695827752463, 2.0: 1.433780830483027187}
RHO_E2 = {0.5: 1.3243606353500640734, 1.0: 1.8591409142295226177, 2.0: 4.1945280494653251136}
MARKET_ENTROPY = -0.074282806473327068928   # H(p) - ln 4 for p = (0.39, 0.17, 0.15, 0.29)


# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def fixture_systems():
    """Every named fixture with a grid size small enough for repeated use."""
    return [
        (systems.e1(), 257),
        (systems.e2(0.5), 257),
        (systems.e2(1.0), 257),
        (systems.e2(2.0), 257),
        (systems.constant_weight(0.7), 244),
        (systems.market(), 33),
        (systems.random_normalized(np.random.default_rng(3)), 201),
    ]
