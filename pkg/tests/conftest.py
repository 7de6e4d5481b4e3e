import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def four_node_links():
    P = np.zeros((4, 4))
    P[0, 1], P[0, 2], P[1, 3], P[2, 3] = 0.2, 0.4, 0.6, 0.7
    return P


TABLE1 = {1: [3, 5], 2: [5, 6], 3: [1, 4, 5], 4: [3, 5, 6], 5: [1, 2, 3, 4, 6], 6: [2, 4, 5]}

# one "criterion N: ..." line per acceptance test, repeated in the summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
