import sys

import numpy as np
import pytest

from resnet import network as nw


@pytest.fixture
def p3():
    return nw.path(3)


@pytest.fixture
def k3():
    return nw.complete(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
