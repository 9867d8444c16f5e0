import numpy as np
import pytest

from metastable.intervals import IntervalUnion
from metastable.kernels import RwmKernel
from metastable.targets import mixture

LEFT = IntervalUnion.below(0.0)
RIGHT = IntervalUnion.above(0.0)


def rwm(sigma: float) -> RwmKernel:
    return RwmKernel(sigma, mixture(sigma))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
