import math
from fractions import Fraction

import pytest

from startransform.starcore import BranchMatrix

SQRT3_2 = math.sqrt(3) / 2

# reference 4x2 branch matrices for smooth lines of the Cayley cubic; U3 repeats U1's plane
U1 = [[1, 0], [-1, 0], [0, 1], [0, -1]]
U2 = [[1, 0], [0, 1], [-1, 0], [0, -1]]
U3 = [[1, 0], [-1, 0], [0, -1], [0, 1]]


@pytest.fixture
def triangle():
    return BranchMatrix([[1.0, 0.0], [-0.5, SQRT3_2], [-0.5, -SQRT3_2]])


@pytest.fixture
def square():
    return BranchMatrix([[1, 0], [-1, 0], [0, 1], [0, -1]])


@pytest.fixture
def tetrahedron():
    return BranchMatrix([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])


def frac(s):
    return Fraction(s)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[num])
