import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oscwalk.lattice import make_pmf  # noqa: E402

THIRD = Fraction(1, 3)

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def simple():
    return make_pmf({-1: Fraction(1, 2), 1: Fraction(1, 2)})


@pytest.fixture(scope="session")
def lazy3():
    """Uniform law on {-1, 0, 1}."""
    return make_pmf({-1: THIRD, 0: THIRD, 1: THIRD})


@pytest.fixture(scope="session")
def skewed():
    """Centered law on {-2, 0, 1}, variance 3/2."""
    return make_pmf({-2: Fraction(1, 4), 0: Fraction(1, 4), 1: Fraction(1, 2)})


@pytest.fixture(scope="session")
def jumpy():
    """Centered law on {-1, 2}: ascending ladder heights uniform on {1, 2}."""
    return make_pmf({-1: Fraction(2, 3), 2: Fraction(1, 3)})


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
