import numpy as np
import pytest

from curvemoduli import moduli

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def shear_config():
    """Two annular charts glued along ``z2 = z + 0.05 w`` around ``w**2 = z/4``."""
    return moduli.two_chart_configuration(eps=0.05, K=8, tail=8)


@pytest.fixture(scope="session")
def shear_chart(shear_config):
    return moduli.build_chart(shear_config)


@pytest.fixture(scope="session")
def identity_config():
    return moduli.two_chart_configuration(eps=0.0, K=6, tail=4)


@pytest.fixture
def acceptance():
    """Record the one-line outcome of an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
