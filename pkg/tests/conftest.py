import math

import pytest

from optorouter.config import Scenario, shipped_config
from optorouter.params import SystemParams
from optorouter.steady_state import operating_point

W1 = 2.0 * math.pi * 134e3


def fig2_params(**changes) -> SystemParams:
    base = dict(
        lambda_pump=1054e-9, L=6.7e-2, omega1=W1, omega2=W1, m1=40e-12, m2=40e-12,
        Q1=1.1e6, Q2=1.1e6, kappa=W1 / 10, power=2e-6, temperature=0.02, coulomb_lambda=3e33,
    )
    base.update(changes)
    return SystemParams.from_base(**base)


@pytest.fixture(scope="session")
def fig2():
    return Scenario.from_file(shipped_config("fig2.conf")).params


@pytest.fixture(scope="session")
def fig2_ss(fig2):
    return operating_point(fig2)


@pytest.fixture(scope="session")
def off():
    return fig2_params(coulomb_lambda=0.0)


@pytest.fixture(scope="session")
def off_ss(off):
    return operating_point(off)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
