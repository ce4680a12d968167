import numpy as np
import pytest

from permadyn.lmg import LMGParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lmg_cycle_params():
    return LMGParams(coupling=3.0, field=0.0, collective_rate=2.0, local_rate=1.0)


@pytest.fixture
def lmg_field_params():
    return LMGParams(coupling=3.0, field=0.5, collective_rate=2.0, local_rate=1.0)


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
