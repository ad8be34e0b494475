import numpy as np
import pytest

from postsim.povm import QuantumState


def random_pure(rng, d):
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return QuantumState.pure(psi)


def random_mixed(rng, d, rank=None):
    rank = rank or d
    a = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = a @ a.conj().T
    return QuantumState(rho / np.trace(rho).real)


def sic2_fiducial():
    """Tetrahedron fiducial for the qubit."""
    c = np.sqrt((1 + 1 / np.sqrt(3)) / 2)
    s = np.sqrt((1 - 1 / np.sqrt(3)) / 2)
    return np.array([c, np.exp(1j * np.pi / 4) * s])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
