import numpy as np
import pytest

from pite_qaa.hamiltonians import HamiltonianOracle, maxcut_hamiltonian, example_graph
from pite_qaa.pite import IsingRte


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def graph():
    return example_graph()


@pytest.fixture(scope="session")
def maxcut(graph):
    return maxcut_hamiltonian(graph)


@pytest.fixture(scope="session")
def ising(graph):
    return IsingRte(graph)


def oracle(rng, n, scale=1.0):
    return HamiltonianOracle(random_hermitian(rng, 2 ** n, scale))


def random_circuit(rng, n, depth=4):
    """Layers of random single-qubit unitaries and a CNOT ladder."""
    from pite_qaa.circuit import Circuit
    from pite_qaa.linalg import zyz_matrix

    c = Circuit(n)
    for _ in range(depth):
        for q in range(n):
            c.u(zyz_matrix(*rng.uniform(0, 2 * np.pi, 3)), q)
        for q in range(n - 1):
            c.cx(q, q + 1)
    return c


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
