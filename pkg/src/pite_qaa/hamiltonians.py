"""Model Hamiltonians, their exact spectra and real-time evolution circuits."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import Circuit
from .grid import GridSpec
from .library import build_cqft, build_diagonal_phase, build_poly_phase, cqft_matrix

ORACLE_CAP = 12

__all__ = [
    "GridSpec", "WeightedGraph", "HamiltonianOracle", "read_graph", "example_graph",
    "maxcut_hamiltonian", "harmonic_hamiltonian", "rte_circuit_ising", "rte_circuit_grid",
]


@dataclass(frozen=True)
class WeightedGraph:
    n_vertices: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        clean = []
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) outside {self.n_vertices} vertices")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((i, j, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def cut_values(self) -> np.ndarray:
        """Cut weight of every bitstring (little-endian vertex order)."""
        idx = np.arange(2 ** self.n_vertices)
        cut = np.zeros(idx.size)
        for i, j, w in self.edges:
            cut += w * (((idx >> i) ^ (idx >> j)) & 1)
        return cut


def example_graph() -> WeightedGraph:
    """The 4-vertex demonstration graph: a square with one diagonal."""
    return WeightedGraph(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (0, 2, 1.0)))


def read_graph(path, n_vertices: int | None = None) -> WeightedGraph:
    """Parse ``i j weight`` lines; ``#`` starts a comment, weight defaults to 1."""
    edges = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"bad edge line: {raw!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0))
    n = n_vertices if n_vertices is not None else 1 + max((max(i, j) for i, j, _ in edges), default=0)
    return WeightedGraph(n, tuple(edges))


@dataclass
class HamiltonianOracle:
    """Dense Hermitian matrix with its full eigendecomposition."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False)
    eigenvectors: np.ndarray = field(init=False)
    label: str = ""

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("Hamiltonian must be square")
        if np.abs(h - h.conj().T).max() > 1e-12:
            raise ValueError("Hamiltonian is not Hermitian")
        self.matrix = h
        if np.count_nonzero(h - np.diag(np.diag(h))) == 0:
            d = np.diag(h).real
            order = np.argsort(d, kind="stable")
            self.eigenvalues = d[order]
            self.eigenvectors = np.eye(h.shape[0], dtype=complex)[:, order]
        else:
            self.eigenvalues, self.eigenvectors = np.linalg.eigh(h)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dim)))

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    @property
    def center(self) -> float:
        """Shift that centres the spectrum on zero."""
        return -0.5 * (self.lambda_min + self.lambda_max)

    def ground_space(self, atol: float = 1e-9) -> np.ndarray:
        mask = self.eigenvalues < self.lambda_min + atol
        return self.eigenvectors[:, mask]

    def function(self, fn) -> np.ndarray:
        """Dense f(H) through the eigenbasis."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ v.conj().T

    def apply_function(self, fn, psi: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ (fn(self.eigenvalues) * (v.conj().T @ psi))

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def residual(self) -> float:
        h, v, w = self.matrix, self.eigenvectors, self.eigenvalues
        return float(np.abs(h @ v - v * w).max())


def maxcut_hamiltonian(g: WeightedGraph) -> HamiltonianOracle:
    """H = -sum d_ij (1 - Z_i Z_j)/2, i.e. minus the cut weight of each bitstring."""
    if g.n_vertices > ORACLE_CAP:
        raise ValueError(f"oracle limited to {ORACLE_CAP} qubits")
    return HamiltonianOracle(np.diag(-g.cut_values()).astype(complex), label="maxcut")


def harmonic_hamiltonian(grid: GridSpec) -> HamiltonianOracle:
    """H = p^2/2m + V(x) on the grid, kinetic part diagonal in centred momentum."""
    if grid.n_qubits > ORACLE_CAP:
        raise ValueError(f"oracle limited to {ORACLE_CAP} qubits")
    f = cqft_matrix(grid.n_qubits)
    kin = f.conj().T @ np.diag(grid.k ** 2 / (2 * grid.mass)) @ f
    h = kin + np.diag(grid.potential())
    return HamiltonianOracle(0.5 * (h + h.conj().T), label="harmonic")


def _phase_on(c: Circuit, angle: float, control):
    """Phase e^{i angle} applied globally or only on the given control value."""
    if control is None:
        c.phase(angle)
    elif control[1]:
        c.p(angle, control[0])
    else:
        c.phase(angle)
        c.p(-angle, control[0])


def rte_circuit_ising(g: WeightedGraph, t: float, control=None, e0: float = 0.0) -> Circuit:
    """exp(-i (H + e0) t) for the max-cut Hamiltonian of ``g``.

    Each edge contributes CNOT - Rz - CNOT.  With ``control=(qubit, value)`` the
    circuit is the controlled operator on a register one qubit wider; only the
    rotations pick up the control because the CNOT pairs cancel when it is off.
    """
    n = g.n_vertices
    width = n if control is None else max(n, control[0] + 1)
    c = Circuit(width, name="rte_ising")
    ctl = () if control is None else (control[0],)
    pol = () if control is None else (control[1],)
    for i, j, w in g.edges:
        c.cx(i, j)
        c.rz(w * t, j, ctl, pol)
        c.cx(i, j)
    _phase_on(c, t * (g.total_weight / 2 - e0), control)
    return c


def rte_circuit_grid(grid: GridSpec, t: float, control=None, e0: float = 0.0,
                     slices: int = 1) -> Circuit:
    """First-order Trotter evolution exp(-i V t) F^dg exp(-i K t) F per slice.

    F is the centred QFT, so the kinetic factor is a diagonal phase in the
    momentum register.  Under ``control`` only the diagonal factors are
    controlled.
    """
    n = grid.n_qubits
    width = n if control is None else max(n, control[0] + 1)
    dt = t / slices
    cq = build_cqft(n)
    kin = grid.k ** 2 / (2 * grid.mass)
    c = Circuit(width, name="rte_grid")
    for _ in range(slices):
        c.compose(cq)
        c.compose(build_diagonal_phase(kin, dt, n, control), range(width))
        c.compose(cq.inverse())
        c.compose(build_poly_phase(grid.potential_coeffs(), dt, grid, control), range(width))
    _phase_on(c, -e0 * t, control)
    return c
