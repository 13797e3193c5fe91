"""Probabilistic imaginary-time evolution (PITE) operators.

One PITE step embeds M = gamma exp(-(H + e0) dtau) as the ancilla-|0> block of
an (n+1)-qubit unitary.  The ancilla is always the highest qubit.

The approximate circuit replaces exp(+-i kappa Theta) by real-time evolution:

    anc:  H  W  [A(t) on |0>, A(t)^dg on |1>]  Rz(-2 theta)  W^dg

with t = s dtau.  An energy shift e0 only adds exp(-i t e0 Z) on the ancilla,
so it is folded into the rotation angle (``theta_eff``) and the real-time
evolution is always built for the unshifted Hamiltonian.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .grid import GridSpec
from .hamiltonians import HamiltonianOracle, WeightedGraph, rte_circuit_grid, rte_circuit_ising
from .library import build_cqft, build_diagonal_phase
from .statevector import QuantumState, branch_probability, apply_circuit

INV_SQRT2 = 1 / math.sqrt(2)
_W = np.array([[1, -1j], [1, 1j]]) * INV_SQRT2
_H = np.array([[1, 1], [1, -1]]) * INV_SQRT2


class StraddleWarning(UserWarning):
    """Spectrum of M lies on both sides of 1/sqrt(2)."""


@dataclass(frozen=True)
class PiteParams:
    gamma: float
    dtau: float
    e0_shift: float = 0.0
    s: float = field(init=False)
    theta: float = field(init=False)
    kappa: int = field(init=False)

    def __post_init__(self):
        g = float(self.gamma)
        if not 0 < g < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {g}")
        if abs(g - INV_SQRT2) < 1e-12:
            raise ValueError("gamma = 1/sqrt(2) is singular")
        if not self.dtau > 0:
            raise ValueError("dtau must be positive")
        c = math.sqrt(1 - g * g)
        kappa = 1 if g > INV_SQRT2 else -1
        object.__setattr__(self, "s", g / c)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "theta", kappa * math.acos(min(1.0, (g + c) * INV_SQRT2)))

    @property
    def t(self) -> float:
        """Real-time argument s * dtau of the evolution blocks."""
        return self.s * self.dtau

    @property
    def theta_eff(self) -> float:
        """Ancilla angle with the energy shift folded in."""
        return self.theta - self.t * self.e0_shift

    def with_gamma(self, gamma: float) -> "PiteParams":
        return PiteParams(gamma, self.dtau, self.e0_shift)


def derive_params(gamma: float, dtau: float, e0: float = 0.0) -> PiteParams:
    return PiteParams(float(gamma), float(dtau), float(e0))


# real-time evolution builders ----------------------------------------------------

def _matching_order(edges):
    """Edges regrouped greedily into vertex-disjoint layers."""
    rest, out = list(edges), []
    while rest:
        used, keep = set(), []
        for e in rest:
            if e[0] in used or e[1] in used:
                keep.append(e)
            else:
                out.append(e)
                used.update(e[:2])
        rest = keep
    return out


class IsingRte:
    """Exact exp(-i H t) for a max-cut Hamiltonian; A(t)A(t') = A(t + t')."""

    group_like = True

    def __init__(self, graph: WeightedGraph):
        self.graph = graph
        self.n_qubits = graph.n_vertices

    def evolve(self, t: float) -> Circuit:
        return rte_circuit_ising(self.graph, t)

    def branch(self, t: float) -> Circuit:
        """A(t) on ancilla |0>, A(t)^dg on |1>: forward evolution then a
        controlled backward evolution of twice the length.  The forward edges
        are grouped into disjoint layers so they run in parallel, and the
        controlled part runs them in reverse so the CNOT pair at the seam
        cancels."""
        n = self.n_qubits
        fwd = WeightedGraph(n, tuple(_matching_order(self.graph.edges)))
        back = WeightedGraph(n, tuple(reversed(fwd.edges)))
        c = Circuit(n + 1, name="branch")
        c.compose(rte_circuit_ising(fwd, t))
        c.compose(rte_circuit_ising(back, -2 * t, control=(n, 1)))
        return c

    def branch_double(self, t: float) -> Circuit:
        """branch(t) applied twice."""
        return self.branch(2 * t)

    def branch_split(self, t: float) -> Circuit:
        n = self.n_qubits
        c = Circuit(n + 1, name="branch_split")
        c.compose(rte_circuit_ising(self.graph, t, control=(n, 0)))
        c.compose(rte_circuit_ising(self.graph, -t, control=(n, 1)))
        return c


class GridRte:
    """First-order Trotter evolution A(t) = [V F^dg K F]^slices on a grid.

    A(t) is not group-like, so the fused forms built from ``branch(2t)`` or
    from signed sums of times are O(t^2) approximations of the products they
    replace.
    """

    group_like = False

    def __init__(self, grid: GridSpec, slices: int = 1, exact_double: bool = True):
        if slices < 1:
            raise ValueError("need at least one Trotter slice")
        self.grid = grid
        self.slices = int(slices)
        self.n_qubits = grid.n_qubits
        self.exact_double = exact_double

    def evolve(self, t: float) -> Circuit:
        return rte_circuit_grid(self.grid, t, slices=self.slices)

    def branch(self, t: float) -> Circuit:
        """Per slice: V^dg on |1>, CQFT, kinetic phase with sign set by the
        ancilla, CQFT^dg, V on |0>.  The two CQFTs are shared by both branches
        and the potential phases at each seam between slices merge into one
        ancilla-signed diagonal."""
        n, grid = self.n_qubits, self.grid
        dt = t / self.slices
        cq = build_cqft(n)
        kin = grid.k ** 2 / (2 * grid.mass)
        pot = grid.potential()
        signed_kin = np.concatenate([kin, -kin])
        signed_pot = np.concatenate([pot, -pot])
        c = Circuit(n + 1, name="branch")
        c.compose(build_diagonal_phase(pot, -dt, n, control=(n, 1)))
        for k in range(self.slices):
            c.compose(cq)
            c.compose(build_diagonal_phase(signed_kin, dt, n + 1))
            c.compose(cq.inverse())
            if k < self.slices - 1:
                c.compose(build_diagonal_phase(signed_pot, dt, n + 1))
        c.compose(build_diagonal_phase(pot, dt, n, control=(n, 0)))
        return c

    def branch_double(self, t: float) -> Circuit:
        """branch(t) squared.  Exact with twice the slices at the same slice
        width; otherwise one branch(2t), which is cheaper but only O(t^2)."""
        if self.exact_double:
            return GridRte(self.grid, 2 * self.slices).branch(2 * t)
        return self.branch(2 * t)

    def branch_split(self, t: float) -> Circuit:
        n = self.n_qubits
        c = Circuit(n + 1, name="branch_split")
        fwd = self.evolve(t)
        c.compose(_controlled(fwd, n, 0))
        c.compose(_controlled(fwd.inverse(), n, 1))
        return c


def _controlled(c: Circuit, anc: int, value: int) -> Circuit:
    out = Circuit(anc + 1)
    for g in c.gates:
        out.append(type(g)(g.name, g.targets, g.controls + (anc,), g.polarity + (value,),
                           g.params, g.payload, g.adjoint))
    if c.global_phase:
        if value:
            out.p(c.global_phase, anc)
        else:
            out.x(anc)
            out.p(c.global_phase, anc)
            out.x(anc)
    return out


# circuits ------------------------------------------------------------------------

def pite_kernel(rte, theta: float, t: float, form: str = "fused") -> Circuit:
    """W^dg Rz(-2 theta) [A(t) | A(t)^dg] W H with the ancilla on top."""
    n = rte.n_qubits
    anc = n
    c = Circuit(n + 1, name="pite")
    c.h(anc)
    c.w(anc)
    if form == "fused":
        c.compose(rte.branch(t))
    elif form == "split":
        c.compose(rte.branch_split(t))
    else:
        raise ValueError(f"unknown PITE circuit form {form!r}")
    c.rz(-2 * theta, anc)
    c.wdg(anc)
    return c


def approx_pite_circuit(rte, p: PiteParams, form: str = "fused") -> Circuit:
    """First-order approximate PITE circuit for one step.

    ``form="fused"`` runs A(t) unconditionally followed by a controlled
    A(t)^dg squared; ``form="split"`` uses one open- and one closed-controlled
    evolution.  Both give the same unitary.
    """
    return pite_kernel(rte, p.theta_eff, p.t, form)


def two_step_circuit(p2: PiteParams, p1: PiteParams, rte) -> Circuit:
    """approx_pite(p2) . approx_pite(p1) with a single fused evolution block."""
    return two_step_raw(rte, p2.theta_eff, p1.theta_eff, p2.t, p1.t)


def two_step_raw(rte, theta2, theta1, t2, t1) -> Circuit:
    n = rte.n_qubits
    c = Circuit(n + 1, name="pite_two")
    c.h(n)
    c.w(n)
    c.compose(rte.branch(t1 - t2))
    c.rz(2 * (theta2 - theta1) - math.pi / 2, n)
    c.x(n)
    c.wdg(n)
    return c


def d_circuit(rte, theta: float, t: float) -> Circuit:
    """-U^dg (I x XZX) U for U = pite_kernel(theta, t); the branches are squared."""
    n = rte.n_qubits
    c = Circuit(n + 1, name="D")
    c.h(n)
    c.w(n)
    c.compose(rte.branch_double(t))
    c.rz(-4 * theta, n)
    c.x(n)
    c.wdg(n)
    c.h(n)
    return c


def d_two_circuit(rte, theta2, theta1, t2, t1) -> Circuit:
    """-U_two^dg (I x XZX) U_two; the ancilla-|0> branch gets A^dg(t2 - t1)^2."""
    n = rte.n_qubits
    c = Circuit(n + 1, name="D_two")
    c.h(n)
    c.w(n)
    c.compose(rte.branch_double(t1 - t2))
    c.rz(4 * (theta2 - theta1), n)
    c.y(n)
    c.wdg(n)
    c.h(n)
    return c


def fused_product(rte, steps) -> tuple[Circuit, Circuit]:
    """(P, D) for P = U(steps[-1]) ... U(steps[0]) built from one fused block.

    Odd step counts collapse to a single kernel with alternating sums of
    angles and times; even counts to a two-step circuit.  D is the matching
    -P^dg (I x XZX) P.
    """
    steps = list(steps)
    if not steps:
        raise ValueError("need at least one step")
    thetas = [p.theta_eff for p in steps]
    times = [p.t for p in steps]
    if len(steps) % 2:
        th = sum((-1) ** k * v for k, v in enumerate(thetas))
        tt = sum((-1) ** k * v for k, v in enumerate(times))
        return pite_kernel(rte, th, tt), d_circuit(rte, th, tt)
    th1 = sum((-1) ** k * v for k, v in enumerate(thetas[:-1]))
    tt1 = sum((-1) ** k * v for k, v in enumerate(times[:-1]))
    return (two_step_raw(rte, thetas[-1], th1, times[-1], tt1),
            d_two_circuit(rte, thetas[-1], th1, times[-1], tt1))


# dense references ------------------------------------------------------------------

def m_eigenvalues(h: HamiltonianOracle, p: PiteParams) -> np.ndarray:
    return p.gamma * np.exp(-(h.eigenvalues + p.e0_shift) * p.dtau)


def exact_pite_unitary(h: HamiltonianOracle, p: PiteParams, slack: float = 1e-9) -> np.ndarray:
    """Dense U_M with ancilla-|0> block exactly M = gamma exp(-(H + e0) dtau).

    The sign kappa is taken per eigenvalue of M, which keeps sin(kappa Theta)
    equal to (M - sqrt(1 - M^2))/sqrt(2) on the whole spectrum.  A warning is
    raised when that differs from the scalar sign(gamma - 1/sqrt(2)).
    """
    m = m_eigenvalues(h, p)
    if m.max() > 1 + slack:
        raise ValueError(f"||M|| = {m.max():.6g} exceeds 1; raise e0_shift or lower gamma")
    m = np.clip(m, 0.0, 1.0)
    comp = np.sqrt(1 - m * m)
    theta = np.arccos(np.clip((m + comp) * INV_SQRT2, -1, 1))
    kappa = np.where(m >= INV_SQRT2, 1.0, -1.0)
    if np.any(kappa != p.kappa) and np.any(np.abs(m - INV_SQRT2) > 1e-12):
        warnings.warn("spectrum of M straddles 1/sqrt(2); using per-eigenvalue kappa",
                      StraddleWarning, stacklevel=2)
    v = h.eigenvectors
    e = (v * np.exp(1j * kappa * theta)) @ v.conj().T
    dim = h.dim
    mid = np.zeros((2 * dim, 2 * dim), dtype=complex)
    mid[:dim, :dim] = e
    mid[dim:, dim:] = e.conj().T
    eye = np.eye(dim)
    return np.kron(_W.conj().T, eye) @ mid @ np.kron(_W @ _H, eye)


def exact_block(h: HamiltonianOracle, p: PiteParams) -> np.ndarray:
    return h.function(lambda lam: p.gamma * np.exp(-(lam + p.e0_shift) * p.dtau))


def approx_block(h: HamiltonianOracle, p: PiteParams) -> np.ndarray:
    """Ancilla-|0> block of the approximate circuit with exact evolution:
    cos(arccos(gamma) + s dtau (H + e0))."""
    phi = math.acos(p.gamma)
    return h.function(lambda lam: np.cos(phi + p.t * (lam + p.e0_shift)))


def alpha_squared(psi, h: HamiltonianOracle, dtau: float, e0: float = 0.0) -> float:
    """<psi| exp(-2 (H + e0) dtau) |psi>."""
    vec = psi.amplitudes if isinstance(psi, QuantumState) else np.asarray(psi)
    w = np.abs(h.eigenvectors.conj().T @ vec) ** 2
    return float(np.sum(w * np.exp(-2 * (h.eigenvalues + e0) * dtau)))


def success_probability(psi, h: HamiltonianOracle, p: PiteParams) -> float:
    """gamma^2 <psi| exp(-2 (H + e0) dtau) |psi> for the exact PITE."""
    return p.gamma ** 2 * alpha_squared(psi, h, p.dtau, p.e0_shift)


def circuit_success_probability(psi: QuantumState, c: Circuit) -> float:
    """Ancilla-|0> probability after running ``c`` on psi (x) |0>."""
    return branch_probability(apply_circuit(psi.with_ancilla(), c), 0)
