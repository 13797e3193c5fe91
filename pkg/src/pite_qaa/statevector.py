"""Dense statevector with an optional ancilla, post-selection and comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit

DEFAULT_CAP = 14


class CapacityError(ValueError):
    """Requested register does not fit the dense memory budget."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitudes over ``n_qubits`` qubits, little-endian.

    ``ancilla_index`` marks the PITE ancilla, by convention the highest qubit,
    or ``None`` for a bare working register.  Instances are never mutated.
    """

    n_qubits: int
    amplitudes: np.ndarray
    ancilla_index: int | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 2 ** self.n_qubits:
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {a.size}")
        if self.ancilla_index is not None and not 0 <= self.ancilla_index < self.n_qubits:
            raise ValueError("ancilla index out of range")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def working_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q != self.ancilla_index]

    def with_ancilla(self) -> "QuantumState":
        """Append a fresh |0> ancilla above the register."""
        if self.ancilla_index is not None:
            raise ValueError("state already carries an ancilla")
        amps = np.concatenate([self.amplitudes, np.zeros(self.dim, dtype=complex)])
        return QuantumState(self.n_qubits + 1, amps, self.n_qubits)

    def expectation(self, op: np.ndarray) -> float:
        return float(np.real(np.vdot(self.amplitudes, op @ self.amplitudes)))


@dataclass(frozen=True)
class AmplitudeEstimate:
    """Good-state amplitude a = sin(theta_a)."""

    a: float
    theta_a: float = field(init=False)

    def __post_init__(self):
        if not -1e-12 <= self.a <= 1 + 1e-12:
            raise ValueError("amplitude must lie in [0, 1]")
        a = min(max(self.a, 0.0), 1.0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta_a", math.asin(a))

    @classmethod
    def of(cls, state: QuantumState, good: int = 0) -> "AmplitudeEstimate":
        return cls(math.sqrt(branch_probability(state, good)))


def zero_state(n: int, cap: int = DEFAULT_CAP, ancilla: bool = False) -> QuantumState:
    """|0...0> on ``n`` qubits; with ``ancilla`` the top qubit is flagged."""
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the dense cap of {cap}")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = 1
    return QuantumState(n, amps, n - 1 if ancilla else None)


def from_vector(vec, ancilla: bool = False) -> QuantumState:
    vec = np.asarray(vec, dtype=complex).ravel()
    n = int(round(math.log2(vec.size)))
    if 2 ** n != vec.size:
        raise ValueError("vector length must be a power of two")
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("zero vector")
    return QuantumState(n, vec / nrm, n - 1 if ancilla else None)


def apply_circuit(state: QuantumState, c: Circuit) -> QuantumState:
    """Return ``c |state>``; the circuit may be narrower than the state."""
    if c.n_qubits > state.n_qubits:
        raise IndexError(f"{c.n_qubits}-qubit circuit on a {state.n_qubits}-qubit state")
    n = state.n_qubits
    psi = np.array(state.amplitudes).reshape((2,) * n + (1,))
    if c.n_qubits == n:
        c.run(psi)
    else:
        wide = Circuit(n)
        wide.block(c, range(c.n_qubits))
        wide.run(psi)
    return QuantumState(n, psi.reshape(-1), state.ancilla_index)


def _split(state: QuantumState, qubit: int) -> np.ndarray:
    """Amplitudes reshaped to (high, 2, low) around ``qubit``."""
    return state.amplitudes.reshape(2 ** (state.n_qubits - qubit - 1), 2, 2 ** qubit)


def branch_probability(state: QuantumState, outcome: int = 0) -> float:
    q = _ancilla_of(state)
    return float(np.sum(np.abs(_split(state, q)[:, outcome, :]) ** 2))


def _ancilla_of(state: QuantumState) -> int:
    if state.ancilla_index is None:
        raise ValueError("state has no ancilla")
    return state.ancilla_index


def postselect_ancilla(state: QuantumState, outcome: int = 0, atol: float = 1e-15):
    """Project the ancilla onto ``outcome`` and drop it.

    Returns the renormalised working-register state and the branch probability.
    """
    q = _ancilla_of(state)
    branch = _split(state, q)[:, int(outcome), :].reshape(-1)
    prob = float(np.vdot(branch, branch).real)
    if prob <= atol:
        raise ValueError(f"ancilla outcome {outcome} has zero probability")
    return QuantumState(state.n_qubits - 1, branch / math.sqrt(prob)), prob


def fidelity(a: QuantumState, b: QuantumState) -> float:
    va = a.amplitudes if isinstance(a, QuantumState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, QuantumState) else np.asarray(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    return float(min(1.0, abs(np.vdot(va, vb)) ** 2))


def reduced_ancilla(state: QuantumState) -> np.ndarray:
    q = _ancilla_of(state)
    t = _split(state, q)
    return np.einsum("iaj,ibj->ab", t, t.conj())


def ancilla_purity(state: QuantumState) -> float:
    """Tr(rho_a^2) of the reduced ancilla density matrix."""
    rho = reduced_ancilla(state)
    return float(np.real(np.trace(rho @ rho)))
