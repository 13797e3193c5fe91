"""Gate and circuit data model.

Every gate is a single-qubit base operation with an arbitrary list of
(possibly open) controls, a multi-qubit matrix payload, or a reference to a
sub-circuit.  Sub-circuit references keep large recursive constructions
(amplification powers, multi-step references) compact: they are simulated via
a cached dense unitary and their metrics are composed instead of re-counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kernel import apply_matrix

SQ2 = 1 / math.sqrt(2)

_FIXED = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) * SQ2,
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "t": np.diag([1, np.exp(1j * math.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * math.pi / 4)]),
    "w": np.array([[1, -1j], [1, 1j]], dtype=complex) * SQ2,
    "wdg": np.array([[1, 1], [1j, -1j]], dtype=complex) * SQ2,
}
_SELF_INVERSE = {"i", "x", "y", "z", "h"}
_PAIRS = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t", "w": "wdg", "wdg": "w"}
_ROTATIONS = {"rx", "ry", "rz", "p"}

# dense unitaries of sub-circuits are cached up to this width
DENSE_BLOCK_LIMIT = 8


def rotation(name: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if name == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if name == "p":
        return np.diag([1, np.exp(1j * angle)]).astype(complex)
    raise KeyError(name)


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit instruction.

    ``name`` is a base single-qubit gate (``x``, ``h``, ``rz``...), ``unitary``
    for a matrix payload on ``targets`` or ``block`` for a sub-circuit whose
    qubit ``i`` is mapped onto ``targets[i]``.
    """

    name: str
    targets: tuple
    controls: tuple = ()
    polarity: tuple = ()
    params: tuple = ()
    payload: object = None
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        pol = tuple(int(p) for p in self.polarity) or (1,) * len(self.controls)
        object.__setattr__(self, "polarity", pol)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(pol) != len(self.controls):
            raise ValueError("one polarity entry per control is required")
        qs = self.targets + self.controls
        if len(set(qs)) != len(qs):
            raise ValueError(f"gate {self.name} reuses a qubit: {qs}")
        if self.name == "block" and self.controls:
            raise ValueError("blocks cannot carry controls; build the controlled form instead")

    @property
    def qubits(self) -> tuple:
        return self.controls + self.targets

    def is_cx(self) -> bool:
        return self.name == "x" and len(self.controls) == 1 and self.polarity == (1,)

    def base_matrix(self) -> np.ndarray:
        """Matrix on the targets alone, ignoring controls."""
        if self.name in _FIXED:
            return _FIXED[self.name]
        if self.name in _ROTATIONS:
            return rotation(self.name, self.params[0])
        if self.name in ("u", "unitary"):
            m = np.asarray(self.payload, dtype=complex)
            return m.conj().T if self.adjoint else m
        if self.name == "block":
            u = self.payload.unitary()
            return u.conj().T if self.adjoint else u
        raise KeyError(f"unknown gate kind {self.name!r}")

    def inverse(self) -> "Gate":
        kw = dict(targets=self.targets, controls=self.controls, polarity=self.polarity)
        if self.name in _SELF_INVERSE:
            return self
        if self.name in _PAIRS:
            return Gate(_PAIRS[self.name], **kw)
        if self.name in _ROTATIONS:
            return Gate(self.name, params=(-self.params[0],), **kw)
        if self.name in ("u", "unitary", "block"):
            return Gate(self.name, params=self.params, payload=self.payload,
                        adjoint=not self.adjoint, **kw)
        raise KeyError(f"unknown gate kind {self.name!r}")

    def remap(self, mapping: Sequence[int]) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.targets),
                    tuple(mapping[q] for q in self.controls), self.polarity,
                    self.params, self.payload, self.adjoint)


class Circuit:
    """Ordered gate list on ``n_qubits`` qubits with a tracked global phase.

    Circuits are built with the helper methods and treated as immutable once
    handed to other code.  Dense unitaries and metrics are cached per object.
    """

    def __init__(self, n_qubits: int, gates: Iterable[Gate] = (), global_phase: float = 0.0,
                 name: str | None = None):
        if n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.n_qubits = int(n_qubits)
        self.gates: list[Gate] = []
        self.global_phase = float(global_phase)
        self.name = name
        self._cache: dict = {}
        for g in gates:
            self.append(g)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Circuit{label} {self.n_qubits}q {len(self.gates)} gates>"

    def append(self, g: Gate) -> "Circuit":
        for q in g.qubits:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range for {self.n_qubits}-qubit circuit")
        if g.name == "block" and g.payload.n_qubits != len(g.targets):
            raise ValueError("block width does not match its qubit map")
        self.gates.append(g)
        self._cache.clear()
        return self

    def _add(self, name, target, controls=(), polarity=(), params=()):
        return self.append(Gate(name, (target,), tuple(controls), tuple(polarity), tuple(params)))

    # single-qubit helpers; ``controls`` turns any of them into a controlled gate
    def x(self, q, controls=(), polarity=()):
        return self._add("x", q, controls, polarity)

    def y(self, q, controls=(), polarity=()):
        return self._add("y", q, controls, polarity)

    def z(self, q, controls=(), polarity=()):
        return self._add("z", q, controls, polarity)

    def h(self, q, controls=(), polarity=()):
        return self._add("h", q, controls, polarity)

    def s(self, q):
        return self._add("s", q)

    def sdg(self, q):
        return self._add("sdg", q)

    def t(self, q):
        return self._add("t", q)

    def tdg(self, q):
        return self._add("tdg", q)

    def w(self, q):
        return self._add("w", q)

    def wdg(self, q):
        return self._add("wdg", q)

    def rx(self, angle, q, controls=(), polarity=()):
        return self._add("rx", q, controls, polarity, (angle,))

    def ry(self, angle, q, controls=(), polarity=()):
        return self._add("ry", q, controls, polarity, (angle,))

    def rz(self, angle, q, controls=(), polarity=()):
        return self._add("rz", q, controls, polarity, (angle,))

    def p(self, angle, q, controls=(), polarity=()):
        return self._add("p", q, controls, polarity, (angle,))

    def cx(self, c, t):
        return self.x(t, (c,))

    def ccx(self, c1, c2, t):
        return self.x(t, (c1, c2))

    def cz(self, c, t):
        return self.z(t, (c,))

    def cp(self, angle, c, t):
        return self.p(angle, t, (c,))

    def crz(self, angle, c, t):
        return self.rz(angle, t, (c,))

    def mcx(self, controls, target, polarity=()):
        return self.x(target, tuple(controls), polarity)

    def u(self, matrix, q, controls=(), polarity=()):
        m = np.asarray(matrix, dtype=complex)
        return self.append(Gate("u", (q,), tuple(controls), tuple(polarity), payload=m))

    def mq_unitary(self, matrix, targets, controls=(), polarity=()):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2 ** len(targets),) * 2:
            raise ValueError("matrix size does not match target count")
        return self.append(Gate("unitary", tuple(targets), tuple(controls), tuple(polarity), payload=m))

    def block(self, sub: "Circuit", qubits=None, adjoint=False):
        qubits = tuple(range(sub.n_qubits)) if qubits is None else tuple(qubits)
        return self.append(Gate("block", qubits, payload=sub, adjoint=adjoint))

    def phase(self, angle):
        self.global_phase += float(angle)
        self._cache.clear()
        return self

    def compose(self, other: "Circuit", qubits=None) -> "Circuit":
        """Inline ``other`` (mapped onto ``qubits``) at the end of this circuit."""
        mapping = tuple(range(other.n_qubits)) if qubits is None else tuple(qubits)
        if len(mapping) != other.n_qubits:
            raise ValueError("qubit map must cover every qubit of the composed circuit")
        for g in other.gates:
            self.append(g.remap(mapping))
        return self.phase(other.global_phase)

    def copy(self, name=None) -> "Circuit":
        return Circuit(self.n_qubits, self.gates, self.global_phase, name or self.name)

    def inverse(self) -> "Circuit":
        name = None if self.name is None else self.name + "_dg"
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)],
                       -self.global_phase, name)

    def count_ops(self) -> dict:
        out: dict = {}
        for g in self.gates:
            key = ("c" * len(g.controls)) + g.name
            out[key] = out.get(key, 0) + 1
        return out

    def has_blocks(self) -> bool:
        return any(g.name == "block" for g in self.gates)

    def flatten(self) -> "Circuit":
        """Inline every sub-circuit reference recursively."""
        out = Circuit(self.n_qubits, global_phase=self.global_phase, name=self.name)
        for g in self.gates:
            if g.name == "block":
                sub = g.payload.inverse() if g.adjoint else g.payload
                out.compose(sub.flatten(), g.targets)
            else:
                out.append(g)
        return out

    def run(self, psi: np.ndarray) -> None:
        """Apply to a register tensor of shape ``(2,)*n + (batch,)`` in place."""
        n = self.n_qubits
        for g in self.gates:
            if g.name == "block" and g.payload.n_qubits > DENSE_BLOCK_LIMIT:
                sub = g.payload.inverse() if g.adjoint else g.payload
                _run_mapped(psi, n, sub, g.targets)
            else:
                apply_matrix(psi, n, g.base_matrix(), g.targets, g.controls, g.polarity)
        if self.global_phase:
            psi *= np.exp(1j * self.global_phase)

    def unitary(self) -> np.ndarray:
        if "unitary" not in self._cache:
            dim = 2 ** self.n_qubits
            psi = np.eye(dim, dtype=complex).reshape((2,) * self.n_qubits + (dim,))
            self.run(psi)
            self._cache["unitary"] = psi.reshape(dim, dim)
        return self._cache["unitary"]

    # text dump ---------------------------------------------------------------
    def dumps(self) -> str:
        """One gate per line: ``GATE targets [controls] [angle...]``.

        Sub-circuits are inlined.  Open controls carry a ``~`` prefix and
        matrix payloads are written as ZYZ Euler angles plus a phase.
        """
        from .linalg import zyz_angles

        flat = self.flatten()
        lines = [f"# qubits {flat.n_qubits}", f"# global_phase {flat.global_phase!r}"]
        for g in flat.gates:
            parts = [g.name.upper(), ",".join(map(str, g.targets))]
            if g.controls:
                ctl = ",".join(("" if p else "~") + str(c) for c, p in zip(g.controls, g.polarity))
                parts.append(f"[{ctl}]")
            if g.name == "u":
                parts.extend(repr(v) for v in zyz_angles(g.base_matrix()))
            elif g.name == "unitary":
                raise ValueError("multi-qubit matrix payloads have no text form")
            else:
                parts.extend(repr(v) for v in g.params)
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        from .linalg import zyz_matrix

        n, phase, rows = None, 0.0, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" ")
                if key == "qubits":
                    n = int(val)
                elif key == "global_phase":
                    phase = float(val)
                continue
            rows.append(line.split())
        if n is None:
            n = 1 + max(int(q) for r in rows for q in _qubits_of(r))
        c = cls(n, global_phase=phase)
        for r in rows:
            name, targets, rest = r[0].lower(), tuple(int(q) for q in r[1].split(",")), r[2:]
            controls, polarity = (), ()
            if rest and rest[0].startswith("["):
                items = rest[0][1:-1].split(",")
                controls = tuple(int(i.lstrip("~")) for i in items)
                polarity = tuple(0 if i.startswith("~") else 1 for i in items)
                rest = rest[1:]
            vals = tuple(float(v) for v in rest)
            if name == "u":
                c.append(Gate("u", targets, controls, polarity, payload=zyz_matrix(*vals)))
            else:
                c.append(Gate(name, targets, controls, polarity, vals))
        return c


def _qubits_of(row):
    out = list(row[1].split(","))
    if len(row) > 2 and row[2].startswith("["):
        out += [i.lstrip("~") for i in row[2][1:-1].split(",")]
    return out


def _run_mapped(psi, n, sub, mapping):
    for g in sub.gates:
        g = g.remap(mapping)
        if g.name == "block" and g.payload.n_qubits > DENSE_BLOCK_LIMIT:
            inner = g.payload.inverse() if g.adjoint else g.payload
            _run_mapped(psi, n, inner, g.targets)
        else:
            apply_matrix(psi, n, g.base_matrix(), g.targets, g.controls, g.polarity)
    if sub.global_phase:
        psi *= np.exp(1j * sub.global_phase)


def controlled_matrix(mat: np.ndarray, n_controls: int, polarity=None) -> np.ndarray:
    """Dense matrix of ``mat`` with controls on the high qubits (test helper)."""
    k = n_controls
    pol = (1,) * k if polarity is None else tuple(polarity)
    m = mat.shape[0]
    dim = m * 2 ** k
    out = np.eye(dim, dtype=complex)
    sel = sum(b << i for i, b in enumerate(pol))
    lo = sel * m
    out[lo:lo + m, lo:lo + m] = mat
    return out
