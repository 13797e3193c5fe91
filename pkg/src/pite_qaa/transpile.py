"""Lowering to the CNOT + single-qubit basis and circuit metrics.

Lowering is exact, global phase included.  After lowering, each run of gates
between sub-circuit references gets two light clean-ups: adjacent
single-qubit gates on a wire are fused (and dropped when they reduce to a
phase) and back-to-back identical CNOTs are removed.  Sub-circuit references
are optimisation barriers, so metrics compose block by block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, rotation
from .linalg import global_phase_of, zyz_angles

NEG_INF = -np.inf


@dataclass(frozen=True)
class CircuitMetrics:
    depth: int
    cnot_count: int
    total_gates: int


def transpile_to_basis(c: Circuit, ancilla_budget: int = 1) -> Circuit:
    """Lower ``c`` to CNOT and single-qubit ``u`` gates.

    Multi-controlled X gates borrow an idle qubit (returned in its original
    state) to keep their cost linear.  Idle register qubits are used first;
    otherwise up to ``ancilla_budget`` extra qubits are appended after the
    register, in which case the result acts as ``U (x) I`` on the wider space.
    """
    key = ("transpiled", ancilla_budget)
    if key in c._cache:
        return c._cache[key]
    n = c.n_qubits
    width = n + ancilla_budget
    extras = list(range(n, width))
    out = Circuit(width, global_phase=c.global_phase, name=c.name)
    segment: list[Gate] = []

    def flush():
        if segment:
            low = Circuit(width)
            for g in segment:
                _lower(g, low, ancilla_budget)
            gates, ph = _peephole(low.gates, width)
            for g in gates:
                out.append(g)
            out.phase(low.global_phase + ph)
            segment.clear()

    for g in c.gates:
        if g.name == "block":
            flush()
            sub = transpile_to_basis(g.payload, ancilla_budget)
            sub = sub.inverse() if g.adjoint else sub
            out.compose(sub, list(g.targets) + extras[:sub.n_qubits - len(g.targets)])
        else:
            segment.append(g)
    flush()
    if width > n and all(q < n for g in out.gates for q in g.qubits):
        out = Circuit(n, out.gates, out.global_phase, c.name)
    c._cache[key] = out
    return out


def is_basis(g: Gate) -> bool:
    return g.is_cx() or (g.name == "u" and not g.controls)


# lowering rules -------------------------------------------------------------

_TOFFOLI = [("h", 2), ("cx", 1, 2), ("tdg", 2), ("cx", 0, 2), ("t", 2), ("cx", 1, 2),
            ("tdg", 2), ("cx", 0, 2), ("t", 1), ("t", 2), ("h", 2), ("cx", 0, 1),
            ("t", 0), ("tdg", 1), ("cx", 0, 1)]


def _emit_u(out: Circuit, m: np.ndarray, q: int):
    ph = global_phase_of(m, 1e-12)
    if ph is None:
        out.append(Gate("u", (q,), payload=np.array(m, dtype=complex)))
    else:
        out.phase(ph)


def _lower(g: Gate, out: Circuit, budget: int):
    if is_basis(g):
        out.append(g)
        return
    if g.name == "block":
        raise ValueError("blocks are handled by transpile_to_basis")
    if g.name == "unitary" and len(g.targets) > 1:
        raise ValueError("no decomposition rule for multi-qubit matrix payloads")
    if g.name not in ("i", "x", "y", "z", "h", "s", "sdg", "t", "tdg", "w", "wdg",
                      "rx", "ry", "rz", "p", "u", "unitary"):
        raise ValueError(f"unknown gate kind {g.name!r}")

    t = g.targets[0]
    m = g.base_matrix()
    opened = [c for c, p in zip(g.controls, g.polarity) if not p]
    if opened:
        for c in opened:
            _emit_u(out, rotation("rx", math.pi) * 1j, c)
        _lower(Gate("u", (t,), g.controls, payload=m), out, budget)
        for c in opened:
            _emit_u(out, rotation("rx", math.pi) * 1j, c)
        return

    k = len(g.controls)
    if k == 0:
        _emit_u(out, m, t)
    elif k == 1:
        _lower_single_control(m, g.controls[0], t, out)
    elif k == 2 and g.name == "x":
        qs = (g.controls[0], g.controls[1], t)
        for step in _TOFFOLI:
            if step[0] == "cx":
                out.cx(qs[step[1]], qs[step[2]])
            else:
                _lower(Gate(step[0], (qs[step[1]],)), out, budget)
    elif abs(m[0, 1]) < 1e-14 and abs(m[1, 0]) < 1e-14:
        _lower_diagonal(m, g.controls, t, out, budget)
    elif g.name == "x":
        from .library import build_mcx

        qs = list(g.controls) + [t]
        free = [q for q in range(out.n_qubits) if q not in qs]
        use = bool(free)
        sub = build_mcx(k, use_ancilla=use)
        if use:
            qs.append(free[0])
        for h in sub.gates:
            _lower(h.remap(qs), out, budget)
        out.phase(sub.global_phase)
    else:
        # C^k U = C V (c_k) . C^{k-1}X(c_k) . C V^dg (c_k) . C^{k-1}X(c_k) . C^{k-1} V
        v = _sqrtm2(m)
        *rest, last = g.controls
        for h in (Gate("u", (t,), (last,), payload=v),
                  Gate("x", (last,), tuple(rest)),
                  Gate("u", (t,), (last,), payload=v.conj().T),
                  Gate("x", (last,), tuple(rest)),
                  Gate("u", (t,), tuple(rest), payload=v)):
            _lower(h, out, budget)


def _lower_single_control(m, c, t, out):
    a = np.angle(np.linalg.det(m)) / 2
    v = m * np.exp(-1j * a)
    if abs(np.trace(v)) < 1e-12:
        # v is a reflection: v = B X B^dg with B mapping |+>,|-> onto its eigenvectors
        w, vecs = np.linalg.eig(v * -1j)
        # v has eigenvalues +-i after removing det, so -i*v has +-1
        order = np.argsort(-w.real)
        b = vecs[:, order] @ (np.array([[1, 1], [1, -1]]) / math.sqrt(2))
        a += math.pi / 2
        _emit_u(out, b.conj().T, t)
        out.cx(c, t)
        _emit_u(out, b, t)
        _emit_u(out, np.diag([1, np.exp(1j * a)]), c)
        return
    theta, phi, lam, extra = zyz_angles(v)
    a += extra
    # v = Rz(phi) Ry(theta) Rz(lam) = A X B X C with ABC = I
    A = rotation("rz", phi) @ rotation("ry", theta / 2)
    B = rotation("ry", -theta / 2) @ rotation("rz", -(lam + phi) / 2)
    C = rotation("rz", (lam - phi) / 2)
    _emit_u(out, C, t)
    out.cx(c, t)
    _emit_u(out, B, t)
    out.cx(c, t)
    _emit_u(out, A, t)
    _emit_u(out, np.diag([1, np.exp(1j * a)]), c)


def _lower_diagonal(m, controls, t, out, budget):
    """Multi-controlled diag(e^{ia}, e^{ib}) as a phase polynomial."""
    a, b = np.angle(m[0, 0]), np.angle(m[1, 1])
    if abs(a) > 1e-15:
        *rest, last = controls
        _lower(Gate("p", (last,), tuple(rest), params=(a,)), out, budget)
    phi = b - a
    qs = list(controls) + [t]
    if len(qs) == 3:
        q1, q2, q3 = qs
        f = phi / 4
        for q in qs:
            _p(out, f, q)
        out.cx(q1, q2)
        _p(out, -f, q2)
        out.cx(q1, q2)
        out.cx(q1, q3)
        _p(out, -f, q3)
        out.cx(q2, q3)
        _p(out, f, q3)
        out.cx(q1, q3)
        _p(out, -f, q3)
        out.cx(q2, q3)
        return
    # generic: e^{i phi x1...xm} = prod_S exp(i phi (-1)^{|S|+1} 2^{1-m} parity_S)
    mq = len(qs)
    scale = phi / 2 ** (mq - 1)
    for mask in range(1, 2 ** mq):
        sub = [qs[i] for i in range(mq) if mask >> i & 1]
        sign = 1 if len(sub) % 2 else -1
        pivot = sub[-1]
        for q in sub[:-1]:
            out.cx(q, pivot)
        _p(out, sign * scale, pivot)
        for q in reversed(sub[:-1]):
            out.cx(q, pivot)


def _p(out, angle, q):
    _emit_u(out, np.diag([1, np.exp(1j * angle)]), q)


def _sqrtm2(m):
    w, v = np.linalg.eig(m)
    return v @ np.diag(np.sqrt(w.astype(complex))) @ np.linalg.inv(v)


# clean-up pass ----------------------------------------------------------------

def _peephole(gates, n):
    phase = 0.0
    while True:
        gates, ph, changed = _peephole_pass(gates, n)
        phase += ph
        if not changed:
            return gates, phase


def _peephole_pass(gates, n):
    out: list = []
    last = [[] for _ in range(n)]
    pending: list = [None] * n
    phase = 0.0
    changed = False

    def flush(q):
        nonlocal phase
        m = pending[q]
        if m is None:
            return
        pending[q] = None
        ph = global_phase_of(m, 1e-12)
        if ph is not None:
            phase += ph
            return
        out.append(Gate("u", (q,), payload=m))
        last[q].append(len(out) - 1)

    n_in = len(gates)
    for g in gates:
        if g.name == "u":
            q = g.targets[0]
            m = g.base_matrix()
            pending[q] = m if pending[q] is None else m @ pending[q]
            continue
        c, t = g.controls[0], g.targets[0]
        flush(c)
        flush(t)
        if last[c] and last[t] and last[c][-1] == last[t][-1]:
            prev = out[last[c][-1]]
            if prev is not None and prev.controls == (c,) and prev.targets == (t,):
                out[last[c][-1]] = None
                last[c].pop()
                last[t].pop()
                changed = True
                continue
        out.append(g)
        last[c].append(len(out) - 1)
        last[t].append(len(out) - 1)
    for q in range(n):
        flush(q)
    result = [g for g in out if g is not None]
    if len(result) != n_in:
        changed = changed or len(result) < n_in
    return result, phase, changed


# metrics ---------------------------------------------------------------------

def metrics(c: Circuit, ancilla_budget: int = 1) -> CircuitMetrics:
    """CNOT count, total gate count and greedy-layer depth in the lowered basis."""
    cx, total, prof = _profile(c, ancilla_budget)
    depth = int(max(prof.max(), 0)) if prof.size else 0
    return CircuitMetrics(depth=depth, cnot_count=int(cx), total_gates=int(total))


def _profile(c: Circuit, budget: int):
    """Return (cnots, gates, P) where P[i, j] is the longest gate path from the
    input of qubit j to the output of qubit i (-inf when disconnected)."""
    key = ("profile", budget)
    if key in c._cache:
        return c._cache[key]
    n = c.n_qubits + budget
    prof = np.full((n, n), NEG_INF)
    np.fill_diagonal(prof, 0.0)
    cx = total = 0
    segment: list[Gate] = []

    def flush():
        nonlocal cx, total, prof
        if not segment:
            return
        seg = Circuit(c.n_qubits, segment)
        low = transpile_to_basis(seg, budget)
        for g in low.gates:
            qs = list(g.qubits)
            row = prof[qs].max(axis=0) + 1
            prof[qs] = row
            total += 1
            cx += g.is_cx()
        segment.clear()

    for g in c.gates:
        if g.name == "block":
            flush()
            bcx, btot, bprof = _profile(g.payload, budget)
            if g.adjoint:
                bprof = bprof.T
            qs = list(g.targets) + list(range(c.n_qubits, n))
            sub = prof[qs]
            new = (bprof[:, :, None] + sub[None, :, :]).max(axis=1)
            prof[qs] = new
            cx += bcx
            total += btot
        else:
            segment.append(g)
    flush()
    res = (cx, total, prof)
    c._cache[key] = res
    return res
