"""Circuit builders: multi-controlled X, zero reflection, centred QFT,
polynomial phase oracles and state preparation."""

from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit
from .grid import GridSpec

PI4 = math.pi / 4


# multi-controlled X ----------------------------------------------------------

def build_mcx(n_controls: int, use_ancilla: bool = False) -> Circuit:
    """C^k(X) with controls 0..k-1 and target k.

    With ``use_ancilla`` the circuit has one more qubit (index k+1) that is
    borrowed in an arbitrary state and returned untouched.  The register is
    split in two halves that take turns flipping the borrowed qubit and the
    target; each half is a chain of relative-phase Toffolis that uses the
    other half as dirty workspace, so the CNOT count grows linearly in k.
    Small k falls back to an ancilla-free phase polynomial.
    """
    k = int(n_controls)
    if k < 1:
        raise ValueError("need at least one control")
    width = k + 1 + (1 if use_ancilla else 0)
    c = Circuit(width, name=f"mcx{k}")
    ctrls, t = list(range(k)), k
    if k == 1:
        c.cx(0, 1)
    elif k == 2:
        c.ccx(0, 1, 2)
    elif not use_ancilla or k <= 4:
        c.h(t)
        phase_polynomial(c, ctrls + [t], math.pi)
        c.h(t)
    else:
        _linear_mcx(c, ctrls, t, k + 1)
    return c


def _lr_toffoli(c: Circuit, a, b, t, cancel=None):
    """Toffoli up to a relative phase (3 CNOTs); ``cancel`` drops the
    half that meets its mirror image in a neighbouring gate."""
    if cancel != "left":
        c.ry(-PI4, t)
        c.cx(b, t)
        c.ry(-PI4, t)
    c.cx(a, t)
    if cancel != "right":
        c.ry(PI4, t)
        c.cx(b, t)
        c.ry(PI4, t)


def _vchain_dirty(c: Circuit, ctrls, work, target, relative=False):
    """C^k(X) onto ``target`` borrowing the k-2 qubits in ``work``.

    With ``relative`` the result is correct only up to a phase that depends on
    the controls; callers must undo it with a second application.
    """
    k = len(ctrls)
    if k < 3 or (k == 3 and not relative):
        c.mcx(ctrls, target)
        return
    na = k - 2
    work = list(work[:na])
    targets = [target] + work[::-1]
    for rep in range(2):
        for i in range(k):
            if i < k - 2:
                pair = (work[na - i - 1], ctrls[k - i - 1])
                if targets[i] != target or relative:
                    side = "left" if (relative and targets[i] == target and rep == 1) else "right"
                    _lr_toffoli(c, *pair, targets[i], cancel=side)
                else:
                    c.ccx(*pair, targets[i])
            else:
                _lr_toffoli(c, ctrls[k - i - 2], ctrls[k - i - 1], targets[i])
                break
        for i in range(na - 1):
            _lr_toffoli(c, work[i], ctrls[2 + i], work[i + 1], cancel="left")


def _vchain_exact(c: Circuit, ctrls, work, target):
    """Exact C^k(X) onto ``target`` borrowing k-2 qubits, 8k-10 CNOTs.

    The target is touched only through a four-CNOT wrapper on the last work
    qubit; the relative-phase chain in between runs twice so every borrowed
    qubit returns to its input state.
    """
    k = len(ctrls)
    if k < 3:
        c.mcx(ctrls, target)
        return
    a, last = work[k - 3], ctrls[-1]
    c.h(target)
    for q in (target, last, target, last):
        if q == target:
            c.cx(target, a)
            c.p(-PI4, a)
        else:
            c.cx(last, a)
            c.p(PI4, a)
    _relative_chain(c, ctrls, work)
    for q in (last, target, last, target):
        c.p(-PI4 if q == last else PI4, a)
        c.cx(q, a)
    c.h(target)
    _relative_chain(c, ctrls, work)


def _relative_chain(c, ctrls, work):
    k = len(ctrls)
    i = k - 3
    for j in reversed(range(2, k - 1)):
        _lr_toffoli(c, work[i - 1], ctrls[j], work[i], cancel="right")
        i -= 1
    _lr_toffoli(c, ctrls[0], ctrls[1], work[0])
    for j in range(2, k - 1):
        _lr_toffoli(c, work[i], ctrls[j], work[i + 1], cancel="left")
        i += 1


def _linear_mcx(c: Circuit, ctrls, target, anc):
    k = len(ctrls)
    k1 = (k + 2) // 2
    k2 = k + 1 - k1
    first = ctrls[:k1]
    first_work = ctrls[k1:k1 + k1 - 2]
    second = ctrls[k1:] + [anc]
    second_work = ctrls[k1 - k2 + 2:k1]
    for _ in range(2):
        _vchain_dirty(c, first, first_work, anc, relative=True)
        _vchain_exact(c, second, second_work, target)


def phase_polynomial(c: Circuit, qubits, phi: float):
    """Append e^{i phi x_1 x_2 ... x_m} over ``qubits`` using 2^m - 2 CNOTs.

    The product expands into parities with coefficients
    phi (-1)^{|S|+1} / 2^{m-1}.  Parities containing the last qubit are
    visited in Gray-code order, the remaining ones recursively.
    """
    qs = list(qubits)
    if not qs:
        c.phase(phi)
        return
    _phase_poly(c, qs, phi / 2 ** (len(qs) - 1))


def _phase_poly(c, qs, scale):
    pivot, others = qs[-1], qs[:-1]
    c.p(scale, pivot)
    prev = 0
    for i in range(1, 2 ** len(others)):
        gray = i ^ (i >> 1)
        c.cx(others[(gray ^ prev).bit_length() - 1], pivot)
        c.p(scale if bin(gray).count("1") % 2 == 0 else -scale, pivot)
        prev = gray
    if others:
        c.cx(others[prev.bit_length() - 1], pivot)
        _phase_poly(c, others, scale)


# zero reflection ---------------------------------------------------------------

def build_zero_reflection(n: int, phi: float = math.pi) -> Circuit:
    """S_0(phi) = exp(i phi |0...0><0...0|) on ``n`` qubits.

    For phi = pi this is X^n . H_t C^{n-1}X H_t . X^n; other angles use a
    multi-controlled phase.  The multi-controlled X stays a single gate so the
    transpiler can borrow a spare qubit for it.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    c = Circuit(n, name=f"S0_{n}")
    for q in range(n):
        c.x(q)
    t = n - 1
    if n == 1:
        c.p(phi, 0)
    elif math.isclose(abs(phi), math.pi, abs_tol=1e-14):
        c.h(t)
        c.mcx(list(range(n - 1)), t)
        c.h(t)
    else:
        c.p(phi, t, tuple(range(n - 1)))
    for q in range(n):
        c.x(q)
    return c


# centred QFT -------------------------------------------------------------------

def build_cqft(n: int) -> Circuit:
    """Centred QFT: |j> -> N^{-1/2} sum_k e^{2 pi i j (k - N/2)/N} |k>.

    Standard QFT followed by X on the most significant qubit, which shifts the
    output index by N/2.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    c = Circuit(n, name=f"cqft{n}")
    for j in reversed(range(n)):
        c.h(j)
        for k in reversed(range(j)):
            c.cp(math.pi / 2 ** (j - k), j, k)
    for i in range(n // 2):
        a, b = i, n - 1 - i
        c.cx(a, b)
        c.cx(b, a)
        c.cx(a, b)
    c.x(n - 1)
    return c


def cqft_matrix(n: int) -> np.ndarray:
    big = 2 ** n
    j = np.arange(big)
    return np.exp(2j * np.pi * np.outer(j - big // 2, j) / big) / math.sqrt(big)


# diagonal phase oracles -----------------------------------------------------------

def multilinear_coeffs(values: np.ndarray) -> np.ndarray:
    """Coefficients a_S with f(b) = sum_S a_S prod_{q in S} b_q (Moebius transform)."""
    a = np.array(values, dtype=float)
    n = int(round(math.log2(a.size)))
    for q in range(n):
        a = a.reshape(-1, 2, 2 ** q)
        a[:, 1, :] -= a[:, 0, :]
        a = a.reshape(-1)
    return a


def build_diagonal_phase(values, t: float, n: int, control=None, tol=1e-12) -> Circuit:
    """exp(-i f(j) t) for a function sampled on all 2^n basis states.

    ``control`` = (qubit, polarity) builds the controlled operator on an
    n+1 qubit register instead.
    """
    coeffs = multilinear_coeffs(np.asarray(values, dtype=float) * -t)
    scale = max(1.0, float(np.abs(coeffs).max()))
    width = n if control is None else max(n, control[0] + 1)
    c = Circuit(width)
    ctl, pol = ((), ()) if control is None else ((control[0],), (control[1],))
    for mask in range(2 ** n):
        ang = coeffs[mask]
        if abs(ang) <= tol * scale:
            continue
        bits = [q for q in range(n) if mask >> q & 1]
        if not bits:
            if control is None:
                c.phase(ang)
            elif pol[0]:
                c.p(ang, ctl[0])
            else:
                c.x(ctl[0])
                c.p(ang, ctl[0])
                c.x(ctl[0])
            continue
        *rest, last = bits
        c.p(ang, last, tuple(rest) + ctl, (1,) * len(rest) + pol)
    return c


def build_poly_phase(coeffs, t: float, grid: GridSpec, control=None) -> Circuit:
    """exp(-i V(x_j) t) on the grid register, V(x) = sum_p coeffs[p] x^p.

    Each monomial expands into products of at most ``degree`` bits, so a
    quadratic potential needs single-qubit and pairwise phase gates only.
    """
    coeffs = list(coeffs)
    values = np.polyval(coeffs[::-1], grid.x) if coeffs else np.zeros(grid.n_points)
    c = build_diagonal_phase(values, t, grid.n_qubits, control)
    c.name = "poly_phase"
    return c


# state preparation ---------------------------------------------------------------

def uniformly_controlled_rotation(c: Circuit, axis: str, angles, controls, target):
    """Multiplexed rotation R(angles[j]) on ``target`` for control value j.

    Gray-code construction with 2^k CNOTs for k controls.
    """
    angles = np.asarray(angles, dtype=float)
    k = len(controls)
    if k == 0 or np.allclose(angles, angles[0], rtol=0, atol=1e-15):
        # no dependence on the controls
        c._add(axis, target, params=(float(angles[0]),))
        return
    size = 2 ** k
    idx = np.arange(size)
    gray = idx ^ (idx >> 1)
    signs = np.array([[(-1) ** bin(j & g).count("1") for j in idx] for g in gray])
    theta = signs @ angles / size
    for i in range(size):
        if abs(theta[i]) > 1e-15:
            c._add(axis, target, params=(float(theta[i]),))
        bit = (int(gray[i]) ^ int(gray[(i + 1) % size])).bit_length() - 1
        c.cx(controls[bit], target)


def build_state_prep(target) -> Circuit:
    """Circuit mapping |0...0> to ``target`` (little-endian amplitudes).

    Top-down tree of multiplexed Ry rotations; real vectors need only those
    (2^n - 2 CNOTs), complex ones get a matching Rz layer.
    """
    a = np.asarray(target, dtype=complex).ravel()
    n = int(round(math.log2(a.size)))
    if a.size != 2 ** n or n < 1:
        raise ValueError("target length must be a power of two")
    if abs(np.linalg.norm(a) - 1) > 1e-9:
        raise ValueError("target state is not normalised")
    c = Circuit(n, name="state_prep")
    k = np.argmax(np.abs(a))
    phase0 = np.angle(a[k])
    b = a * np.exp(-1j * phase0)
    real = np.abs(b.imag).max() < 1e-12
    if real:
        ry = _real_tree(b.real, n)
        rz = [None] * n
    else:
        ry, rz, extra = _complex_tree(b, n)
        phase0 += extra
    for level in range(n):
        tgt = n - 1 - level
        ctl = list(range(n - level, n))
        if np.abs(ry[level]).max() > 1e-15:
            uniformly_controlled_rotation(c, "ry", ry[level], ctl, tgt)
        if rz[level] is not None and np.abs(rz[level]).max() > 1e-15:
            uniformly_controlled_rotation(c, "rz", rz[level], ctl, tgt)
    c.phase(phase0)
    return c


def _real_tree(b, n):
    angles = []
    for level in range(n):
        blocks = b.reshape(2 ** level, 2, -1)
        if level == n - 1:
            lo, hi = blocks[:, 0, 0], blocks[:, 1, 0]
        else:
            lo = np.linalg.norm(blocks[:, 0, :], axis=1)
            hi = np.linalg.norm(blocks[:, 1, :], axis=1)
        angles.append(2 * np.arctan2(hi, lo))
    return angles


def _complex_tree(b, n):
    mags = np.abs(b)
    ry = _real_tree(mags, n)
    rz = [None] * n
    amp = b
    for level in reversed(range(n)):
        pairs = amp.reshape(2 ** level, 2)
        p0, p1 = np.angle(pairs[:, 0]), np.angle(pairs[:, 1])
        # keep phases of vanishing amplitudes from polluting the parent
        p0 = np.where(np.abs(pairs[:, 0]) < 1e-14, p1, p0)
        p1 = np.where(np.abs(pairs[:, 1]) < 1e-14, p0, p1)
        rz[level] = p1 - p0
        amp = np.linalg.norm(pairs, axis=1) * np.exp(0.5j * (p0 + p1))
    return ry, rz, float(np.angle(amp[0]))
