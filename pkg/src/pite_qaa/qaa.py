"""Amplitude amplification around PITE: oracle, amplification operators,
optimal parameters, the multi-step recursion and its cost model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import Circuit
from .library import build_zero_reflection
from .pite import PiteParams, d_circuit, fused_product

PI = math.pi
INV_SQRT2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class QaaSchedule:
    """Repetitions per step and the reflection angles (pi on the executable path)."""

    m: tuple = (1,)
    phis: tuple = (PI, PI)
    branch_n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if any(v < 0 for v in self.m):
            raise ValueError("repetition counts must be non-negative")
        if not all(math.isclose(abs(p), PI, abs_tol=1e-12) for p in self.phis):
            raise ValueError("only phi = +-pi schedules are executable")


@dataclass(frozen=True)
class CostModel:
    c_s0: float
    c_pite: float
    c_ref: float
    m: tuple = ()

    def __post_init__(self):
        if min(self.c_s0, self.c_pite, self.c_ref) < 0:
            raise ValueError("gate counts must be non-negative")


# operators -----------------------------------------------------------------------

def oracle_s_chi(phi: float, n_work: int = 0) -> Circuit:
    """I (x) X Z_phi X: phase e^{i phi} on the ancilla-|0> branch."""
    anc = n_work
    c = Circuit(n_work + 1, name="S_chi")
    if phi:
        c.x(anc)
        c.p(phi, anc)
        c.x(anc)
    return c


def amplification_Q(u: Circuit, phi_pair=(PI, PI)) -> Circuit:
    """Q = -U S_0(phi1) U^dg S_chi(phi2) for an (n+1)-qubit preparation U."""
    phi1, phi2 = phi_pair
    width = u.n_qubits
    c = Circuit(width, name="Q")
    c.block(oracle_s_chi(phi2, width - 1))
    c.block(u, adjoint=True)
    c.block(build_zero_reflection(width, phi1))
    c.block(u)
    c.phase(PI)
    return c


def pite_plus_ref(pite: Circuit, u_ref: Circuit) -> Circuit:
    """U_PITE (U_ref (x) I)."""
    c = Circuit(pite.n_qubits, name="pite_ref")
    c.block(u_ref, range(u_ref.n_qubits))
    c.block(pite)
    return c


def _pre_amp(d: Circuit, u_ref: Circuit, phi1: float, name: str) -> Circuit:
    width = d.n_qubits
    c = Circuit(width, name=name)
    c.block(u_ref, range(u_ref.n_qubits))
    c.block(d)
    c.block(u_ref, range(u_ref.n_qubits), adjoint=True)
    c.block(build_zero_reflection(width, phi1))
    return c


def pre_amplification(rte, p: PiteParams, u_ref: Circuit, phi_pair=(PI, PI)) -> Circuit:
    """Q~ = S_0 (U_ref^dg (x) I) D (U_ref (x) I), so that Q^m U = U Q~^m.

    ``u_ref`` may act on the working register only or already include the
    ancilla (as the references of later steps do).
    """
    phi1, phi2 = phi_pair
    if not math.isclose(abs(phi2), PI, abs_tol=1e-12):
        raise ValueError("the fused D operator needs an oracle angle of +-pi")
    return _pre_amp(d_circuit(rte, p.theta_eff, p.t), u_ref, phi1, "Q_tilde")


# amplitude law and optimal parameters ---------------------------------------------

def grover_amplitude(a: float, m: int) -> float:
    if not 0 <= a <= 1 + 1e-12:
        raise ValueError("amplitude must lie in [0, 1]")
    return math.sin((2 * m + 1) * math.asin(min(a, 1.0)))


def optimal_m(a: float, branch_n: int = 0) -> int:
    if not 0 < a <= 1 + 1e-12:
        raise ValueError("amplitude must lie in (0, 1]")
    x = (2 * branch_n + 1) * PI / (4 * math.asin(min(a, 1.0)))
    # floor with a little slack so exact integers are not lost to rounding
    return int(math.floor(x + 1e-9))


def optimal_gamma(alpha: float, m_star: int, branch_n: int = 0) -> float:
    """gamma* = sin((2n+1) pi / (4 m* + 2)) / alpha; must be admissible."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = math.sin((2 * branch_n + 1) * PI / (4 * m_star + 2)) / alpha
    if not admissible_gamma(g):
        raise ValueError(f"gamma* = {g:.6g} is not admissible for m*={m_star}, n={branch_n}")
    return g


def admissible_gamma(g: float, tol: float = 1e-6) -> bool:
    return 0 < g < 1 and abs(g - INV_SQRT2) > tol


def choose_schedule(alpha: float, m_min: int = 1, m_max: int = 10_000):
    """Smallest m* >= m_min (then smallest branch n) with an admissible gamma*.

    Returns ``(m_star, branch_n, gamma)``.
    """
    for m in range(m_min, m_max + 1):
        for n in range(m + 1):
            g = math.sin((2 * n + 1) * PI / (4 * m + 2)) / alpha
            if admissible_gamma(g):
                return m, n, g
    raise ValueError("no admissible gamma* found")


def worst_case_m_harmonic(n: int, dtau_omega: float, gamma: float = 1.0, branch_n: int = 0) -> float:
    """Continuous m* for a uniform start on the spectrum (k + 1/2) omega,
    valid when the success amplitude is small."""
    if n < 1:
        raise ValueError("need at least one qubit")
    alpha = math.sqrt(harmonic_alpha_squared(n, dtau_omega))
    return (2 * branch_n + 1) * PI / (4 * gamma * alpha) - 0.5


def harmonic_alpha_squared(n: int, dtau_omega: float) -> float:
    """alpha^2 = (1/N) sum_k exp(-2 x (k + 1/2)) summed in closed form."""
    if dtau_omega <= 0:
        raise ValueError("dtau * omega must be positive")
    big = 2 ** n
    x = dtau_omega
    return -math.expm1(-2 * x * big) / (2 * big * math.sinh(x))


# multi-step recursion --------------------------------------------------------------

@dataclass
class MultiStep:
    """Circuits of the deterministic multi-step construction.

    ``reference[k]`` prepares the separable state after k steps (index 0 is
    U_ref (x) I); ``q_tilde[k]`` is the pre-amplification operator of step
    k+1 and ``pite_ref[k]`` the PITE-plus-reference unitary of that step.
    """

    reference: list = field(default_factory=list)
    q_tilde: list = field(default_factory=list)
    pite_ref: list = field(default_factory=list)


class MultiStepBuilder:
    """Incremental form of the recursion, one step at a time.

    ``chain()`` is B_k (U_ref (x) I) for the next step k; ``candidate(p)``
    returns the fused PITE product and its D operator with ``p`` appended, so
    a caller can tune p on the fixed chain before ``push`` commits it.
    """

    def __init__(self, rte, u_ref0: Circuit, phi1: float = PI):
        self.rte = rte
        self.u_ref0 = u_ref0
        self.phi1 = phi1
        self.width = rte.n_qubits + 1
        base = Circuit(self.width, name="U_ref")
        base.block(u_ref0, range(u_ref0.n_qubits))
        self.result = MultiStep(reference=[base])
        self.steps: list = []
        self.ms: list = []
        # operator B_k = Q~_1^{m_1} ... Q~_{k-1}^{m_{k-1}}, applied right to left
        self._bracket = Circuit(self.width, name="B1")
        self._chain = None

    def chain(self) -> Circuit:
        if self._chain is None:
            k = len(self.steps) + 1
            c = Circuit(self.width, name=f"chain{k}")
            c.block(self._bracket)
            c.block(self.u_ref0, range(self.u_ref0.n_qubits))
            self._chain = c
        return self._chain

    def candidate(self, p: PiteParams):
        return fused_product(self.rte, self.steps + [p])

    def push(self, p: PiteParams, m: int) -> Circuit:
        """Commit step ``p`` with ``m`` repetitions; returns the new reference."""
        if m < 0:
            raise ValueError("repetition count must be non-negative")
        k = len(self.steps) + 1
        prod, dtil = self.candidate(p)
        chain = self.chain()
        qt = _pre_amp(dtil, chain, self.phi1, f"Q_tilde{k}")
        pr = Circuit(self.width, name=f"pite_ref{k}")
        pr.block(chain)
        pr.block(prod)
        nxt = Circuit(self.width, name=f"B{k + 1}")
        for _ in range(m):
            nxt.block(qt)
        nxt.block(self._bracket)
        ref = Circuit(self.width, name=f"U_ref{k + 1}")
        ref.block(nxt)
        ref.block(self.u_ref0, range(self.u_ref0.n_qubits))
        ref.block(prod)
        self.result.q_tilde.append(qt)
        self.result.pite_ref.append(pr)
        self.result.reference.append(ref)
        self.steps.append(p)
        self.ms.append(m)
        self._bracket = nxt
        self._chain = None
        return ref


def multi_step_reference(rte, steps, schedule: QaaSchedule, u_ref0: Circuit) -> MultiStep:
    """Build U_ref^[k] for k = 1..N+1 via U_ref^[N+1] = U_PITE+ref^[N] Q~_N^{m_N}.

    Products of PITE steps are collapsed with ``fused_product``; every
    recurring operator is a sub-circuit reference so costs compose without
    expanding the exponential gate list.
    """
    steps = list(steps)
    if len(schedule.m) < len(steps):
        raise ValueError("schedule has fewer repetition counts than steps")
    b = MultiStepBuilder(rte, u_ref0, schedule.phis[0])
    for p, m in zip(steps, schedule.m):
        b.push(p, m)
    return b.result


def cost_model(cm: CostModel, n_steps: int) -> dict:
    """Closed-form gate counts of the recursion for ``n_steps`` steps."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    m = list(cm.m) + [1] * max(0, n_steps - len(cm.m))
    base = cm.c_s0 + cm.c_pite + 2 * cm.c_ref
    growth = [1.0]
    for k in range(n_steps):
        growth.append(growth[-1] * (1 + 2 * m[k]))
    c_qt = base * growth[n_steps - 1]
    c_u = cm.c_pite + cm.c_ref + base * sum(m[k] * growth[k] for k in range(n_steps - 1))
    cumulative = cm.c_pite + cm.c_ref + base * sum(m[k] * growth[k] for k in range(n_steps))
    return {
        "c_Q": 2 * (cm.c_pite + cm.c_ref) + cm.c_s0,
        "c_Qtilde_1": base,
        "c_Qtilde": c_qt,
        "c_U_pite_ref": c_u,
        "c_reference_next": cumulative,
        "multiplier": growth[n_steps - 1],
    }
