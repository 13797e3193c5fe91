"""Step-size determination, the self-consistent {dtau, gamma} loop and the
failure-leakage analysis of an imperfectly amplified step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .hamiltonians import HamiltonianOracle
from .pite import (INV_SQRT2, PiteParams, alpha_squared, approx_pite_circuit,
                   circuit_success_probability, exact_pite_unitary)
from .qaa import admissible_gamma
from .statevector import QuantumState

PI4 = math.pi / 4


@dataclass(frozen=True)
class CalibrationResult:
    params: PiteParams
    alpha: float
    m_star: int
    branch_n: int
    iterations: int
    converged: bool
    history: tuple = ()

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def dtau(self) -> float:
        return self.params.dtau


def determine_dtau(s: float, lambda_max: float, angle_cap: float = PI4) -> float:
    """Largest dtau with s * dtau * lambda_max <= angle_cap."""
    if s <= 0 or lambda_max <= 0 or angle_cap <= 0:
        raise ValueError("s, lambda_max and angle_cap must be positive")
    dtau = angle_cap / (s * lambda_max)
    # guard the inequality against the last-bit rounding of the division
    while s * dtau * lambda_max > angle_cap:
        dtau = math.nextafter(dtau, 0.0)
    return dtau


def lambda_max_estimate(h: HamiltonianOracle, e0: float = 0.0, factor: float = 1.2) -> float:
    """Safety-scaled bound on |lambda + e0| from the exact spectrum."""
    return factor * float(np.abs(h.eigenvalues + e0).max())


def s_of(gamma: float) -> float:
    return gamma / math.sqrt(1 - gamma * gamma)


# success-amplitude models ----------------------------------------------------------
# Each model maps (gamma, dtau) to the pre-amplification success amplitude a.
# "exact" is gamma * alpha for the ideal operator; "circuit" simulates the
# approximate PITE circuit so that the amplified probability is exactly one
# for the circuit that is actually run.

class ExactAlpha:
    def __init__(self, h: HamiltonianOracle, psi, e0: float = 0.0):
        self.h, self.psi, self.e0 = h, psi, e0

    def alpha(self, dtau: float) -> float:
        return math.sqrt(alpha_squared(self.psi, self.h, dtau, self.e0))

    def solve(self, target: float, dtau: float) -> float:
        return target / self.alpha(dtau)


class CircuitAlpha:
    def __init__(self, rte, psi: QuantumState, e0: float = 0.0, grid_points: int = 200):
        self.rte, self.psi, self.e0 = rte, psi, e0
        self.grid = np.linspace(1e-4, 1 - 1e-4, grid_points)

    def amplitude(self, gamma: float, dtau: float) -> float:
        c = approx_pite_circuit(self.rte, PiteParams(gamma, dtau, self.e0))
        return math.sqrt(circuit_success_probability(self.psi, c))

    def alpha(self, dtau: float, gamma: float) -> float:
        return self.amplitude(gamma, dtau) / gamma

    def solve(self, target: float, dtau: float) -> float:
        return solve_gamma(lambda g: self.amplitude(g, dtau), target, self.grid)


def solve_gamma(amplitude, target: float, grid=None) -> float:
    """Smallest admissible gamma with ``amplitude(gamma) == target``.

    The amplitude of an approximate circuit need not be monotone in gamma,
    so roots are bracketed on a grid and refined with Brent's method.
    """
    grid = np.linspace(1e-4, 1 - 1e-4, 64) if grid is None else grid

    def f(g):
        if abs(g - INV_SQRT2) < 1e-9:
            g = INV_SQRT2 - 1e-9
        return amplitude(g) - target

    vals = [f(g) for g in grid]
    for lo, hi, flo, fhi in zip(grid, grid[1:], vals, vals[1:]):
        if flo * fhi < 0 or flo == 0:
            g = float(lo) if flo == 0 else brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
            if admissible_gamma(g):
                return g
    raise ValueError("no admissible gamma reaches the target amplitude")


def calibrate(h: HamiltonianOracle, psi, m_target: int = 1, branch_n: int = 0,
              max_iter: int = 50, *, e0: float = 0.0, dtau: float | None = None,
              lambda_max: float | None = None, angle_cap: float = PI4,
              ceiling: float | None = None, model: str = "exact", rte=None,
              tol: float = 1e-6, damping: float = 0.5, m_limit: int = 64) -> CalibrationResult:
    """Self-consistent {dtau, gamma*} so that ``m_target`` repetitions give p = 1.

    With ``dtau`` given the step is held fixed and only gamma* is solved.
    When no admissible gamma* exists the repetition count is raised.
    Oscillating iterates are damped; non-convergence is flagged, not raised.
    """
    if isinstance(psi, QuantumState):
        vec = psi
    else:
        from .statevector import from_vector
        vec = from_vector(psi)
    if model == "exact":
        amp = ExactAlpha(h, vec.amplitudes, e0)
    elif model == "circuit":
        if rte is None:
            raise ValueError("the circuit model needs a real-time evolution builder")
        amp = CircuitAlpha(rte, vec, e0)
    else:
        raise ValueError(f"unknown alpha model {model!r}")
    lam = lambda_max if lambda_max is not None else lambda_max_estimate(h, e0)
    m = m_target
    while m <= m_limit:
        target = math.sin((2 * branch_n + 1) * math.pi / (4 * m + 2))
        try:
            return _loop(amp, target, m, branch_n, dtau, lam, angle_cap, ceiling,
                         max_iter, tol, damping, e0)
        except ValueError:
            m += 1
    raise ValueError("calibration found no admissible gamma*")


def _next_dtau(gamma, lam, cap, ceiling):
    d = determine_dtau(s_of(gamma), lam, cap)
    return d if ceiling is None else min(d, ceiling)


def _loop(amp, target, m, n, dtau, lam, cap, ceiling, max_iter, tol, damping, e0):
    fixed = dtau is not None
    if fixed:
        g = amp.solve(target, dtau)
        if not admissible_gamma(g):
            raise ValueError("inadmissible gamma")
        return _result(amp, g, dtau, e0, m, n, 1, True, (dtau,))
    d = _next_dtau(min(target, 0.999), lam, cap, ceiling)
    hist = [d]
    prev_step = 0.0
    for it in range(1, max_iter + 1):
        g = amp.solve(target, d)
        if not admissible_gamma(g):
            raise ValueError("inadmissible gamma")
        new = _next_dtau(g, lam, cap, ceiling)
        step = new - d
        if abs(step) < tol:
            # re-solve so gamma* is exact for the reported dtau
            g = amp.solve(target, new)
            if not admissible_gamma(g):
                raise ValueError("inadmissible gamma")
            return _result(amp, g, new, e0, m, n, it, True, tuple(hist + [new]))
        if prev_step * step < 0:
            new = d + damping * step
        prev_step = step
        d = new
        hist.append(d)
    g = amp.solve(target, d)
    return _result(amp, g, d, e0, m, n, max_iter, False, tuple(hist))


def _result(amp, g, dtau, e0, m, n, it, ok, hist):
    p = PiteParams(g, dtau, e0)
    alpha = amp.alpha(dtau) if isinstance(amp, ExactAlpha) else amp.alpha(dtau, g)
    return CalibrationResult(p, alpha, m, n, it, ok, hist)


# failure leakage -------------------------------------------------------------------

@dataclass(frozen=True)
class LeakageReport:
    epsilon: float
    success_state: np.ndarray
    probability: float
    overlap_ideal: float
    overlap_backward: float


def failure_leakage_analysis(h: HamiltonianOracle, p2: PiteParams, p1: PiteParams,
                             epsilon: float, psi=None) -> LeakageReport:
    """Second PITE step acting on an imperfectly amplified first step.

    The input is sqrt((1-eps)/a) M|psi>|0> + sqrt(eps/(1-a)) sqrt(1-M^2)|psi>|1>
    with a = <psi|M^2|psi>.  The success branch after the step-2 unitary is
    compared with the ideal M'M|psi> and with the leaked sqrt(1-M'^2)sqrt(1-M^2)|psi>.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    dim = h.dim
    vec = np.full(dim, dim ** -0.5, dtype=complex) if psi is None else np.asarray(
        psi.amplitudes if isinstance(psi, QuantumState) else psi, dtype=complex)
    m1 = h.function(lambda lam: p1.gamma * np.exp(-(lam + p1.e0_shift) * p1.dtau))
    m2 = h.function(lambda lam: p2.gamma * np.exp(-(lam + p2.e0_shift) * p2.dtau))
    c1 = _sqrt_complement(h, p1)
    c2 = _sqrt_complement(h, p2)
    good = m1 @ vec
    bad = c1 @ vec
    a = float(np.vdot(good, good).real)
    parts = [np.sqrt((1 - epsilon) / a) * good if epsilon < 1 else 0 * good,
             np.sqrt(epsilon / (1 - a)) * bad if epsilon > 0 else 0 * bad]
    state = np.concatenate(parts)
    u2 = exact_pite_unitary(h, p2)
    branch = (u2 @ state)[:dim]
    prob = float(np.vdot(branch, branch).real)
    norm = branch / math.sqrt(prob) if prob > 0 else branch
    ideal = m2 @ m1 @ vec
    back = c2 @ c1 @ vec
    return LeakageReport(epsilon, norm, prob, _overlap(norm, ideal), _overlap(norm, back))


def _sqrt_complement(h, p):
    return h.function(lambda lam: np.sqrt(np.clip(
        1 - (p.gamma * np.exp(-(lam + p.e0_shift) * p.dtau)) ** 2, 0, None)))


def _overlap(a, b):
    nb = np.linalg.norm(b)
    na = np.linalg.norm(a)
    if nb == 0 or na == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb) ** 2)


def backward_ite_error(h: HamiltonianOracle, p: PiteParams) -> float:
    """|| sqrt(1 - M^2) - sqrt(1 - gamma^2) exp(+H s^2 dtau) || (spectral norm)."""
    g, s = p.gamma, p.s
    exact = _sqrt_complement(h, p)
    first = h.function(lambda lam: math.sqrt(1 - g * g) * np.exp((lam + p.e0_shift) * s * s * p.dtau))
    return float(np.linalg.norm(exact - first, 2))
