"""Acceptance criteria 1-10.  Each test records a PASS/FAIL line that is
printed in the terminal summary (and directly when run as a script)."""

import math
import warnings

import numpy as np
import pytest

from pite_qaa.calibration import (backward_ite_error, calibrate, determine_dtau,
                                  failure_leakage_analysis)
from pite_qaa.grid import GridSpec
from pite_qaa.hamiltonians import (HamiltonianOracle, harmonic_hamiltonian, maxcut_hamiltonian,
                                   example_graph)
from pite_qaa.library import build_state_prep, build_zero_reflection
from pite_qaa.pite import (IsingRte, PiteParams, approx_block, approx_pite_circuit, exact_block,
                           exact_pite_unitary)
from pite_qaa.qaa import (amplification_Q, grover_amplitude, harmonic_alpha_squared, optimal_m,
                          pite_plus_ref, pre_amplification, worst_case_m_harmonic)
from pite_qaa.runner import ExperimentConfig, run
from pite_qaa.statevector import apply_circuit, branch_probability, zero_state
from pite_qaa.transpile import metrics

import conftest
from conftest import random_circuit, random_hermitian, random_state

HARMONIC_SERIES = (2678, 6968, 19838, 58448, 174278, 521768)


def report(k: int, checks: dict):
    """Record one line per criterion and fail on any unmet sub-check."""
    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{name} {'ok' if v[0] else 'FAILED'} ({v[1]})" for name, v in checks.items())
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    conftest.ACCEPTANCE[k] = line
    print(line)
    bad = [name for name, v in checks.items() if not v[0]]
    assert not bad, f"criterion {k} failed: {', '.join(bad)}"


def test_criterion_01_block_encoding():
    rng = np.random.default_rng(101)
    worst_block = worst_unitary = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 5))
        h = HamiltonianOracle(random_hermitian(rng, 2 ** n))
        p = PiteParams(float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.01, 1.0)), -h.lambda_min)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            u = exact_pite_unitary(h, p)
        dim = h.dim
        target = p.gamma * h.function(lambda lam: np.exp(-(lam - h.lambda_min) * p.dtau))
        worst_block = max(worst_block, np.abs(u[:dim, :dim] - target).max())
        worst_unitary = max(worst_unitary, np.linalg.norm(u.conj().T @ u - np.eye(2 * dim), 2))
    report(1, {"block": (worst_block <= 1e-10, f"max err {worst_block:.2e}"),
               "unitary": (worst_unitary <= 1e-10, f"{worst_unitary:.2e}")})


def test_criterion_02_first_order_convergence():
    rng = np.random.default_rng(202)
    ratios = []
    for _ in range(5):
        h = HamiltonianOracle(random_hermitian(rng, 2 ** int(rng.integers(1, 4))))
        g = float(rng.choice([rng.uniform(0.2, 0.6), rng.uniform(0.8, 0.95)]))
        errs = [np.linalg.norm(approx_block(h, PiteParams(g, d)) - exact_block(h, PiteParams(g, d)), 2)
                for d in (0.02, 0.01)]
        ratios.append(errs[0] / errs[1])
    report(2, {"ratio": (all(3.5 <= r <= 4.5 for r in ratios),
                         ", ".join(f"{r:.3f}" for r in ratios))})


def test_criterion_03_grover_law():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        u = random_circuit(rng, n)
        state = apply_circuit(zero_state(n, ancilla=True), u)
        a = math.sqrt(branch_probability(state, 0))
        q = amplification_Q(u)
        for m in range(9):
            amp = math.sqrt(branch_probability(state, 0))
            worst = max(worst, abs(amp - abs(grover_amplitude(a, m))))
            state = apply_circuit(state, q)
    report(3, {"amplitude": (worst <= 1e-9, f"max err {worst:.2e}")})


def test_criterion_04_pre_amplification():
    rng = np.random.default_rng(404)
    g = example_graph()
    rte = IsingRte(g)
    p = PiteParams(0.35, 0.63, 2.0)
    ref = build_state_prep(random_state(rng, 16))
    pite = approx_pite_circuit(rte, p)
    u = pite_plus_ref(pite, ref)
    q, qt = amplification_Q(u), pre_amplification(rte, p, ref)
    qd, qtd, ud = q.unitary(), qt.unitary(), u.unitary()
    dense = sv = 0.0
    for m in range(4):
        lhs = np.linalg.matrix_power(qd, m) @ ud
        rhs = ud @ np.linalg.matrix_power(qtd, m)
        dense = max(dense, np.abs(lhs - rhs).max())
        a = zero_state(5, ancilla=True)
        b = zero_state(5, ancilla=True)
        a = apply_circuit(a, u)
        for _ in range(m):
            a = apply_circuit(a, q)
            b = apply_circuit(b, qt)
        b = apply_circuit(b, u)
        sv = max(sv, np.abs(a.amplitudes - b.amplitudes).max())
    c_q, c_qt, c_p = (metrics(c).cnot_count for c in (q, qt, pite))
    gap = abs((c_q - c_qt) - c_p) / c_p
    report(4, {"dense": (dense <= 1e-10, f"{dense:.2e}"),
               "statevector": (sv <= 1e-10, f"{sv:.2e}"),
               "cost gap": (gap <= 0.10, f"c_Q-c_Qt={c_q - c_qt}, c_PITE={c_p}")})


def test_criterion_05_deterministic_maxcut():
    h = maxcut_hamiltonian(example_graph())
    res = run(ExperimentConfig(kind="maxcut", mode="pite-qaa"))
    recs = res.records[1:]
    target = np.zeros(16)
    target[0b0101] = target[0b1010] = 1 / math.sqrt(2)
    fid = abs(np.vdot(target, res.state)) ** 2
    gamma = recs[0].gamma
    report(5, {
        "lambda_min": (h.lambda_min == -4.0, f"{h.lambda_min}"),
        "gamma*": (abs(gamma - 0.46) <= 0.02, f"{gamma:.4f} at dtau={recs[0].tau:.2f}, reference 0.46"),
        "m*": (all(r.m == 1 for r in recs), "m=1 every step"),
        "p_k": (all(abs(r.p_k - 1) <= 1e-6 for r in recs),
                f"min {min(r.p_k for r in recs):.12f}"),
        "purity": (all(r.purity >= 1 - 1e-6 for r in recs),
                   f"min {min(r.purity for r in recs):.12f}"),
        "fidelity": (fid >= 0.99, f"{fid:.4f} after {len(recs)} steps"),
    })


def test_criterion_06_pite_baselines():
    runs = {g: run(ExperimentConfig(kind="maxcut", mode="pite", gamma=g, dtau=d)).records[1:]
            for g, d in ((0.4, 0.75), (0.8, 0.25))}
    checks = {}
    for g, recs in runs.items():
        p = [r.p_k for r in recs]
        big = [r.P_k for r in recs]
        checks[f"gamma={g} p_k up"] = (all(b >= a - 1e-12 for a, b in zip(p, p[1:])),
                                       f"{p[0]:.4f} -> {p[-1]:.4f}")
        checks[f"gamma={g} P_k down"] = (all(b < a for a, b in zip(big, big[1:])),
                                         f"final {big[-1]:.3e}")
        checks[f"gamma={g} fidelity"] = (recs[-1].fidelity >= 0.99, f"{recs[-1].fidelity:.4f}")
    lo, hi = runs[0.4], runs[0.8]
    checks["larger gamma larger p_k"] = (all(b.p_k > a.p_k for a, b in zip(lo, hi)),
                                         f"{len(lo)} steps")
    report(6, checks)


def test_criterion_07_cost_anchors():
    res = run(ExperimentConfig(kind="maxcut", mode="pite", steps=1))
    note = res.notes["pite_circuit"]
    cnot, depth = note["cnot"], note["depth"]
    s0 = {n: metrics(build_zero_reflection(n)).cnot_count for n in range(11, 21)}
    justified = bool(note.get("justification"))
    report(7, {
        "pite cnot": (cnot == 26 or (abs(cnot - 26) <= 0.15 * 26 and justified), f"{cnot} vs 26"),
        "pite depth": (depth == 24 or (abs(depth - 24) <= 0.15 * 24 and justified), f"{depth} vs 24"),
        "S0 law": (all(c == 16 * (n - 3) for n, c in s0.items()),
                   ", ".join(f"{n}:{c}" for n, c in s0.items())),
    })


def test_criterion_08_harmonic():
    h = harmonic_hamiltonian(GridSpec(6, 14.0, 1.0, 1.0))
    qaa = run(ExperimentConfig(kind="harmonic", mode="pite-qaa")).records[1:]
    multi = run(ExperimentConfig(kind="harmonic", mode="multistep")).records[1:]
    cnots = [r.cnot for r in multi]
    rel = [abs(c - ref) / ref for c, ref in zip(cnots, HARMONIC_SERIES)]
    report(8, {
        "ground energy": (abs(h.lambda_min - 0.5) <= 1e-2, f"{h.lambda_min:.6f}"),
        "fidelity": (max(r.fidelity for r in qaa) >= 0.99, f"{max(r.fidelity for r in qaa):.4f}"),
        "p_k": (all(abs(r.p_k - 1) <= 1e-4 for r in qaa), f"min {min(r.p_k for r in qaa):.10f}"),
        "multistep cnot": (len(cnots) == 6 and max(rel) <= 0.20,
                           f"{cnots}, worst {max(rel):.0%} off"),
    })


def test_criterion_09_worst_case_scaling():
    diffs = {}
    for n in range(4, 9):
        alpha = math.sqrt(harmonic_alpha_squared(n, 0.2))
        diffs[n] = worst_case_m_harmonic(n, 0.2) - optimal_m(alpha)
    ratio = worst_case_m_harmonic(16, 0.2) / worst_case_m_harmonic(15, 0.2)
    report(9, {
        "vs optimal_m": (all(abs(d) <= 1 for d in diffs.values()),
                         ", ".join(f"n={n}:{d:+.3f}" for n, d in diffs.items())),
        "sqrt N growth": (abs(ratio - math.sqrt(2)) <= 0.1, f"{ratio:.4f}"),
    })


def test_criterion_10_appendix_properties():
    h = maxcut_hamiltonian(example_graph())
    p1, p2 = PiteParams(0.6, 0.2, 4.0), PiteParams(0.7, 0.15, 4.0)
    clean = failure_leakage_analysis(h, p2, p1, 0.0)
    psi = np.full(16, 0.25)
    ideal = exact_block(h, p2) @ exact_block(h, p1) @ psi
    ideal /= np.linalg.norm(ideal)
    leak_err = np.abs(clean.success_state - ideal).max()
    errs = [backward_ite_error(h, PiteParams(0.6, d, 4.0)) for d in (0.05, 0.025)]
    ratio = errs[0] / errs[1]
    rng = np.random.default_rng(1010)
    bound_ok = True
    for s, lam in rng.uniform(1e-3, 50, (2000, 2)):
        bound_ok &= s * determine_dtau(s, lam) * lam <= math.pi / 4
    cal = calibrate(h, psi, e0=-h.lambda_min)
    last_step = abs(cal.history[-1] - cal.history[-2])
    report(10, {
        "leakage eps=0": (leak_err <= 1e-10, f"{leak_err:.2e}"),
        "backward ratio": (3.5 <= ratio <= 4.5, f"{ratio:.3f}"),
        "dtau bound": (bool(bound_ok), "2000 random draws"),
        "calibration": (cal.converged and cal.iterations <= 50 and last_step < 1e-6,
                        f"{cal.iterations} iterations, gamma={cal.gamma:.4f}, dtau={cal.dtau:.5f}"),
    })


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
