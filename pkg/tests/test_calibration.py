import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pite_qaa.calibration import (backward_ite_error, calibrate, determine_dtau,
                                  failure_leakage_analysis, lambda_max_estimate, s_of,
                                  solve_gamma)
from pite_qaa.hamiltonians import HamiltonianOracle
from pite_qaa.pite import IsingRte, PiteParams, approx_pite_circuit, circuit_success_probability
from pite_qaa.statevector import from_vector


def test_determine_dtau_examples():
    assert determine_dtau(1.0, math.pi) == pytest.approx(0.25, abs=1e-15)
    assert determine_dtau(4 / 3, 4.8) == pytest.approx(0.122718463, abs=1e-9)


def test_determine_dtau_linear_in_cap():
    a = determine_dtau(0.7, 3.0, 0.2)
    b = determine_dtau(0.7, 3.0, 0.4)
    assert b == pytest.approx(2 * a, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(1e-3, 1e3), lam=st.floats(1e-3, 1e3), cap=st.floats(1e-3, 3.0))
def test_determine_dtau_respects_cap(s, lam, cap):
    d = determine_dtau(s, lam, cap)
    assert s * d * lam <= cap
    assert d == pytest.approx(cap / (s * lam), rel=1e-12)


def test_determine_dtau_validation():
    for args in ((0, 1), (1, 0), (1, 1, -1)):
        with pytest.raises(ValueError):
            determine_dtau(*args)


def test_calibrate_trivial_hamiltonian():
    h = HamiltonianOracle(np.zeros((4, 4)))
    res = calibrate(h, np.ones(4), lambda_max=1.0)
    assert res.converged and res.iterations == 1
    assert res.gamma == pytest.approx(0.5, abs=1e-12)
    assert res.alpha == pytest.approx(1.0)
    assert res.dtau == pytest.approx(determine_dtau(s_of(0.5), 1.0))


def test_calibrate_eigenstate_fixed_point():
    h = HamiltonianOracle(np.diag([0.3, 1.1, 2.0, 2.5]))
    psi = np.array([0, 1, 0, 0], dtype=complex)
    res = calibrate(h, psi)
    assert res.converged
    # gamma * exp(-lambda dtau) hits the m = 1 target and dtau matches the bound
    assert res.gamma * math.exp(-1.1 * res.dtau) == pytest.approx(0.5, abs=1e-9)
    assert res.dtau == pytest.approx(
        determine_dtau(s_of(res.gamma), lambda_max_estimate(h)), abs=1e-6)


def test_calibrate_maxcut_exact_model(maxcut):
    res = calibrate(maxcut, np.ones(16), e0=-maxcut.lambda_min)
    assert res.converged and res.iterations <= 50
    assert res.m_star == 1
    assert res.gamma * res.alpha == pytest.approx(0.5, abs=1e-9)
    assert 0 < res.gamma < 1


def test_calibrate_raises_m_when_gamma_inadmissible():
    # alpha = exp(-2 dtau) < 0.5 at dtau = 0.5, so m = 1 needs gamma > 1
    h = HamiltonianOracle(np.diag([2.0, 2.0]))
    res = calibrate(h, np.ones(2), dtau=0.5)
    assert res.m_star > 1
    assert res.gamma * res.alpha == pytest.approx(math.sin(math.pi / (4 * res.m_star + 2)))


def test_calibrate_circuit_model(graph, maxcut):
    rte = IsingRte(graph)
    psi = from_vector(np.ones(16))
    res = calibrate(maxcut, psi, dtau=0.63, e0=maxcut.center, model="circuit", rte=rte)
    c = approx_pite_circuit(rte, res.params)
    assert circuit_success_probability(psi, c) == pytest.approx(0.25, abs=1e-12)


def test_calibrate_rejects_unknown_model(maxcut):
    with pytest.raises(ValueError):
        calibrate(maxcut, np.ones(16), model="magic")
    with pytest.raises(ValueError):
        calibrate(maxcut, np.ones(16), model="circuit")


def test_solve_gamma_smallest_root():
    g = solve_gamma(lambda x: math.sin(3 * x), 0.5)
    assert g == pytest.approx(math.pi / 18, abs=1e-12)
    with pytest.raises(ValueError):
        solve_gamma(lambda x: 0.1 * x, 0.5)


def test_leakage_limits(maxcut):
    p1 = PiteParams(0.6, 0.2, 4.0)
    p2 = PiteParams(0.6, 0.2, 4.0)
    clean = failure_leakage_analysis(maxcut, p2, p1, 0.0)
    assert clean.overlap_ideal == pytest.approx(1.0, abs=1e-10)
    leaked = failure_leakage_analysis(maxcut, p2, p1, 1.0)
    assert leaked.overlap_backward == pytest.approx(1.0, abs=1e-10)
    mid = failure_leakage_analysis(maxcut, p2, p1, 0.3)
    assert mid.overlap_ideal < 1 - 1e-6
    with pytest.raises(ValueError):
        failure_leakage_analysis(maxcut, p2, p1, 1.5)


def test_backward_error_second_order(maxcut):
    errs = [backward_ite_error(maxcut, PiteParams(0.6, d, 4.0)) for d in (0.05, 0.025)]
    assert 3.0 < errs[0] / errs[1] < 5.0
