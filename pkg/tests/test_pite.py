import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pite_qaa.grid import GridSpec
from pite_qaa.hamiltonians import HamiltonianOracle, WeightedGraph
from pite_qaa.pite import (GridRte, IsingRte, PiteParams, StraddleWarning, alpha_squared,
                           approx_block, approx_pite_circuit, circuit_success_probability,
                           d_circuit, d_two_circuit, derive_params, exact_block,
                           exact_pite_unitary, fused_product, pite_kernel, success_probability,
                           two_step_circuit, two_step_raw)
from pite_qaa.statevector import apply_circuit, from_vector, postselect_ancilla
from pite_qaa.transpile import metrics, transpile_to_basis

from conftest import oracle, random_state

XZX = lambda n: np.kron(np.diag([-1, 1]), np.eye(2 ** n))


def test_params_closed_forms():
    assert derive_params(0.8, 0.1).s == pytest.approx(4 / 3, abs=1e-15)
    assert derive_params(0.4, 0.1).s == pytest.approx(0.436435780471985, abs=1e-12)
    assert derive_params(0.8, 0.1).kappa == 1
    assert derive_params(0.4, 0.1).kappa == -1


@pytest.mark.parametrize("g", [1 / math.sqrt(2), 0.0, 1.0, -0.2])
def test_params_rejects(g):
    with pytest.raises(ValueError):
        derive_params(g, 0.1)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.01, 0.99).filter(lambda x: abs(x - 1 / math.sqrt(2)) > 1e-6),
       d=st.floats(0.01, 2))
def test_params_recompute(g, d):
    p = derive_params(g, d)
    c = math.sqrt(1 - g * g)
    assert p.s == pytest.approx(g / c, rel=1e-12)
    assert p.theta == pytest.approx(p.kappa * math.acos((g + c) / math.sqrt(2)), abs=1e-12)
    assert p.s > 0 and p.kappa in (-1, 1)


def test_exact_unitary_zero_hamiltonian():
    h = HamiltonianOracle(np.zeros((4, 4)))
    u = exact_pite_unitary(h, derive_params(0.6, 0.3))
    assert np.allclose(u[:4, :4], 0.6 * np.eye(4))


def test_exact_unitary_diag_example():
    h = HamiltonianOracle(np.diag([0.0, 1.0]))
    u = exact_pite_unitary(h, derive_params(0.5, 0.1))
    assert np.allclose(u[:2, :2], np.diag([0.5, 0.452418709017980]), atol=1e-12)


def test_exact_unitary_maxcut(maxcut):
    p = derive_params(0.46, 0.63, 4.0)
    u = exact_pite_unitary(maxcut, p)
    assert np.abs(u.conj().T @ u - np.eye(32)).max() < 1e-10
    assert np.abs(u[:16, :16] - exact_block(maxcut, p)).max() < 1e-10


def test_exact_unitary_norm_guard(maxcut):
    with pytest.raises(ValueError):
        exact_pite_unitary(maxcut, derive_params(0.46, 0.63, 0.0))


def test_straddle_warning():
    h = HamiltonianOracle(np.diag([0.0, 2.0]))
    with pytest.warns(StraddleWarning):
        exact_pite_unitary(h, derive_params(0.9, 0.5))


def test_success_probability_matches_simulation(rng, maxcut):
    p = derive_params(0.7, 0.3, 4.0)
    psi = random_state(rng, 16)
    u = exact_pite_unitary(maxcut, p)
    out = u @ np.concatenate([psi, np.zeros(16)])
    assert np.sum(abs(out[:16]) ** 2) == pytest.approx(success_probability(psi, maxcut, p), abs=1e-10)


def test_success_probability_eigenstate(maxcut):
    p = derive_params(0.5, 0.2, 4.0)
    psi = np.eye(16)[5]
    lam = maxcut.matrix[5, 5].real + 4
    assert success_probability(psi, maxcut, p) == pytest.approx(0.25 * math.exp(-2 * lam * 0.2))


def test_fused_and_split_forms_equal(ising):
    p = derive_params(0.3, 0.4, 2.0)
    a = approx_pite_circuit(ising, p).unitary()
    b = approx_pite_circuit(ising, p, "split").unitary()
    assert np.abs(a - b).max() < 1e-10


def test_grid_fused_and_split_equal():
    r = GridRte(GridSpec(3), slices=2)
    p = derive_params(0.6, 0.1)
    assert np.abs(approx_pite_circuit(r, p).unitary()
                  - approx_pite_circuit(r, p, "split").unitary()).max() < 1e-10


def test_approx_block_matches_circuit(ising, maxcut):
    p = derive_params(0.3, 0.4, 2.0)
    u = approx_pite_circuit(ising, p).unitary()
    assert np.abs(u[:16, :16] - approx_block(maxcut, p)).max() < 1e-10


def test_small_dtau_limit(rng, ising):
    psi = from_vector(random_state(rng, 16))
    c = approx_pite_circuit(ising, derive_params(0.6, 1e-7))
    post, prob = postselect_ancilla(apply_circuit(psi.with_ancilla(), c))
    assert prob == pytest.approx(0.36, abs=1e-5)
    assert abs(np.vdot(post.amplitudes, psi.amplitudes)) ** 2 == pytest.approx(1, abs=1e-9)


def test_first_order_convergence(maxcut):
    errs = []
    for d in (0.02, 0.01):
        p = derive_params(0.5, d, 4.0)
        errs.append(np.linalg.norm(approx_block(maxcut, p) - exact_block(maxcut, p), 2))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_energy_shift_consistency(rng, maxcut, ising):
    # (gamma', E0) on H equals gamma = gamma' exp(-E0 dtau) on the unshifted H
    dtau, e0, g1 = 0.2, 1.5, 0.9
    psi = random_state(rng, 16)
    a = exact_block(maxcut, derive_params(g1, dtau, e0)) @ psi
    b = exact_block(maxcut, derive_params(g1 * math.exp(-e0 * dtau), dtau)) @ psi
    assert np.allclose(a / np.linalg.norm(a), b / np.linalg.norm(b), atol=1e-10)


def test_two_step_matches_product(ising):
    p1, p2 = derive_params(0.4, 0.3, 2.0), derive_params(0.8, 0.2, 2.0)
    u = two_step_circuit(p2, p1, ising).unitary()
    ref = approx_pite_circuit(ising, p2).unitary() @ approx_pite_circuit(ising, p1).unitary()
    assert np.abs(u - ref).max() < 1e-10


def test_two_step_small_ising():
    r = IsingRte(WeightedGraph(2, ((0, 1, 1.0),)))
    p1, p2 = derive_params(0.4, 0.3), derive_params(0.8, 0.3)
    ref = approx_pite_circuit(r, p2).unitary() @ approx_pite_circuit(r, p1).unitary()
    assert np.abs(two_step_circuit(p2, p1, r).unitary() - ref).max() < 1e-10


def test_two_step_identical_is_identity(ising):
    p = derive_params(0.6, 0.3, 2.0)
    assert np.abs(two_step_circuit(p, p, ising).unitary() - np.eye(32)).max() < 1e-10


def test_two_step_equal_times_acts_on_ancilla_only(ising):
    p1, p2 = derive_params(0.6, 0.3, 1.0), derive_params(0.6, 0.3, 3.0)
    u = two_step_circuit(p2, p1, ising).unitary().reshape(2, 16, 2, 16)
    for a in range(2):
        for b in range(2):
            blk = u[a, :, b, :]
            assert np.allclose(blk, blk[0, 0] * np.eye(16), atol=1e-10)


def test_d_operator_identity(ising):
    for th, t in ((0.3, 0.2), (-0.4, 0.7)):
        u = pite_kernel(ising, th, t).unitary()
        assert np.abs(d_circuit(ising, th, t).unitary() + u.conj().T @ XZX(4) @ u).max() < 1e-10


def test_d_two_operator_identity(ising):
    u = two_step_raw(ising, 0.3, 0.1, 0.4, 0.15).unitary()
    d = d_two_circuit(ising, 0.3, 0.1, 0.4, 0.15).unitary()
    assert np.abs(d + u.conj().T @ XZX(4) @ u).max() < 1e-10


def test_grid_d_identities_exact():
    r = GridRte(GridSpec(3))
    u = pite_kernel(r, 0.3, 0.2).unitary()
    assert np.abs(d_circuit(r, 0.3, 0.2).unitary() + u.conj().T @ XZX(3) @ u).max() < 1e-10
    u2 = two_step_raw(r, 0.3, 0.1, 0.2, 0.15).unitary()
    d2 = d_two_circuit(r, 0.3, 0.1, 0.2, 0.15).unitary()
    assert np.abs(d2 + u2.conj().T @ XZX(3) @ u2).max() < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_fused_product(ising, k):
    steps = [derive_params(g, d, 2.0) for g, d in [(0.3, 0.5), (0.45, 0.4), (0.8, 0.2), (0.6, 0.3)][:k]]
    prod, d = fused_product(ising, steps)
    ref = np.eye(32)
    for p in steps:
        ref = approx_pite_circuit(ising, p).unitary() @ ref
    assert np.abs(prod.unitary() - ref).max() < 1e-10
    assert np.abs(d.unitary() + ref.conj().T @ XZX(4) @ ref).max() < 1e-10


def test_transpiled_pite_exact(ising):
    c = approx_pite_circuit(ising, derive_params(0.3, 0.4, 2.0))
    assert np.abs(transpile_to_basis(c).unitary() - c.unitary()).max() < 1e-10


def test_maxcut_pite_cost(ising):
    m = metrics(approx_pite_circuit(ising, derive_params(0.3, 0.4, 2.0)))
    assert m.cnot_count == 28
    assert m.depth == 31


def test_circuit_probability_helper(rng, ising, maxcut):
    p = derive_params(0.5, 0.3, 2.0)
    psi = from_vector(random_state(rng, 16))
    blk = approx_block(maxcut, p)
    assert circuit_success_probability(psi, approx_pite_circuit(ising, p)) == pytest.approx(
        np.linalg.norm(blk @ psi.amplitudes) ** 2, abs=1e-12)


def test_alpha_closed_form_harmonic():
    from pite_qaa.qaa import harmonic_alpha_squared

    # equally spaced spectrum (k + 1/2) omega from a diagonal model
    n, x = 6, 0.2
    h = HamiltonianOracle(np.diag(np.arange(2 ** n) + 0.5))
    psi = np.full(2 ** n, 2 ** (-n / 2))
    assert alpha_squared(psi, h, x) == pytest.approx(harmonic_alpha_squared(n, x), rel=1e-12)
