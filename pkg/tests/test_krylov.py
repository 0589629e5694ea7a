import json

import numpy as np
import pytest
import scipy.sparse as sp

from dgprecond.krylov import (
    BreakdownError,
    SolveReport,
    pcg,
    estimate_spectrum,
    condition_numbers,
    stationary_iteration,
    error_propagator_norm,
    _ritz_from_cg,
)


def _spd(n, seed=0, cond=100.0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.geomspace(1.0, cond, n)
    return sp.csr_matrix(Q @ np.diag(d) @ Q.T), d


def test_pcg_solves_spd_system():
    A, _ = _spd(40, seed=1)
    rng = np.random.default_rng(2)
    x_true = rng.standard_normal(40)
    b = A @ x_true
    x, rep = pcg(A, b, tol=1e-12, maxit=200)
    assert rep.converged
    assert np.allclose(x, x_true, atol=1e-8)
    assert rep.iterations == len(rep.rel_residual_history) - 1
    assert rep.rel_residual_history[0] == 1.0
    assert rep.rel_residual_history[-1] < 1e-12


def test_pcg_two_distinct_eigenvalues_two_iterations():
    d = np.array([1.0] * 10 + [50.0] * 10)
    A = sp.diags(d).tocsr()
    b = np.random.default_rng(3).standard_normal(20)
    x, rep = pcg(A, b, tol=1e-10)
    assert rep.converged
    assert rep.iterations <= 2


def test_pcg_exact_preconditioner_one_iteration():
    A, _ = _spd(30, seed=4)
    Ainv = np.linalg.inv(A.toarray())
    b = np.random.default_rng(5).standard_normal(30)
    x, rep = pcg(A, b, B=lambda r: Ainv @ r, tol=1e-10)
    assert rep.iterations == 1
    assert rep.K == pytest.approx(1.0, rel=1e-8)


def test_pcg_zero_rhs():
    A, _ = _spd(10, seed=6)
    x, rep = pcg(A, np.zeros(10))
    assert rep.converged
    assert np.all(x == 0)


def test_pcg_indefinite_matrix_raises():
    A = sp.diags([1.0, -1.0, 2.0]).tocsr()
    with pytest.raises(BreakdownError):
        pcg(A, np.ones(3), tol=1e-12)


def test_pcg_indefinite_preconditioner_raises():
    A = sp.eye(3, format="csr")
    with pytest.raises(BreakdownError):
        pcg(A, np.ones(3), B=lambda r: -r)


def test_ritz_values_exact_for_full_run():
    # running CG to completion on diag(1,2,3) recovers the spectrum
    A = sp.diags([1.0, 2.0, 3.0]).tocsr()
    b = np.array([1.0, 1.0, 1.0])
    x, rep = pcg(A, b, tol=1e-14)
    assert np.allclose(rep.eig_min, 1.0, atol=1e-8)
    assert np.allclose(rep.eig_max, 3.0, atol=1e-8)
    assert rep.K == pytest.approx(3.0, rel=1e-8)


def test_ritz_tridiagonal_single_step():
    vals = _ritz_from_cg([0.25], [])
    assert vals.shape == (1,)
    assert vals[0] == pytest.approx(4.0)


def test_estimate_spectrum_dense_exact():
    A, d = _spd(50, seed=7)
    eigs = estimate_spectrum(A, None, dense_limit=100)
    assert np.allclose(np.sort(eigs), np.sort(d), rtol=1e-9)


def test_estimate_spectrum_dense_with_preconditioner():
    A, d = _spd(30, seed=8)
    inv_diag = 1.0 / A.diagonal()
    eigs = estimate_spectrum(A, lambda r: inv_diag * r if r.ndim == 1 else inv_diag[:, None] * r,
                             dense_limit=100)
    BA = np.diag(inv_diag) @ A.toarray()
    assert np.allclose(np.sort(eigs), np.sort(np.linalg.eigvals(BA).real), rtol=1e-8)


def test_estimate_spectrum_lanczos_matches_dense():
    A, d = _spd(80, seed=9, cond=1e4)
    dense = estimate_spectrum(A, None, dense_limit=200)
    lanczos = estimate_spectrum(A, None, k=80, dense_limit=0, seed=1)
    assert lanczos[-1] == pytest.approx(dense[-1], rel=1e-6)
    assert lanczos[0] == pytest.approx(dense[0], rel=1e-4)


def test_condition_numbers():
    eigs = np.array([0.001, 0.5, 0.8, 1.0, 2.0])
    out = condition_numbers(eigs, m_list=(0, 1, 2))
    assert out["K"] == pytest.approx(2000.0)
    assert out["K_m"][0] == pytest.approx(2000.0)
    assert out["K_m"][1] == pytest.approx(4.0)
    assert out["K_m"][2] == pytest.approx(2.5)
    # K_m is non-increasing in m
    vals = [out["K_m"][m] for m in (0, 1, 2)]
    assert vals == sorted(vals, reverse=True)
    with pytest.raises(ValueError):
        condition_numbers(eigs, m_list=(5,))


def test_stationary_iteration_converges():
    A, _ = _spd(20, seed=10, cond=10.0)
    inv_diag = 1.0 / A.diagonal()
    f = np.random.default_rng(11).standard_normal(20)
    # damped Jacobi as B
    u, rep = stationary_iteration(A, lambda r: 0.4 * inv_diag * r, f, maxit=5000, tol=1e-9)
    assert rep.converged
    assert np.allclose(A @ u, f, atol=1e-6)


def test_stationary_iteration_divergence_raises():
    A = sp.diags([1.0, 10.0]).tocsr()
    with pytest.raises(BreakdownError):
        stationary_iteration(A, lambda r: 2.0 * r, np.ones(2), maxit=100)


def test_propagator_norm_zero_for_symmetric():
    A, _ = _spd(15, seed=12)
    assert error_propagator_norm(A) < 1e-12


def test_propagator_norm_small_perturbation():
    # A = A_S + S with small skew part: ||E|| = ||A_S^{-1} S|| in the A_S norm
    A_S, _ = _spd(20, seed=13, cond=5.0)
    rng = np.random.default_rng(14)
    W = rng.standard_normal((20, 20))
    S = 0.05 * (W - W.T) / 2.0
    A = sp.csr_matrix(A_S.toarray() + S)
    got = error_propagator_norm(A, seed=3)
    # dense reference: sqrt of top eigenvalue of A_S^{-1} S^t A_S^{-1} S
    E = np.linalg.solve(A_S.toarray(), S)
    ref = np.sqrt(np.max(np.linalg.eigvals(np.linalg.solve(A_S.toarray(), S.T) @ E).real))
    assert got == pytest.approx(ref, rel=1e-6)


def test_propagator_norm_scale_invariant():
    A_S, _ = _spd(12, seed=15)
    rng = np.random.default_rng(16)
    W = rng.standard_normal((12, 12))
    A = sp.csr_matrix(A_S.toarray() + 0.1 * (W - W.T))
    n1 = error_propagator_norm(A)
    n2 = error_propagator_norm(sp.csr_matrix(7.5 * A.toarray()))
    assert n2 == pytest.approx(n1, rel=1e-7)


def test_report_json_roundtrip():
    rep = SolveReport(
        iterations=3,
        rel_residual_history=[1.0, 0.1, 0.01, 1e-8],
        eig_min=0.5,
        eig_max=2.0,
        eig_sorted_low=[0.5, 0.6],
        K=4.0,
        K_m={0: 4.0, 1: 3.3},
        converged=True,
    )
    data = json.loads(rep.to_json())
    assert data["iterations"] == 3
    assert data["K_m"] == {"0": 4.0, "1": 3.3}
    assert data["converged"] is True
    assert data["rel_residual_history"][-1] == 1e-8


def test_pcg_accepts_matrix_and_object_preconditioners():
    A, _ = _spd(10, seed=17)
    b = np.ones(10)
    Ainv = np.linalg.inv(A.toarray())

    class Obj:
        def apply(self, r):
            return Ainv @ r

    for B in (Ainv, Obj(), None):
        x, rep = pcg(A, b, B=B, tol=1e-10)
        assert rep.converged
