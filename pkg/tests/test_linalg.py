import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from psdspar.errors import BadEps, NoConvergence, NonFinite, RangeViolation, SumMismatch, ZeroSum
from psdspar.linalg import (
    EPS_SLACK,
    as_sym,
    check_eps_approx,
    inv_sqrt_on_range,
    is_psd,
    jacobi_eig,
    range_restriction,
    restrict_to_range,
    spectral_norm,
    sym_eig,
)


def random_sym(rng, n):
    M = rng.standard_normal((n, n))
    return (M + M.T) / 2


def random_psd(rng, n, rank=None):
    V = rng.standard_normal((n, rank or n))
    return V @ V.T


def test_as_sym_symmetrizes_and_freezes():
    S = as_sym([[1.0, 2.0], [0.0, 1.0]])
    assert np.array_equal(S, [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        S[0, 0] = 3.0


def test_as_sym_rejects_bad_input():
    with pytest.raises(NonFinite):
        as_sym([[np.nan, 0], [0, 1]])
    with pytest.raises(ValueError):
        as_sym(np.zeros((2, 3)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_jacobi_matches_lapack(n, seed):
    M = random_sym(np.random.default_rng(seed), n)
    wj, Vj = jacobi_eig(M)
    wl = np.linalg.eigvalsh(M)
    assert np.allclose(wj, wl, atol=1e-9 * max(1, np.abs(wl).max()))
    assert np.allclose(Vj @ np.diag(wj) @ Vj.T, M, atol=1e-9)
    assert np.allclose(Vj.T @ Vj, np.eye(n), atol=1e-10)


def test_sym_eig_methods_agree():
    M = random_sym(np.random.default_rng(3), 9)
    a = sym_eig(M)
    b = sym_eig(M, method="jacobi")
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)
    with pytest.raises(ValueError):
        sym_eig(M, method="qr")


def test_jacobi_sweep_limit():
    M = random_sym(np.random.default_rng(4), 8)
    with pytest.raises(NoConvergence):
        jacobi_eig(M, tol=1e-300, max_sweeps=1)


def test_jacobi_diagonal_input_sorted():
    w, V = jacobi_eig(np.diag([3.0, -1.0, 2.0]))
    assert np.array_equal(w, [-1.0, 2.0, 3.0])


@pytest.mark.parametrize(
    "diag, expected",
    [([1.0, 0.0], True), ([1.0, -1e-12], True), ([1.0, -1e-6], False), ([-1.0, -2.0], False)],
)
def test_is_psd_relative_slack(diag, expected):
    ok, lam = is_psd(np.diag(diag))
    assert ok is expected
    assert lam == min(diag)


def test_spectral_norm_matches_svd():
    M = random_sym(np.random.default_rng(5), 7)
    assert np.isclose(spectral_norm(M), np.linalg.svd(M, compute_uv=False)[0])


def test_range_restriction_rank():
    rng = np.random.default_rng(6)
    A = random_psd(rng, 8, rank=3)
    R = range_restriction(A)
    assert R.restricted_dim == 3 == np.linalg.matrix_rank(A)
    assert np.allclose(R.basis.T @ R.basis, np.eye(3))
    # A is recovered from its restriction
    assert np.allclose(R.basis @ R.restrict(A) @ R.basis.T, A)


def test_range_restriction_zero():
    with pytest.raises(ZeroSum):
        range_restriction(np.zeros((3, 3)))


def test_restrict_to_range_checks_sum():
    rng = np.random.default_rng(7)
    parts = [random_psd(rng, 5, 1) for _ in range(3)]
    R, restricted = restrict_to_range(sum(parts), parts)
    assert R.restricted_dim == 3
    assert np.allclose(sum(restricted), R.restrict(sum(parts)))
    with pytest.raises(SumMismatch):
        restrict_to_range(sum(parts) + np.eye(5), parts)


def test_inv_sqrt_whitens():
    A = random_psd(np.random.default_rng(8), 6, rank=4)
    R = range_restriction(A)
    B = inv_sqrt_on_range(A, R)
    assert np.allclose(B @ R.restrict(A) @ B, np.eye(4), atol=1e-9)


def test_eps_identity_margin():
    A = random_psd(np.random.default_rng(9), 5)
    ok, margin = check_eps_approx(A, A, 0.5)
    assert ok and np.isclose(margin, 0.5 + EPS_SLACK, atol=1e-9)


def test_eps_boundary_and_outside():
    A = random_psd(np.random.default_rng(10), 4)
    assert check_eps_approx(1.5 * A, A, 0.5)[0]
    ok, margin = check_eps_approx(1.6 * A, A, 0.5)
    assert not ok and np.isclose(margin, -0.1 + EPS_SLACK)
    assert not check_eps_approx(0.4 * A, A, 0.5)[0]


def test_eps_range_violation():
    A = np.diag([1.0, 1.0, 0.0])
    with pytest.raises(RangeViolation):
        check_eps_approx(np.eye(3), A, 0.5)
    ok, _ = check_eps_approx(np.diag([1.2, 0.9, 0.0]), A, 0.5)
    assert ok


def test_eps_invalid():
    with pytest.raises(BadEps):
        check_eps_approx(np.eye(2), np.eye(2), 1.5)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), eps=st.floats(0.05, 1.0))
def test_eps_margin_matches_generalized_eigenproblem(n, seed, eps):
    rng = np.random.default_rng(seed)
    A = random_psd(rng, n) + 0.1 * np.eye(n)
    Ap = A + 0.3 * random_sym(rng, n) @ random_sym(rng, n).T * 0.1
    Ap = (Ap + Ap.T) / 2
    lam = scipy.linalg.eigh(Ap, A, eigvals_only=True)
    expected = min(lam[0] - (1 - eps - EPS_SLACK), (1 + eps + EPS_SLACK) - lam[-1])
    ok, margin = check_eps_approx(Ap, A, eps)
    assert np.isclose(margin, expected, atol=1e-8 * max(1.0, np.abs(lam).max()))
    assert ok == (margin > 0)
