"""Dense symmetric linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  Anything that
enters the package as a symmetric matrix goes through :func:`as_sym`, which
validates finiteness and enforces exact symmetry by averaging with the
transpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BadEps,
    NoConvergence,
    NonFinite,
    RangeViolation,
    Singular,
    SumMismatch,
    ZeroSum,
)

PSD_REL_TOL = 1e-9
EPS_SLACK = 1e-7
RANGE_TOL = 1e-8
SUM_TOL = 1e-8


def as_sym(M) -> np.ndarray:
    """Return ``(M + M.T) / 2`` as a read-only float64 array.

    Raises NonFinite on NaN/Inf entries and ValueError on non-square input.
    """
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    S = (A + A.T) / 2.0
    S.flags.writeable = False
    return S


def _check_finite(M):
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise NonFinite("matrix has non-finite entries")
    return M


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def jacobi_eig(M, tol: float = 1e-12, max_sweeps: int = 100) -> EigDecomposition:
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Sweeps over all (p, q) pairs in row order until the largest off-diagonal
    entry is at most ``tol * max|M|``.  Raises NoConvergence when
    ``max_sweeps`` is exhausted.
    """
    A = np.array(as_sym(M))
    n = A.shape[0]
    V = np.eye(n)
    scale = float(np.abs(A).max()) if n else 0.0
    if scale == 0.0:
        return EigDecomposition(np.zeros(n), V)
    thresh = tol * scale
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps + 1):
        if n < 2 or np.abs(A[off_mask]).max() <= thresh:
            break
        if _ == max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return EigDecomposition(w[order], V[:, order])


def sym_eig(M, method: str = "lapack") -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"`` uses
    :func:`jacobi_eig`.
    """
    A = as_sym(M)
    if method == "jacobi":
        return jacobi_eig(A)
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigDecomposition(w, V)


def eigvalsh(M) -> np.ndarray:
    M = _check_finite(M)
    try:
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def psd_test_from_eigs(lam_min, lam_max, rel_tol=PSD_REL_TOL):
    """Vectorised PSD decision given extreme eigenvalues."""
    return np.asarray(lam_min) >= -rel_tol * np.maximum(1.0, np.asarray(lam_max))


def is_psd(M, rel_tol: float = PSD_REL_TOL) -> tuple[bool, float]:
    """Relative-slack PSD test.

    Returns ``(ok, lam_min)`` where ``ok`` means
    ``lam_min >= -rel_tol * max(1, lam_max)``.
    """
    w = eigvalsh(as_sym(M))
    if w.size == 0:
        return True, 0.0
    return bool(psd_test_from_eigs(w[0], w[-1], rel_tol)), float(w[0])


def spectral_norm(M) -> float:
    w = eigvalsh(as_sym(M))
    if w.size == 0:
        return 0.0
    return float(max(abs(w[0]), abs(w[-1])))


@dataclass(frozen=True)
class RangeRestriction:
    """Orthonormal basis of ker(A)^perp.

    ``eigenvalues`` are the retained eigenvalues of A, aligned with the
    columns of ``basis`` (the basis consists of eigenvectors of A).
    """

    basis: np.ndarray
    restricted_dim: int
    kernel_tol: float
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def restrict(self, M) -> np.ndarray:
        return as_sym(self.basis.T @ np.asarray(M, dtype=np.float64) @ self.basis)


def default_kernel_tol(n: int) -> float:
    return 1e-10 * n


def range_restriction(A, kernel_tol: float | None = None) -> RangeRestriction:
    """Eigenspace of A for eigenvalues above ``kernel_tol * lam_max(A)``."""
    A = as_sym(A)
    n = A.shape[0]
    if kernel_tol is None:
        kernel_tol = default_kernel_tol(n)
    w, V = sym_eig(A)
    lam_max = float(w[-1]) if n else 0.0
    if not lam_max > np.finfo(float).tiny:
        raise ZeroSum("matrix is numerically zero")
    keep = w > kernel_tol * lam_max
    basis = np.ascontiguousarray(V[:, keep])
    basis.flags.writeable = False
    vals = w[keep].copy()
    vals.flags.writeable = False
    return RangeRestriction(basis, int(keep.sum()), float(kernel_tol), vals)


def restrict_to_range(A, collection: Sequence, kernel_tol: float | None = None):
    """Restrict A and every member of ``collection`` to ker(A)^perp.

    A must equal the entrywise sum of ``collection`` (to 1e-8 relative).
    Returns ``(restriction, restricted_matrices)``.
    """
    A = as_sym(A)
    mats = [as_sym(M) for M in collection]
    total = np.sum(mats, axis=0) if mats else np.zeros_like(A)
    scale = max(float(np.abs(A).max()), np.finfo(float).tiny)
    if np.abs(total - A).max() > SUM_TOL * scale:
        raise SumMismatch("A differs from the sum of the collection")
    restriction = range_restriction(A, kernel_tol)
    Q = restriction.basis
    return restriction, [as_sym(Q.T @ M @ Q) for M in mats]


def inv_sqrt_on_range(A, restriction: RangeRestriction) -> np.ndarray:
    """Inverse square root of A restricted to the given range basis (m x m)."""
    Ar = restriction.restrict(A)
    w, U = sym_eig(Ar)
    if w.size and w[0] <= 0.0:
        raise Singular(f"restricted matrix has non-positive eigenvalue {w[0]:.3e}")
    return as_sym((U / np.sqrt(w)) @ U.T)


def check_eps_approx(
    Aprime,
    A,
    eps: float,
    restriction: RangeRestriction | None = None,
    tau: float = EPS_SLACK,
) -> tuple[bool, float]:
    """Decide ``(1 - eps) A <= Aprime <= (1 + eps) A`` on range(A).

    Aprime's range must lie in range(A) up to ``1e-8 * ||A||`` (RangeViolation
    otherwise).  The whitened spectrum of Aprime must lie in
    ``[1 - eps - tau, 1 + eps + tau]``; ``margin`` is the signed distance of
    the worst whitened eigenvalue to that interval's boundary.
    """
    if not 0.0 <= eps <= 1.0:
        raise BadEps(f"eps must lie in [0, 1], got {eps}")
    A = as_sym(A)
    Ap = as_sym(Aprime)
    if restriction is None:
        restriction = range_restriction(A)
    Q = restriction.basis
    lam = restriction.eigenvalues
    a_norm = float(lam[-1]) if lam.size else 0.0

    # component of Aprime outside range(A)
    QtAp = Q.T @ Ap
    outside = Ap - Q @ QtAp
    outside = outside - outside @ Q @ Q.T
    if spectral_norm(outside) > RANGE_TOL * a_norm:
        raise RangeViolation("range(Aprime) is not contained in range(A)")

    d = 1.0 / np.sqrt(lam)
    W = (QtAp @ Q) * d[:, None] * d[None, :]
    w = eigvalsh((W + W.T) / 2.0)
    lo, hi = 1.0 - eps - tau, 1.0 + eps + tau
    margin = float(min(w[0] - lo, hi - w[-1]))
    return margin > 0.0, margin
