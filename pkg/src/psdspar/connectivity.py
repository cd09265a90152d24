"""Brute-force connectivity parameters, alpha-minimal sets and witness certificates.

A subset T of a collection is alpha-minimal when no member is alpha-dominated
by the sum of the others.  The property is hereditary (subsets of an
alpha-minimal set are alpha-minimal), so the search below grows minimal sets
level by level and only tests candidates all of whose one-smaller subsets
survived.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import BadEps, CapExceeded, NotMinimal, PreconditionError
from .linalg import PSD_REL_TOL, check_eps_approx, psd_test_from_eigs, spectral_norm
from .psd_core import PsdCollection

DEFAULT_SUBSET_CAP = 1 << 20
WITNESS_SLACK = 1e-9


def quad(op, w) -> float:
    """w^T op w for a dense matrix or any object exposing ``quad``."""
    if isinstance(op, np.ndarray):
        return float(w @ op @ w)
    return float(op.quad(w))


@dataclass(frozen=True)
class DominationQuery:
    alpha: float
    index: int
    subset: tuple

    def __post_init__(self):
        subset = tuple(sorted(int(j) for j in self.subset))
        object.__setattr__(self, "subset", subset)
        if self.index not in subset:
            raise PreconditionError(f"index {self.index} not in subset {subset}")


def dominates(query: DominationQuery, collection: PsdCollection,
              rel_tol: float = PSD_REL_TOL) -> bool:
    """True iff ``alpha A_i <= sum_{j in T, j != i} A_j`` in the PSD order."""
    others = [j for j in query.subset if j != query.index]
    M = collection.subset_sum(others) - query.alpha * collection[query.index]
    w = np.linalg.eigvalsh((M + M.T) / 2)
    return bool(psd_test_from_eigs(w[0], w[-1], rel_tol))


def _dominated_mask(stack, subset, alpha, rel_tol=PSD_REL_TOL):
    idx = list(subset)
    members = stack[idx]
    total = members.sum(axis=0)
    diffs = total[None, :, :] - (1.0 + alpha) * members
    w = np.linalg.eigvalsh(diffs)
    return psd_test_from_eigs(w[:, 0], w[:, -1], rel_tol)


def is_alpha_minimal(collection: PsdCollection, subset, alpha: float) -> bool:
    subset = tuple(subset)
    if not subset:
        return True
    return not _dominated_mask(collection.stack, subset, alpha).any()


@dataclass(frozen=True)
class AlphaMinimalCertificate:
    """Witness vectors proving that ``subset`` is alpha-minimal.

    ``forms[a, b]`` is ``w_a^T A_b w_a`` where ``w_a`` is the witness of
    ``subset[a]``.  ``scale`` is ``||sum_T A_j||_2`` or an upper bound on it;
    it only enters the strictness slack.  ``operators`` (aligned with the
    subset) permit recomputing ``forms`` from the witnesses.
    """

    alpha: float
    subset: tuple
    forms: np.ndarray
    witness_sq_norms: np.ndarray
    scale: float
    witnesses: dict | None = None
    operators: Sequence | None = None

    def margins(self, alpha: float | None = None) -> np.ndarray:
        a = self.alpha if alpha is None else alpha
        q = np.asarray(self.forms, dtype=np.float64)
        if q.size == 0:
            return np.zeros(0)
        diag = np.diag(q)
        off = q.sum(axis=1) - diag
        return a * diag - off - WITNESS_SLACK * self.scale * self.witness_sq_norms

    def relative_margins(self, alpha: float | None = None) -> np.ndarray:
        a = self.alpha if alpha is None else alpha
        q = np.asarray(self.forms, dtype=np.float64)
        if q.size == 0:
            return np.zeros(0)
        diag = np.diag(q)
        return (a * diag - (q.sum(axis=1) - diag)) / (a * diag)

    def holds(self, alpha: float | None = None) -> bool:
        return bool(np.all(self.margins(alpha) > 0))

    def recompute(self) -> "AlphaMinimalCertificate":
        """Re-evaluate every quadratic form from the stored witnesses and operators."""
        if self.witnesses is None or self.operators is None:
            return self
        k = len(self.subset)
        forms = np.empty((k, k))
        sq = np.empty(k)
        for a, i in enumerate(self.subset):
            w = np.asarray(self.witnesses[i], dtype=np.float64)
            sq[a] = float(w @ w)
            for b in range(k):
                forms[a, b] = quad(self.operators[b], w)
        return replace(self, forms=forms, witness_sq_norms=sq)


def certificate_from_witnesses(alpha, subset, witnesses, operators, scale=None):
    """Build (and evaluate) a certificate from explicit witness vectors."""
    subset = tuple(subset)
    if scale is None:
        total = sum(np.asarray(op, dtype=np.float64) for op in operators) if operators else 0.0
        scale = spectral_norm(total) if operators else 0.0
    empty = AlphaMinimalCertificate(float(alpha), subset, np.zeros((len(subset), len(subset))),
                                    np.zeros(len(subset)), float(scale),
                                    dict(witnesses), list(operators))
    return empty.recompute()


def empty_certificate(alpha: float) -> AlphaMinimalCertificate:
    return AlphaMinimalCertificate(float(alpha), (), np.zeros((0, 0)), np.zeros(0), 0.0, {}, [])


def extract_witnesses(collection: PsdCollection, alpha: float, subset) -> AlphaMinimalCertificate:
    """Witness w_i = most negative eigenvector of ``sum_{T - i} A_j - alpha A_i``.

    Raises NotMinimal if some member is dominated, or if a witness fails the
    strict inequality after the slack is applied.
    """
    subset = tuple(sorted(int(j) for j in subset))
    if not subset:
        return empty_certificate(alpha)
    stack = collection.stack
    members = stack[list(subset)]
    total = members.sum(axis=0)
    diffs = total[None] - (1.0 + alpha) * members
    w, V = np.linalg.eigh(diffs)
    dominated = psd_test_from_eigs(w[:, 0], w[:, -1])
    if dominated.any():
        bad = subset[int(np.flatnonzero(dominated)[0])]
        raise NotMinimal(f"member {bad} is {alpha}-dominated within {subset}")
    witnesses = {i: V[a, :, 0].copy() for a, i in enumerate(subset)}
    cert = certificate_from_witnesses(alpha, subset, witnesses, list(members),
                                      scale=spectral_norm(total))
    if not cert.holds():
        raise NotMinimal("witness inequality is numerically tied within the slack")
    return cert


@dataclass(frozen=True)
class ConnectivityResult:
    alpha: float
    value: int
    largest_minimal_subset: AlphaMinimalCertificate
    exhaustive: bool
    queries: int = 0


def connectivity_parameter(
    collection: PsdCollection,
    alpha: float,
    subset_cap: int = DEFAULT_SUBSET_CAP,
    max_size: int | None = None,
) -> ConnectivityResult:
    """Compute N(alpha) by exhaustive search over alpha-minimal subsets.

    Candidates are generated by increasing size and lexicographically within
    a size; the first minimal subset of the largest size is returned with
    its witnesses.  ``subset_cap`` bounds the number of domination queries
    (CapExceeded beyond it).  With ``max_size`` the search stops at that
    size; if minimal subsets of that size exist the value is only a lower
    bound and ``exhaustive`` is False.
    """
    if alpha == 0:
        return ConnectivityResult(0.0, 1, empty_certificate(0.0), True)
    if not 0.0 < alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in (0, 1], got {alpha}")
    stack = collection.stack
    r = collection.r
    queries = 0
    level: list[tuple] = [()]
    size = 0
    exhaustive = True
    while True:
        if max_size is not None and size >= max_size:
            exhaustive = False
            break
        survivors = set(level)
        nxt = []
        for T in level:
            for j in range(T[-1] + 1 if T else 0, r):
                cand = T + (j,)
                if size >= 1 and any(cand[:a] + cand[a + 1:] not in survivors
                                     for a in range(len(cand) - 1)):
                    continue
                queries += len(cand)
                if queries > subset_cap:
                    raise CapExceeded(f"more than {subset_cap} domination queries needed")
                if not _dominated_mask(stack, cand, alpha).any():
                    nxt.append(cand)
        if not nxt:
            break
        level = nxt
        size += 1
    cert = extract_witnesses(collection, alpha, level[0])
    return ConnectivityResult(float(alpha), size + 1, cert, exhaustive, queries)


def alpha_eps(eps: float) -> float:
    """Positive root of alpha (1 + alpha) = (1 - eps) / (1 + eps)."""
    if not 0.0 <= eps < 1.0:
        raise BadEps(f"eps must lie in [0, 1), got {eps}")
    c = (1.0 - eps) / (1.0 + eps)
    # rationalised root; avoids cancellation as eps -> 1
    return 2.0 * c / (1.0 + math.sqrt(1.0 + 4.0 * c))


def connectivity_threshold(collection: PsdCollection, eps: float,
                           subset_cap: int = DEFAULT_SUBSET_CAP,
                           max_size: int | None = None) -> ConnectivityResult:
    return connectivity_parameter(collection, alpha_eps(eps), subset_cap, max_size)


def verify_unsparsifiable(certificate: AlphaMinimalCertificate, eps: float) -> bool:
    """Re-check the witnesses at alpha_eps(eps).

    True means no weight vector supported on a proper subset of the
    certificate's subset can eps-approximate the subset's sum.
    """
    a_eps = alpha_eps(eps)
    if certificate.alpha < a_eps - 1e-12:
        raise PreconditionError(
            f"certificate alpha {certificate.alpha} is below alpha_eps = {a_eps}")
    cert = certificate.recompute()
    return cert.holds(alpha=a_eps)


def search_proper_sparsifier(collection: PsdCollection, subset, eps: float,
                             grid: Sequence[float] | None = None):
    """Exhaustive grid search for an eps-sparsifier of ``sum_T A_j`` supported on fewer than |T| members.

    Returns the first weight dict found, or None.
    """
    subset = tuple(subset)
    if grid is None:
        grid = [round(0.1 * k, 10) for k in range(1, 31)]
    target = collection.subset_sum(subset)
    from .linalg import range_restriction

    restriction = range_restriction(target)
    for size in range(0, len(subset)):
        for support in itertools.combinations(subset, size):
            for ws in itertools.product(grid, repeat=size):
                mu = dict(zip(support, ws))
                ok, _ = check_eps_approx(collection.weighted_sum(mu), target, eps, restriction)
                if ok:
                    return mu
    return None
