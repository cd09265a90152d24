"""Cayley-graph sparsification, weight symmetrization and the subset-product relation finder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import Disconnected, NoCollision, PreconditionError, ZeroWeights
from .groups import (
    FiniteGroup,
    GeneratorSet,
    character_eigenvalues,
    right_regular,
    weighted_laplacian_dense,
)
from .linalg import check_eps_approx, default_kernel_tol, is_psd, range_restriction
from .psd_core import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_SAMPLING_CONSTANT,
    WeightVector,
    _check_eps,
    sample_until_verified,
)

_U64 = (1 << 64) - 1


def symmetrize_weights(weights: Mapping[int, float], group: FiniteGroup) -> dict[int, float]:
    """mu_new(s) = (mu(s) + mu(s^-1)) / 2; leaves sum mu(s) L_s unchanged."""
    out: dict[int, float] = {}
    for s, w in weights.items():
        if w < 0:
            raise PreconditionError("weights must be non-negative")
        s = int(s)
        si = int(group.inverse[s])
        if si == s:
            out[s] = out.get(s, 0.0) + float(w)
        else:
            out[s] = out.get(s, 0.0) + 0.5 * float(w)
            out[si] = out.get(si, 0.0) + 0.5 * float(w)
    return {s: w for s, w in sorted(out.items()) if w > 0}


@dataclass(frozen=True)
class CayleyReport:
    weights: WeightVector             # indexed by group element
    eps: float
    support_size: int
    verified_margin: float
    seed: int
    attempts: int = 1
    buckets: list = field(default_factory=list)
    norms: Mapping[int, float] = field(default_factory=dict, repr=False)
    probabilities: Mapping[int, float] = field(default_factory=dict, repr=False)
    leverage_sum: float = 0.0
    raw_support_size: int = 0
    sampling_constant: float = DEFAULT_SAMPLING_CONSTANT
    restricted_dim: int = 0


# leverage norms

def _pinv_from_eigs(w, V, kernel_tol):
    keep = w > kernel_tol * w[-1]
    Vk = V[:, keep]
    return (Vk / w[keep]) @ Vk.T, int(keep.sum())


def _norms_dense(group, elements, weights, L):
    """||L^{+/2} w_s L_s L^{+/2}|| for each s without forming L^{+/2}.

    With D = I - R(s), L_s = D D^T / 2 and the norm is lambda_max(D^T X D) / 2
    where X = L^+.  For an involution, L_s = 2 U U^T with U the orthonormal
    pair vectors (e_h - e_hs)/sqrt 2, reducing to 2 lambda_max(U^T X U).
    """
    N = group.order
    w, V = np.linalg.eigh(L)
    X, m = _pinv_from_eigs(w, V, default_kernel_tol(N))
    out: dict[int, float] = {}
    ar = np.arange(N)
    for s in elements:
        s = int(s)
        if s in out:
            continue
        si = int(group.inverse[s])
        pi = right_regular(group, s)
        if s == group.identity:
            val = 0.0
        elif si == s:
            h = ar[ar < pi]
            hs = pi[h]
            Y = X[np.ix_(h, h)] - X[np.ix_(h, hs)] - X[np.ix_(hs, h)] + X[np.ix_(hs, hs)]
            val = float(np.linalg.eigvalsh((Y + Y.T) / 2)[-1])  # 2 * (1/2) factor
        else:
            Y = X - X[pi, :] - X[:, pi] + X[np.ix_(pi, pi)]
            val = 0.5 * float(np.linalg.eigvalsh((Y + Y.T) / 2)[-1])
        out[s] = weights[s] * val
        if si in weights:
            out[si] = weights[si] * val
    return out, m


def _norms_characters(group, elements, weights):
    """Abelian fast path: every L_s is diagonal in the character basis."""
    els = list(elements)
    lam = np.stack([character_eigenvalues(group, s) for s in els])  # (|S|, N)
    wv = np.array([weights[s] for s in els])
    total = wv @ lam
    keep = total > default_kernel_tol(group.order) * total.max()
    ratios = (wv[:, None] * lam[:, keep]) / total[keep][None, :]
    norms = ratios.max(axis=1) if keep.any() else np.zeros(len(els))
    return {int(s): float(v) for s, v in zip(els, norms)}, int(keep.sum())


def leverage_norms(group: FiniteGroup, weights: Mapping[int, float], method: str = "auto"):
    """Normalised norms ||A~_s|| for the family {w(s) L_s}; returns (norms, restricted_dim)."""
    if method == "auto":
        method = "characters" if group.factors is not None else "dense"
    els = sorted(int(s) for s in weights)
    if method == "characters":
        return _norms_characters(group, els, weights)
    if method == "dense":
        L = weighted_laplacian_dense(group, weights)
        return _norms_dense(group, els, weights, L)
    raise ValueError(f"unknown method {method!r}")


# sparsification

def _sparsify_family(group, weights, eps, seed, max_attempts, constant, method):
    """Sample the family {w(s) L_s}; returns the L_s-coefficients plus diagnostics."""
    els = sorted(int(s) for s in weights)
    norms, m = leverage_norms(group, weights, method)
    L = weighted_laplacian_dense(group, weights)
    restriction = range_restriction(L)

    def coefficients(mu):
        # mu is indexed by position in els; scale back to L_s coefficients and symmetrize
        return symmetrize_weights({els[i]: w * weights[els[i]] for i, w in mu.items()}, group)

    def verify(mu):
        return check_eps_approx(weighted_laplacian_dense(group, coefficients(mu)), L, eps, restriction)

    nv = np.array([norms[s] for s in els])
    draw = sample_until_verified(nv, m, eps, seed, verify, max_attempts, constant)
    coef = coefficients(draw.weights)
    probs = {s: float(p) for s, p in zip(els, draw.probabilities)}
    return coef, draw, norms, probs, m, len(draw.weights)


def _check_generates(genset: GeneratorSet, support=None):
    G = genset.group
    gens = genset.elements if support is None else support
    if not G.generates(gens):
        raise Disconnected("generator set does not generate the group")


def cayley_sparsify(
    genset: GeneratorSet,
    eps: float,
    seed: int = 0,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    constant: float = DEFAULT_SAMPLING_CONSTANT,
    method: str = "auto",
) -> CayleyReport:
    """Sparsify the Cayley Laplacian sum_s w(s) L_s by sampling generators.

    Parameters
    ----------
    genset : GeneratorSet
        Symmetric generating set; its weights (unit if absent) define the family.
    eps : float
        Accuracy in (0, 1].
    seed : int
        64-bit seed for the counter-based sampler.
    max_attempts, constant :
        As for :func:`psdspar.psd_core.sparsify`.
    method : {"auto", "dense", "characters"}
        How leverage norms are computed.  "characters" needs a coordinate
        (direct-sum) group.

    Returns
    -------
    CayleyReport
        Symmetric weights on the group elements whose Laplacian satisfies the
        eps-sandwich against the input Laplacian.
    """
    _check_eps(eps)
    G = genset.group
    supp = [s for s in genset.elements if genset.weight(s) > 0]
    _check_generates(genset, supp)
    weights = {s: genset.weight(s) for s in supp}
    coef, draw, norms, probs, m, raw = _sparsify_family(G, weights, eps, seed, max_attempts,
                                                        constant, method)
    ok, margin = check_eps_approx(weighted_laplacian_dense(G, coef), cayley_laplacian_of(genset),
                                  eps)
    assert ok
    wv = WeightVector(G.order, coef)
    return CayleyReport(
        weights=wv, eps=eps, support_size=wv.support_size, verified_margin=margin,
        seed=int(seed), attempts=draw.attempts, buckets=[list(supp)], norms=norms,
        probabilities=probs, leverage_sum=float(sum(norms.values())),
        raw_support_size=raw, sampling_constant=constant, restricted_dim=m,
    )


def cayley_laplacian_of(genset: GeneratorSet) -> np.ndarray:
    return weighted_laplacian_dense(genset.group, {s: genset.weight(s) for s in genset.elements})


def weight_buckets(weights: Mapping[int, float]) -> list[list[int]]:
    """Dyadic buckets: bucket j >= 1 holds weights in (w_max 2^-j, w_max 2^(1-j)]."""
    pos = {int(s): float(w) for s, w in weights.items() if w > 0}
    if not pos:
        raise ZeroWeights("all weights are zero")
    wmax = max(pos.values())
    buckets: dict[int, list[int]] = {}
    for s, w in sorted(pos.items()):
        j = max(1, int(math.floor(math.log2(wmax / w))) + 1)
        # repair floating error at the dyadic boundaries
        while w <= wmax * 2.0 ** (-j):
            j += 1
        while j > 1 and w > wmax * 2.0 ** (1 - j):
            j -= 1
        buckets.setdefault(j, []).append(s)
    return [buckets[j] for j in sorted(buckets)]


def bucket_seed(seed: int, bucket: int) -> int:
    ss = np.random.SeedSequence([int(seed) & _U64, int(bucket)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def weighted_cayley_sparsify(
    genset: GeneratorSet,
    eps: float,
    seed: int = 0,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    constant: float = DEFAULT_SAMPLING_CONSTANT,
    method: str = "auto",
) -> CayleyReport:
    """Bucket generators by weight, sparsify each bucket, verify the combined sandwich."""
    _check_eps(eps)
    if genset.weights is None:
        genset = GeneratorSet(genset.group, genset.elements, {s: 1.0 for s in genset.elements})
    G = genset.group
    buckets = weight_buckets(genset.weights)
    _check_generates(genset, [s for b in buckets for s in b])
    total: dict[int, float] = {}
    norms: dict[int, float] = {}
    probs: dict[int, float] = {}
    attempts = 0
    raw = 0
    for j, bucket in enumerate(buckets):
        weights = {s: genset.weights[s] for s in bucket}
        coef, draw, bn, bp, _, braw = _sparsify_family(G, weights, eps, bucket_seed(seed, j),
                                                       max_attempts, constant, method)
        for s, w in coef.items():
            total[s] = total.get(s, 0.0) + w
        norms.update(bn)
        probs.update(bp)
        attempts += draw.attempts
        raw += braw
    L = cayley_laplacian_of(genset)
    restriction = range_restriction(L)
    ok, margin = check_eps_approx(weighted_laplacian_dense(G, total), L, eps, restriction)
    if not ok:
        raise AssertionError("bucket sandwiches did not combine")
    wv = WeightVector(G.order, total)
    return CayleyReport(
        weights=wv, eps=eps, support_size=wv.support_size, verified_margin=margin,
        seed=int(seed), attempts=attempts, buckets=buckets, norms=norms, probabilities=probs,
        leverage_sum=float(sum(norms.values())), raw_support_size=raw,
        sampling_constant=constant, restricted_dim=restriction.restricted_dim,
    )


# relations

@dataclass(frozen=True)
class Relation:
    """s = t_1 ... t_r with every factor drawn from (T - {s}) and its inverses."""

    target: int
    factors: tuple
    subsets: tuple = ()       # the two colliding subset masks

    @property
    def length(self) -> int:
        return len(self.factors)

    def verify(self, group: FiniteGroup, T: Sequence[int] | None = None) -> bool:
        if group.product(self.factors) != self.target:
            return False
        if T is not None:
            allowed = {int(t) for t in T if int(t) != self.target}
            allowed |= {int(group.inverse[t]) for t in allowed}
            if any(f not in allowed for f in self.factors) and self.factors:
                return False
            if self.length > 2 * len(T):
                return False
        return True


def subset_products(group: FiniteGroup, T: Sequence[int]) -> np.ndarray:
    """Products of all 2^|T| subsets, kept in the order of T; entry ``mask`` is the product."""
    k = len(T)
    prods = np.empty(1 << k, dtype=np.int64)
    prods[0] = group.identity
    for b, t in enumerate(T):
        lo = prods[: 1 << b]
        prods[1 << b: 1 << (b + 1)] = group.multiply(lo, int(t))  # t is the last factor
    return prods


def find_relation(group: FiniteGroup, T: Sequence[int]) -> tuple[int, Relation]:
    """Pigeonhole two subsets of T with equal product and solve for one element.

    Masks are scanned in increasing order; the first repeated product wins.
    The solved element s is the smallest element index in the symmetric
    difference of the two subsets.
    """
    T = [int(t) for t in T]
    if len(set(T)) != len(T):
        raise PreconditionError("T must list distinct elements")
    prods = subset_products(group, T)
    seen: dict[int, int] = {}
    pair = None
    for mask, p in enumerate(prods.tolist()):
        if p in seen:
            pair = (seen[p], mask)
            break
        seen[p] = mask
    if pair is None:
        raise NoCollision(f"all {len(prods)} subset products are distinct")
    m1, m2 = pair
    diff = m1 ^ m2
    positions = [b for b in range(len(T)) if diff >> b & 1]
    pos = min(positions, key=lambda b: T[b])
    s = T[pos]
    own, other = (m1, m2) if m1 >> pos & 1 else (m2, m1)
    before = [T[b] for b in range(pos) if own >> b & 1]
    after = [T[b] for b in range(pos + 1, len(T)) if own >> b & 1]
    middle = [T[b] for b in range(len(T)) if other >> b & 1]
    # prod(before) s prod(after) = prod(middle)  =>  s = before^-1 middle after^-1
    inv = group.inverse
    factors = ([int(inv[t]) for t in reversed(before)] + middle
               + [int(inv[t]) for t in reversed(after)])
    rel = Relation(s, tuple(factors), (m1, m2))
    if not rel.verify(group, T):
        raise AssertionError("relation does not multiply out")
    return s, rel


def certify_domination(group: FiniteGroup, T: Sequence[int], s: int,
                       relation: Relation | None = None, alpha: float | None = None,
                       weights: Mapping[int, float] | None = None):
    """Check alpha nu(s) L_s <= sum_{t in T - s} nu(t) L_t numerically.

    ``alpha`` defaults to 1/(8|T|), divided by the weight ratio W over T when
    weights are supplied.  Returns ``(passed, lambda_min)`` of the difference.
    """
    T = [int(t) for t in T]
    if relation is not None and not relation.verify(group, T):
        raise PreconditionError("relation is not valid for s over T")
    nu = {t: 1.0 for t in T} if weights is None else {t: float(weights[t]) for t in T}
    if alpha is None:
        alpha = 1.0 / (8 * len(T))
        if weights is not None:
            vals = [v for v in nu.values() if v > 0]
            alpha /= max(vals) / min(vals)
    rest = {t: nu[t] for t in T if t != s}
    D = weighted_laplacian_dense(group, rest) - weighted_laplacian_dense(group, {s: alpha * nu[s]})
    ok, lam_min = is_psd(D)
    return ok, lam_min
