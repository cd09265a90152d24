"""PSD collections, leverage scores and the sampling sparsifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BadEps, CapExceeded, ExhaustedAttempts, NotPsd, PreconditionError
from .linalg import (
    PSD_REL_TOL,
    RangeRestriction,
    as_sym,
    check_eps_approx,
    inv_sqrt_on_range,
    psd_test_from_eigs,
    range_restriction,
)

DEFAULT_SAMPLING_CONSTANT = 16.0
DEFAULT_MAX_ATTEMPTS = 100
_SUBSEED_MULTIPLIER = 0x9E3779B97F4A7C15
_U64 = (1 << 64) - 1


class PsdCollection:
    """Ordered family A_1..A_r of n x n symmetric PSD matrices."""

    def __init__(self, matrices: Sequence, labels: Sequence[str] | None = None,
                 rel_tol: float = PSD_REL_TOL):
        mats = [as_sym(M) for M in matrices]
        if not mats:
            raise ValueError("a collection needs at least one matrix")
        n = mats[0].shape[0]
        if any(M.shape != (n, n) for M in mats):
            raise ValueError("all matrices must share one dimension")
        stack = np.stack(mats)
        w = np.linalg.eigvalsh(stack)
        ok = psd_test_from_eigs(w[:, 0], w[:, -1], rel_tol)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise NotPsd(f"matrix {bad} is not PSD (lambda_min = {w[bad, 0]:.3e})")
        stack.flags.writeable = False
        self._stack = stack
        if labels is not None and len(labels) != len(mats):
            raise ValueError("labels must parallel the matrices")
        self.labels = list(labels) if labels is not None else None

    @property
    def dim(self) -> int:
        return self._stack.shape[1]

    @property
    def r(self) -> int:
        return self._stack.shape[0]

    def __len__(self):
        return self.r

    def __getitem__(self, i) -> np.ndarray:
        return self._stack[i]

    @property
    def stack(self) -> np.ndarray:
        """Read-only (r, n, n) array of the matrices."""
        return self._stack

    def total(self) -> np.ndarray:
        return as_sym(self._stack.sum(axis=0))

    def weighted_sum(self, weights: Mapping[int, float]) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for i, w in weights.items():
            out += w * self._stack[i]
        return as_sym(out)

    def subset_sum(self, indices) -> np.ndarray:
        idx = list(indices)
        if not idx:
            return np.zeros((self.dim, self.dim))
        return self._stack[idx].sum(axis=0)

    def subcollection(self, indices) -> "PsdCollection":
        idx = list(indices)
        labels = [self.labels[i] for i in idx] if self.labels else None
        return PsdCollection(self._stack[idx], labels)


@dataclass(frozen=True)
class WeightVector:
    """Sparse non-negative weights over ``range(size)``; only positive entries are stored."""

    size: int
    entries: Mapping[int, float]

    def __post_init__(self):
        clean = {}
        for i, w in sorted(self.entries.items()):
            i = int(i)
            w = float(w)
            if not 0 <= i < self.size:
                raise ValueError(f"index {i} outside [0, {self.size})")
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"weight {w} at {i} is not finite and non-negative")
            if w > 0:
                clean[i] = w
        object.__setattr__(self, "entries", clean)

    @property
    def support(self) -> list[int]:
        return list(self.entries)

    @property
    def support_size(self) -> int:
        return len(self.entries)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        for i, w in self.entries.items():
            out[i] = w
        return out

    @classmethod
    def ones(cls, size: int) -> "WeightVector":
        return cls(size, {i: 1.0 for i in range(size)})


@dataclass(frozen=True)
class NormalizedCollection:
    restriction: RangeRestriction
    tilde_matrices: np.ndarray
    norms: np.ndarray

    @property
    def m(self) -> int:
        return self.restriction.restricted_dim

    def identity_residual(self) -> float:
        S = self.tilde_matrices.sum(axis=0) - np.eye(self.m)
        return float(np.abs(np.linalg.eigvalsh((S + S.T) / 2)).max())


@dataclass(frozen=True)
class SparsifyReport:
    weights: WeightVector
    eps: float
    attempts: int
    support_size: int
    verified_margin: float
    leverage_sum: float
    seed: int
    norms: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    sampling_constant: float = DEFAULT_SAMPLING_CONSTANT
    restricted_dim: int = 0


def normalize(collection: PsdCollection, kernel_tol: float | None = None) -> NormalizedCollection:
    """Whiten every member by the inverse square root of the sum, on its range."""
    A = collection.total()
    restriction = range_restriction(A, kernel_tol)
    Q = restriction.basis
    B = inv_sqrt_on_range(A, restriction)
    BQt = B @ Q.T
    tilde = BQt[None, :, :] @ collection.stack @ BQt.T[None, :, :]
    tilde = (tilde + np.swapaxes(tilde, 1, 2)) / 2
    w = np.linalg.eigvalsh(tilde) if restriction.restricted_dim else np.zeros((collection.r, 0))
    norms = np.maximum(np.abs(w[:, 0]), np.abs(w[:, -1])) if w.shape[1] else np.zeros(collection.r)
    tilde.flags.writeable = False
    norms.flags.writeable = False
    return NormalizedCollection(restriction, tilde, norms)


def _check_eps(eps):
    if not (0.0 < eps <= 1.0) or math.isnan(eps):
        raise BadEps(f"eps must lie in (0, 1], got {eps}")


def sampling_scale(eps: float, m: int, constant: float = DEFAULT_SAMPLING_CONSTANT) -> float:
    """R = eps^2 / (constant * ln(4 m))."""
    _check_eps(eps)
    return eps * eps / (constant * math.log(4 * max(m, 1)))


def leverage_probabilities(norms, eps: float, m: int,
                           constant: float = DEFAULT_SAMPLING_CONSTANT) -> np.ndarray:
    """Per-index keep probabilities ``min(1, ||A~_i|| / R)``."""
    R = sampling_scale(eps, m, constant)
    norms = np.asarray(norms, dtype=np.float64)
    return np.minimum(1.0, norms / R)


def subseed(seed: int, attempt: int) -> int:
    return (int(seed) ^ ((_SUBSEED_MULTIPLIER * attempt) & _U64)) & _U64


def draw_weights(probabilities, seed: int) -> dict[int, float]:
    """One independent draw: keep i with probability p_i at weight 1/p_i.

    Indices with p_i >= 1 are kept with weight 1; p_i = 0 is never kept.
    Seeded through a counter-based generator, so the draw depends only on
    ``seed`` and the probability vector.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(int(seed) & _U64))
    u = rng.random(p.size)
    out: dict[int, float] = {}
    for i in np.flatnonzero((p >= 1.0) | (u < p)):
        out[int(i)] = 1.0 if p[i] >= 1.0 else float(1.0 / p[i])
    return out


@dataclass(frozen=True)
class _Draw:
    weights: dict
    attempts: int
    margin: float
    probabilities: np.ndarray


def sample_until_verified(
    norms,
    m: int,
    eps: float,
    seed: int,
    verify: Callable[[dict], tuple[bool, float]],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    constant: float = DEFAULT_SAMPLING_CONSTANT,
) -> _Draw:
    """Draw with successive sub-seeds until ``verify`` accepts and the support bound holds."""
    if max_attempts < 1:
        raise PreconditionError("max_attempts must be at least 1")
    p = leverage_probabilities(norms, eps, m, constant)
    support_cap = 2.0 * max(float(p.sum()), constant * math.log(4 * max(m, 1)))
    last_margin = float("nan")
    for attempt in range(max_attempts):
        mu = draw_weights(p, subseed(seed, attempt))
        if len(mu) > support_cap:
            continue
        ok, margin = verify(mu)
        last_margin = margin
        if ok:
            return _Draw(mu, attempt + 1, margin, p)
    raise ExhaustedAttempts(
        f"no verified draw in {max_attempts} attempts (last margin {last_margin:.3e})"
    )


def sparsify(
    collection: PsdCollection,
    eps: float,
    seed: int = 0,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    constant: float = DEFAULT_SAMPLING_CONSTANT,
) -> SparsifyReport:
    """Leverage-score sparsifier with verification and retry.

    Parameters
    ----------
    collection : PsdCollection
        Family whose sum is to be approximated.
    eps : float
        Target accuracy in (0, 1].
    seed : int
        64-bit seed; attempt ``t`` uses ``seed ^ (odd_multiplier * t)``.
    max_attempts : int
        Number of draws before giving up with ExhaustedAttempts.
    constant : float
        The constant c in ``R = eps^2 / (c ln 4m)``; larger keeps more.

    Returns
    -------
    SparsifyReport
        The first draw whose weighted sum passes ``check_eps_approx`` and
        whose support is at most ``2 max(sum p_i, c ln 4m)``.
    """
    _check_eps(eps)
    normed = normalize(collection)
    A = collection.total()
    restriction = normed.restriction

    def verify(mu):
        return check_eps_approx(collection.weighted_sum(mu), A, eps, restriction)

    draw = sample_until_verified(normed.norms, normed.m, eps, seed, verify,
                                 max_attempts, constant)
    weights = WeightVector(collection.r, draw.weights)
    return SparsifyReport(
        weights=weights,
        eps=eps,
        attempts=draw.attempts,
        support_size=weights.support_size,
        verified_margin=draw.margin,
        leverage_sum=float(normed.norms.sum()),
        seed=int(seed),
        norms=normed.norms,
        probabilities=draw.probabilities,
        sampling_constant=constant,
        restricted_dim=normed.m,
    )


@dataclass(frozen=True)
class SumNormsCheck:
    lhs: float
    rhs: dict[float, float]
    connectivity: dict[float, int]
    passed: bool

    @property
    def best_rhs(self) -> float:
        return min(self.rhs.values())


def sum_norms_bound_check(collection: PsdCollection, alpha_grid: Sequence[float],
                          subset_cap: int = 1 << 20) -> SumNormsCheck:
    """Compare sum ||A~_i|| with 4 (1 + ln r) N(alpha) / alpha over a grid of alphas."""
    from .connectivity import connectivity_parameter

    lhs = float(normalize(collection).norms.sum())
    rhs, values = {}, {}
    for alpha in alpha_grid:
        if not 0.0 < alpha <= 1.0:
            raise PreconditionError(f"alpha must lie in (0, 1], got {alpha}")
        res = connectivity_parameter(collection, alpha, subset_cap)
        if not res.exhaustive:
            raise CapExceeded("connectivity parameter search was not exhaustive")
        values[alpha] = res.value
        rhs[alpha] = 4.0 * (1.0 + math.log(collection.r)) * res.value / alpha
    return SumNormsCheck(lhs, rhs, values, lhs <= min(rhs.values()) + 1e-6)
