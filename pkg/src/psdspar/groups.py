"""Finite groups, regular representations and per-generator Laplacians.

Groups come in two flavours.  Table groups store the full N x N
multiplication table.  Coordinate groups are direct sums of cyclic groups
Z_{k_1} + ... + Z_{k_t}; element g has mixed-radix coordinates with the
first factor most significant, and products are computed coordinatewise, so
large abelian groups never need a table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DecompositionMismatch,
    InvalidTable,
    NotSymmetric,
    PreconditionError,
    TooLarge,
)

MAX_ORDER = 1 << 16
TABLE_CAP = 1 << 12       # largest N for which an explicit table is materialised
DENSE_CAP = 1 << 12       # largest N for dense N x N operators
_FULL_ASSOC_LIMIT = 64
_ASSOC_SAMPLES = 1000


class FiniteGroup:
    """A finite group on the element indices ``0..N-1``."""

    def __init__(self, order: int, *, table=None, factors: Sequence[int] | None = None,
                 identity: int = 0, max_order: int = MAX_ORDER, check: bool = True):
        if order < 1:
            raise InvalidTable("group order must be positive")
        if order > max_order:
            raise TooLarge(f"group order {order} exceeds the cap {max_order}")
        self.order = int(order)
        self.factors = tuple(int(k) for k in factors) if factors is not None else None
        self._table = None
        if self.factors is not None:
            if math.prod(self.factors) != order:
                raise DecompositionMismatch("factor orders do not multiply to the group order")
            self.identity = 0
            coords = self.coords(np.arange(order))
            self.inverse = self.index((-coords) % np.array(self.factors))
        else:
            T = np.asarray(table)
            self._table = T
            self.identity = int(identity)
            self.inverse = _inverse_from_table(T, self.identity)
            if check:
                _check_associative(T)
            T.flags.writeable = False
        self.inverse.flags.writeable = False

    # element arithmetic

    def coords(self, g) -> np.ndarray:
        """Mixed-radix coordinates of ``g`` (coordinate groups only), shape (..., t)."""
        if self.factors is None:
            raise DecompositionMismatch("group has no direct-sum decomposition")
        g = np.asarray(g, dtype=np.int64)
        if not self.factors:
            return np.zeros(g.shape + (0,), dtype=np.int64)
        return np.stack(np.unravel_index(g, self.factors), axis=-1).astype(np.int64)

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        if not self.factors:
            return np.zeros(c.shape[:-1], dtype=np.int64)
        return np.ravel_multi_index(tuple(np.moveaxis(c, -1, 0)), self.factors).astype(np.int64)

    def multiply(self, a, b) -> np.ndarray:
        """Elementwise product ``a * b`` (broadcasting over index arrays)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self._table is not None:
            return self._table[a, b].astype(np.int64)
        k = np.array(self.factors, dtype=np.int64)
        return self.index((self.coords(a) + self.coords(b)) % k)

    def mul1(self, a: int, b: int) -> int:
        return int(self.multiply(a, b))

    @property
    def mul(self) -> np.ndarray:
        """The N x N multiplication table, materialised on demand for coordinate groups."""
        if self._table is None:
            if self.order > TABLE_CAP:
                raise TooLarge(f"refusing to materialise a {self.order}^2 table")
            g = np.arange(self.order)
            T = self.multiply(g[:, None], g[None, :])
            T.flags.writeable = False
            self._table = T
        return self._table

    @property
    def is_abelian(self) -> bool:
        if self.factors is not None:
            return True
        return bool(np.array_equal(self._table, self._table.T))

    def product(self, elements) -> int:
        out = self.identity
        for g in elements:
            out = self.mul1(out, int(g))
        return out

    def subgroup(self, gens) -> np.ndarray:
        """Boolean membership mask of the subgroup generated by ``gens``."""
        gens = np.unique(np.asarray(list(gens), dtype=np.int64))
        member = np.zeros(self.order, dtype=bool)
        member[self.identity] = True
        frontier = np.array([self.identity], dtype=np.int64)
        while frontier.size and gens.size:
            nxt = self.multiply(frontier[:, None], gens[None, :]).ravel()
            nxt = np.unique(nxt[~member[nxt]])
            member[nxt] = True
            frontier = nxt
        return member

    def generates(self, gens) -> bool:
        return bool(self.subgroup(gens).all())

    def __repr__(self):
        kind = f"factors={self.factors}" if self.factors is not None else "table"
        return f"FiniteGroup(order={self.order}, {kind})"


def _inverse_from_table(T, identity):
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InvalidTable("multiplication table must be square")
    N = T.shape[0]
    if not np.issubdtype(T.dtype, np.integer):
        raise InvalidTable("table entries must be integers")
    if T.min() < 0 or T.max() >= N:
        raise InvalidTable("table entry outside 0..N-1")
    if not 0 <= identity < N:
        raise InvalidTable("identity index out of range")
    ar = np.arange(N)
    if not (np.array_equal(T[identity], ar) and np.array_equal(T[:, identity], ar)):
        raise InvalidTable(f"element {identity} is not a two-sided identity")
    srt = np.sort(T, axis=1)
    if not (np.all(srt == ar) and np.all(np.sort(T, axis=0) == ar[:, None])):
        raise InvalidTable("table is not a Latin square")
    inv = np.argmax(T == identity, axis=1).astype(np.int64)
    if not np.all(T[inv, ar] == identity):
        raise InvalidTable("left and right inverses differ")
    return inv


def _check_associative(T):
    N = T.shape[0]
    if N <= _FULL_ASSOC_LIMIT:
        a, b, c = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    else:
        rng = np.random.Generator(np.random.Philox(0))
        a, b, c = rng.integers(0, N, size=(3, _ASSOC_SAMPLES))
    if not np.array_equal(T[T[a, b], c], T[a, T[b, c]]):
        raise InvalidTable("multiplication is not associative")


def cyclic(k: int, max_order: int = MAX_ORDER) -> FiniteGroup:
    if k < 1:
        raise PreconditionError("cyclic group order must be at least 1")
    return FiniteGroup(k, factors=(k,), max_order=max_order)


def direct_sum(*groups: FiniteGroup, max_order: int = MAX_ORDER) -> FiniteGroup:
    """Direct product; element (g_1, ..., g_t) has index ravel_multi_index with g_1 most significant."""
    N = math.prod(G.order for G in groups)
    if N > max_order:
        raise TooLarge(f"direct sum of order {N} exceeds the cap {max_order}")
    if all(G.factors is not None for G in groups):
        factors = tuple(k for G in groups for k in G.factors)
        return FiniteGroup(N, factors=factors, max_order=max_order)
    if N > TABLE_CAP:
        raise TooLarge("direct sums with table factors are limited to small orders")
    shape = tuple(G.order for G in groups)
    idx = np.arange(N)
    parts = np.unravel_index(idx, shape)
    prod = [G.mul[pa[:, None], pa[None, :]] for G, pa in zip(groups, parts)]
    table = np.ravel_multi_index(tuple(prod), shape)
    identity = int(np.ravel_multi_index(tuple(G.identity for G in groups), shape))
    return FiniteGroup(N, table=table, identity=identity, max_order=max_order, check=False)


def boolean_cube(n: int, max_order: int = MAX_ORDER) -> FiniteGroup:
    """F_2^n; element indices read as bit strings with the first coordinate as the top bit."""
    if n < 0:
        raise PreconditionError("dimension must be non-negative")
    if 2 ** n > max_order:
        raise TooLarge(f"2^{n} exceeds the cap {max_order}")
    return FiniteGroup(2 ** n, factors=(2,) * n, max_order=max_order)


def from_table(table, identity: int | None = None, max_order: int = MAX_ORDER) -> FiniteGroup:
    T = np.asarray(table)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InvalidTable("multiplication table must be square")
    if T.shape[0] > max_order:
        raise TooLarge(f"group order {T.shape[0]} exceeds the cap {max_order}")
    if not np.issubdtype(T.dtype, np.integer):
        raise InvalidTable("table entries must be integers")
    T = T.astype(np.int64)
    if identity is None:
        ar = np.arange(T.shape[0])
        rows = np.flatnonzero((T == ar[None, :]).all(axis=1))
        if rows.size == 0:
            raise InvalidTable("no identity element")
        identity = int(rows[0])
    return FiniteGroup(T.shape[0], table=T, identity=identity, max_order=max_order)


def right_regular(group: FiniteGroup, g: int) -> np.ndarray:
    """Permutation ``pi[h] = h g`` of the element indices."""
    return group.multiply(np.arange(group.order), int(g))


def regular_matrix(group: FiniteGroup, g: int) -> np.ndarray:
    """Dense permutation matrix R(g) with ``(R(g) x)_h = x_{hg}``.

    This convention makes ``R(g1 g2) = R(g1) R(g2)``.
    """
    if group.order > DENSE_CAP:
        raise TooLarge("dense regular matrices are limited to small groups")
    pi = right_regular(group, g)
    M = np.zeros((group.order, group.order))
    M[np.arange(group.order), pi] = 1.0
    return M


class GeneratorLaplacian:
    """L_s = I - (R(s) + R(s)^T) / 2 as an implicit operator on R^N (or R^X)."""

    def __init__(self, perm, label=None):
        self.perm = np.asarray(perm, dtype=np.int64)
        self.n = self.perm.size
        self.inv_perm = np.empty_like(self.perm)
        self.inv_perm[self.perm] = np.arange(self.n)
        self.label = label

    @property
    def is_involution(self) -> bool:
        return bool(np.array_equal(self.perm[self.perm], np.arange(self.n)))

    @property
    def is_zero(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(self.n)))

    def quad(self, x) -> float:
        """x^T L x = ||x||^2 - x . x[pi]."""
        x = np.asarray(x, dtype=np.float64)
        return float(x @ x - x @ x[self.perm])

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x - 0.5 * (x[self.perm] + x[self.inv_perm])

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise TooLarge("dense Laplacians are limited to small groups")
        M = np.eye(self.n)
        ar = np.arange(self.n)
        np.add.at(M, (ar, self.perm), -0.5)
        np.add.at(M, (self.perm, ar), -0.5)
        return M

    def __repr__(self):
        return f"GeneratorLaplacian(n={self.n}, label={self.label!r})"


def gen_laplacian(group: FiniteGroup, s: int) -> GeneratorLaplacian:
    return GeneratorLaplacian(right_regular(group, s), label=int(s))


@dataclass(frozen=True)
class GeneratorSet:
    """Symmetric subset S of a group with optional symmetric weights."""

    group: FiniteGroup
    elements: tuple
    weights: Mapping[int, float] | None = None

    def __post_init__(self):
        G = self.group
        els = sorted({int(s) for s in self.elements})
        if any(not 0 <= s < G.order for s in els):
            raise PreconditionError("generator index outside the group")
        object.__setattr__(self, "elements", tuple(els))
        present = set(els)
        for s in els:
            if int(G.inverse[s]) not in present:
                raise NotSymmetric(f"generator {s} present without its inverse {int(G.inverse[s])}")
        if self.weights is not None:
            w = {int(s): float(v) for s, v in self.weights.items()}
            if set(w) != present:
                raise PreconditionError("weights must be given for exactly the generators")
            for s, v in w.items():
                if not math.isfinite(v) or v < 0:
                    raise PreconditionError(f"weight of {s} must be finite and non-negative")
                vi = w[int(G.inverse[s])]
                if abs(v - vi) > 1e-12 * max(abs(v), abs(vi), 1.0):
                    raise NotSymmetric(f"w({s}) = {v} differs from w(s^-1) = {vi}")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.elements)

    def weight(self, s: int) -> float:
        return 1.0 if self.weights is None else self.weights[int(s)]

    def weight_array(self) -> np.ndarray:
        return np.array([self.weight(s) for s in self.elements])

    def laplacians(self) -> list[GeneratorLaplacian]:
        return [gen_laplacian(self.group, s) for s in self.elements]


def weighted_laplacian_dense(group: FiniteGroup, weights: Mapping[int, float]) -> np.ndarray:
    """Dense sum_s w(s) L_s built from permutation index arrays."""
    N = group.order
    if N > DENSE_CAP:
        raise TooLarge("dense Laplacians are limited to small groups")
    L = np.zeros((N, N))
    items = [(int(s), float(w)) for s, w in weights.items() if w != 0.0]
    if not items:
        return L
    ar = np.arange(N)
    rows, cols, vals = [], [], []
    for s, w in items:
        pi = right_regular(group, s)
        rows += [ar, pi]
        cols += [pi, ar]
        vals.append(np.full(2 * N, -0.5 * w))
    np.add.at(L, (np.concatenate(rows), np.concatenate(cols)), np.concatenate(vals))
    L[ar, ar] += sum(w for _, w in items)
    return (L + L.T) / 2


def cayley_laplacian(genset: GeneratorSet) -> np.ndarray:
    return weighted_laplacian_dense(genset.group,
                                    {s: genset.weight(s) for s in genset.elements})


def _phase_fraction(factors, g, h):
    """sum_i g_i h_i / k_i modulo 1, reduced exactly over a common denominator."""
    K = math.lcm(*factors) if factors else 1
    num = sum(int(gi) * int(hi) * (K // k) for gi, hi, k in zip(g, h, factors)) % K
    return num, K


def character_eigenvalue(factors: Sequence[int], g, s) -> float:
    """2 sin^2(pi sum g_i s_i / k_i), with the phase reduced in exact integers."""
    num, K = _phase_fraction(factors, g, s)
    x = min(num, K - num) / K
    return 2.0 * math.sin(math.pi * x) ** 2


def character_eigenvalues(group: FiniteGroup, s: int) -> np.ndarray:
    """Eigenvalue of L_s on every character chi_g, indexed by g (coordinate groups)."""
    k = np.array(group.factors, dtype=np.int64)
    K = math.lcm(*group.factors) if group.factors else 1
    G = group.coords(np.arange(group.order))
    sc = group.coords(s)
    num = (G * (sc * (K // k))[None, :]).sum(axis=1) % K
    x = np.minimum(num, K - num) / K
    return 2.0 * np.sin(np.pi * x) ** 2


def abelian_character(factors: Sequence[int], g, group: FiniteGroup | None = None,
                      verify: Sequence[int] = ()) -> np.ndarray:
    """chi_g(h) = cos(2 pi sum g_i h_i / k_i) over the direct sum with the given factors.

    When ``verify`` lists generators, the relation L_s chi = lambda_s chi is
    checked to 1e-8 for each of them.
    """
    factors = tuple(int(k) for k in factors)
    if group is not None and group.factors != factors:
        raise DecompositionMismatch(f"group factors {group.factors} != {factors}")
    if len(g) != len(factors):
        raise DecompositionMismatch("character index has the wrong number of coordinates")
    N = math.prod(factors)
    K = math.lcm(*factors) if factors else 1
    H = np.stack(np.unravel_index(np.arange(N), factors), axis=-1) if factors else np.zeros((1, 0), int)
    w = np.array([int(gi) * (K // k) for gi, k in zip(g, factors)], dtype=np.int64)
    num = (H.astype(np.int64) * w[None, :]).sum(axis=1) % K
    chi = np.cos(2.0 * np.pi * num / K)
    if verify:
        G = group if group is not None else FiniteGroup(N, factors=factors)
        for s in verify:
            lam = character_eigenvalue(factors, g, tuple(G.coords(s)))
            resid = gen_laplacian(G, s).matvec(chi) - lam * chi
            if np.abs(resid).max() > 1e-8 * max(1.0, np.abs(chi).max()):
                raise DecompositionMismatch(f"character fails the eigen-relation for s = {s}")
    return chi


def character_sq_norm(factors: Sequence[int], g) -> int:
    """||chi_g||^2 exactly: N if 2g = 0 in the group, N / 2 otherwise."""
    N = math.prod(factors)
    if all((2 * int(gi)) % k == 0 for gi, k in zip(g, factors)):
        return N
    return N // 2 if N % 2 == 0 else N / 2


@dataclass
class GroupAction:
    """Right action of a group on ``points`` given by generator permutations.

    ``elements[i]`` names the group element of ``perms[i]`` when a group is
    attached; ``involutions[i]`` declares ``perms[i]`` to be its own inverse.
    """

    points: int
    perms: list
    group: FiniteGroup | None = None
    elements: list | None = None
    involutions: list | None = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.perms = [np.asarray(p, dtype=np.int64) for p in self.perms]
        ar = np.arange(self.points)
        for i, p in enumerate(self.perms):
            if p.shape != (self.points,) or not np.array_equal(np.sort(p), ar):
                raise PreconditionError(f"generator {i} is not a permutation of the points")
        if self.involutions is None:
            if self.group is not None and self.elements is not None:
                self.involutions = [int(self.group.inverse[e]) == int(e) for e in self.elements]
            else:
                self.involutions = [False] * len(self.perms)
        for i, inv in enumerate(self.involutions):
            if inv and not np.array_equal(self.perms[i][self.perms[i]], ar):
                raise PreconditionError(f"generator {i} is declared an involution but is not")
        if self.group is not None and self.elements is not None:
            self._check_axioms()

    def _check_axioms(self):
        G = self.group
        pos = {int(e): i for i, e in enumerate(self.elements)}
        if G.identity in pos and not np.array_equal(self.perms[pos[G.identity]],
                                                    np.arange(self.points)):
            raise PreconditionError("identity must act trivially")
        for g, i in pos.items():
            for h, j in pos.items():
                gh = G.mul1(g, h)
                if gh in pos:
                    # (x.g).h = x.(gh)
                    if not np.array_equal(self.perms[j][self.perms[i]], self.perms[pos[gh]]):
                        raise PreconditionError(f"action axiom fails for ({g}, {h})")

    def __len__(self):
        return len(self.perms)


def schreier_operator(action: GroupAction, index: int) -> GeneratorLaplacian:
    return GeneratorLaplacian(action.perms[index], label=index)


def schreier_gen_laplacian(action: GroupAction, index: int) -> np.ndarray:
    """I - (P + P^T)/2 on R^X; for an involution this is the matching Laplacian of its 2-cycles."""
    return schreier_operator(action, index).to_dense()


def max_minimal_generating_set(group: FiniteGroup, max_order: int = 64):
    """Largest irredundant generating set by depth-first search.

    Irredundance (no member lies in the subgroup generated by the others) is
    hereditary and an irredundant set has at most floor(log2 N) members, so
    the search extends only irredundant sets and stops once that ceiling is
    reached.  Returns ``(m, witness_set)``.
    """
    N = group.order
    if N > max_order:
        raise TooLarge(f"brute-force search limited to N <= {max_order}")
    if N == 1:
        return 0, ()
    ceiling = int(math.floor(math.log2(N)))
    cands = [g for g in range(N) if g != group.identity]
    cache: dict = {}

    def span(S):
        key = frozenset(S)
        if key not in cache:
            cache[key] = group.subgroup(S)
        return cache[key]

    best: list = [0, ()]

    def irredundant(S):
        return all(not span(S[:a] + S[a + 1:])[S[a]] for a in range(len(S)))

    def dfs(S, start):
        if best[0] >= ceiling:
            return
        if span(S).all():
            if len(S) > best[0]:
                best[0], best[1] = len(S), tuple(S)
            return  # supersets of a generating set are redundant
        for pos in range(start, len(cands)):
            T = S + [cands[pos]]
            if irredundant(T):
                dfs(T, pos + 1)

    dfs([], 0)
    m = best[0]
    assert m < math.log2(N) + 1
    return m, best[1]
