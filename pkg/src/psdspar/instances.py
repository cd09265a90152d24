"""Generators and verifiers for the lower-bound and connectivity instances.

Covers edge-Laplacian collections of graphs, spanning-tree alpha-minimal
sets, Z_N and abelian alpha-minimal generator sets, the transversal
partition of K_{n,n}, and the unsparsifiable Schreier instance built from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .connectivity import AlphaMinimalCertificate, certificate_from_witnesses
from .errors import (
    DegenerateSize,
    DimensionMismatch,
    Disconnected,
    PreconditionError,
    TooLarge,
    TooSmall,
)
from .groups import (
    MAX_ORDER,
    FiniteGroup,
    GroupAction,
    abelian_character,
    character_eigenvalue,
    character_sq_norm,
    gen_laplacian,
)
from .psd_core import PsdCollection


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple   # (u, v, weight) triples; parallel edges allowed

    def __post_init__(self):
        clean = []
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise PreconditionError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            if u == v:
                raise PreconditionError(f"self-loop at vertex {u}")
            if not math.isfinite(w) or w < 0:
                raise PreconditionError(f"edge ({u}, {v}) has invalid weight {w}")
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def m(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        return _components(self.n, [(u, v) for u, v, w in self.edges if w > 0]) == 1


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def _components(n, pairs) -> int:
    if n == 0:
        return 0
    if not pairs:
        return n
    u, v = np.array(pairs, dtype=np.int64).T
    A = coo_matrix((np.ones(u.size), (u, v)), shape=(n, n))
    return int(connected_components(A, directed=False)[0])


def edge_laplacian(n: int, u: int, v: int, w: float = 1.0) -> np.ndarray:
    L = np.zeros((n, n))
    L[u, u] = L[v, v] = w
    L[u, v] = L[v, u] = -w
    return L


def graph_laplacian(graph: Graph) -> np.ndarray:
    L = np.zeros((graph.n, graph.n))
    for u, v, w in graph.edges:
        L += edge_laplacian(graph.n, u, v, w)
    return L


def graph_edge_collection(graph: Graph) -> PsdCollection:
    labels = [f"{u}-{v}" for u, v, _ in graph.edges]
    return PsdCollection([edge_laplacian(graph.n, u, v, w) for u, v, w in graph.edges], labels)


def spanning_tree_minimal(graph: Graph) -> AlphaMinimalCertificate:
    """Tree edges with +-1 cut witnesses; valid for every alpha > 0 (stored as alpha = 1).

    The witness of tree edge e = (u, v) is +1 on the side of the tree minus e
    that contains u and -1 elsewhere.
    """
    n = graph.n
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for idx, (u, v, w) in enumerate(graph.edges):
        if w > 0:
            adj[u].append((v, idx))
            adj[v].append((u, idx))
    tree = []
    stack = [0]
    while stack:
        x = stack.pop()
        for y, idx in adj[x]:
            if not seen[y]:
                seen[y] = True
                tree.append(idx)
                stack.append(y)
    if not seen.all():
        raise Disconnected("graph is not connected")
    tree.sort()
    tree_adj: list[list[int]] = [[] for _ in range(n)]
    for idx in tree:
        u, v, _ = graph.edges[idx]
        tree_adj[u].append(v)
        tree_adj[v].append(u)
    witnesses = {}
    for idx in tree:
        u, v, _ = graph.edges[idx]
        side = np.zeros(n, dtype=bool)
        side[u] = True
        stack = [u]
        while stack:
            x = stack.pop()
            for y in tree_adj[x]:
                if not side[y] and not (x == u and y == v):
                    side[y] = True
                    stack.append(y)
        witnesses[idx] = np.where(side, 1.0, -1.0)
    ops = [edge_laplacian(n, *graph.edges[idx]) for idx in tree]
    return certificate_from_witnesses(1.0, tuple(tree), witnesses, ops)


# abelian constructions

def zn_parameters(N: int, alpha: float) -> tuple[int, int]:
    """k = smallest even integer with alpha >= pi^2 / (2 (k^2 - 1)); r = max r with k^(8r) <= N."""
    if N < 2:
        raise PreconditionError("N must be at least 2")
    if not 0.0 < alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in (0, 1], got {alpha}")
    k = 2
    while alpha < math.pi ** 2 / (2 * (k * k - 1)):
        k += 2
    r = 0
    while k ** (8 * (r + 1)) <= N:
        r += 1
    return k, r


@dataclass(frozen=True)
class AbelianMinimalSet:
    factors: tuple
    elements: tuple               # generator coordinates, one tuple per member
    characters: tuple             # character index tuples g, aligned with elements
    certificate: AlphaMinimalCertificate
    group: FiniteGroup | None = None

    @property
    def indices(self) -> tuple:
        if self.group is None:
            raise TooLarge("no group attached")
        return tuple(int(self.group.index(c)) for c in self.elements)


def _closed_form_certificate(alpha, factors, elements, characters, group=None):
    """Forms chi_a^T L_b chi_a = lambda_b(g_a) ||chi_a||^2 from the character eigenvalues."""
    k = len(elements)
    forms = np.empty((k, k))
    sq = np.empty(k)
    for a, g in enumerate(characters):
        sq[a] = float(character_sq_norm(factors, g))
        for b, s in enumerate(elements):
            forms[a, b] = character_eigenvalue(factors, g, s) * sq[a]
    scale = 2.0 * k  # ||sum L_s|| <= 2 |S|
    witnesses = operators = None
    subset = tuple(range(k))
    if group is not None and group.order <= MAX_ORDER:
        witnesses = {a: abelian_character(factors, g, group) for a, g in enumerate(characters)}
        operators = [gen_laplacian(group, int(group.index(s))) for s in elements]
    return AlphaMinimalCertificate(float(alpha), subset, forms, sq, scale, witnesses, operators)


def zn_alpha_minimal(N: int, alpha: float) -> AbelianMinimalSet:
    """S = {k, k^2, ..., k^r} in Z_N with witnesses chi_{floor(N / 2k^i)}.

    Everything is evaluated in closed form (exact integer phases), so N may
    be far beyond what can be materialised.  ``r = 1`` gives the singleton
    {k}; ``r = 0`` raises DegenerateSize.
    """
    k, r = zn_parameters(N, alpha)
    if r < 1:
        raise DegenerateSize(f"N = {N} is too small for k = {k} (needs k^8 <= N)")
    elements = tuple((k ** i,) for i in range(1, r + 1))
    chars = tuple((N // (2 * k ** i),) for i in range(1, r + 1))
    group = FiniteGroup(N, factors=(N,)) if N <= MAX_ORDER else None
    cert = _closed_form_certificate(alpha, (N,), elements, chars, group)
    if not cert.holds():
        raise AssertionError("closed-form witness inequality failed")
    return AbelianMinimalSet((N,), elements, chars, cert, group)


def abelian_alpha_minimal(factors, alpha: float, max_order: int = MAX_ORDER) -> AbelianMinimalSet:
    """Lift per-factor Z_{k_i} sets into the direct sum with zeros in the other coordinates.

    A factor too small for the Z_N construction contributes the singleton
    {1} with witness chi_{floor(k_i / 2)}, which is minimal on its own.
    """
    factors = tuple(int(k) for k in factors)
    if any(k < 2 for k in factors):
        raise PreconditionError("every factor must have order at least 2")
    N = math.prod(factors)
    if N > max_order:
        raise TooLarge(f"group order {N} exceeds the cap {max_order}")
    t = len(factors)
    elements, chars = [], []
    for i, ki in enumerate(factors):
        try:
            part = zn_alpha_minimal(ki, alpha)
            gens = [e[0] for e in part.elements]
            wit = [c[0] for c in part.characters]
        except DegenerateSize:
            gens, wit = [1], [ki // 2]
        for s, g in zip(gens, wit):
            elements.append(tuple(s if j == i else 0 for j in range(t)))
            chars.append(tuple(g if j == i else 0 for j in range(t)))
    group = FiniteGroup(N, factors=factors, max_order=max_order)
    cert = _closed_form_certificate(alpha, factors, tuple(elements), tuple(chars), group)
    if not cert.holds():
        raise AssertionError("closed-form witness inequality failed")
    return AbelianMinimalSet(factors, tuple(elements), tuple(chars), cert, group)


# K_{n,n} and the Schreier instance

@dataclass(frozen=True)
class MatchingPartition:
    """Matchings on ``vertices`` points; edges are (u, v) pairs of vertex indices."""

    vertices: int
    matchings: tuple
    transversal: tuple | None = None
    perfect: bool = True

    def __post_init__(self):
        for i, M in enumerate(self.matchings):
            used = [x for e in M for x in e]
            if len(used) != len(set(used)):
                raise PreconditionError(f"matching {i} is not vertex-disjoint")
            if self.perfect and len(used) != self.vertices:
                raise PreconditionError(f"matching {i} is not perfect")
        if self.transversal is not None:
            tv = [x for e in self.transversal for x in e]
            if sorted(tv) != list(range(self.vertices)):
                raise PreconditionError("transversal is not a perfect matching")
            tset = {frozenset(e) for e in self.transversal}
            for i, M in enumerate(self.matchings):
                if sum(frozenset(e) in tset for e in M) != 1:
                    raise PreconditionError(f"transversal meets matching {i} more than once")

    def edge_count(self) -> int:
        return sum(len(M) for M in self.matchings)


def _odd_partition(n):
    """Left x -> vertex x, right y -> vertex n + y.  Returns (M_i list, M, M')."""
    Ms = [[(x, n + (x + i) % n) for x in range(n)] for i in range(n)]
    M = [(x, n + (2 * x) % n) for x in range(n)]
    Mp = [((i + 1) % n, n + (2 * i + 1) % n) for i in range(n)]
    return Ms, M, Mp


def knn_transversal_partition(n: int) -> MatchingPartition:
    """Perfect matchings partitioning K_{n,n} plus a transversal meeting each exactly once."""
    if n < 3:
        raise TooSmall("K_{n,n} is transversely partitionable only for n >= 3")
    if n % 2 == 1:
        Ms, M, _ = _odd_partition(n)
        return MatchingPartition(2 * n, tuple(tuple(m) for m in Ms), tuple(M))
    m = n - 1
    Ms, M, Mp = _odd_partition(m)

    # re-index K_{m,m} inside K_{n,n}: left x stays x, right y moves from m + y to n + y
    def lift(e):
        return (e[0], e[1] + 1)

    new_l, new_r = m, n + m
    Mset = set(M)
    T = []
    for i in range(m):
        a, b = next(e for e in Ms[i] if e in Mset)
        Ti = [lift(e) for e in Ms[i] if e not in Mset]
        Ti += [(new_l, b + 1), (a, new_r)]
        T.append(tuple(Ti))
    T.append(tuple([lift(e) for e in M] + [(new_l, new_r)]))
    transversal = tuple([lift(e) for e in Mp] + [(new_l, new_r)])
    return MatchingPartition(2 * n, tuple(T), transversal)


def matching_involution(points: int, matching) -> np.ndarray:
    perm = np.arange(points)
    for u, v in matching:
        perm[u], perm[v] = v, u
    return perm


def matching_laplacian(points: int, matching) -> np.ndarray:
    """Integer Laplacian of a matching (one unit edge per pair)."""
    L = np.zeros((points, points), dtype=np.int64)
    for u, v in matching:
        L[u, u] += 1
        L[v, v] += 1
        L[u, v] -= 1
        L[v, u] -= 1
    return L


@dataclass(frozen=True)
class SchreierInstance:
    n: int
    points: int
    matchings: tuple
    action: GroupAction
    witnesses: tuple
    base: MatchingPartition = field(repr=False)

    def laplacians(self) -> list[np.ndarray]:
        return [matching_laplacian(self.points, M).astype(np.float64) for M in self.matchings]

    def collection(self) -> PsdCollection:
        return PsdCollection(self.laplacians(), [f"M{i}" for i in range(len(self.matchings))])

    def certificate(self) -> AlphaMinimalCertificate:
        ops = self.laplacians()
        wit = {i: np.asarray(x, dtype=np.float64) for i, x in enumerate(self.witnesses)}
        return certificate_from_witnesses(1.0, tuple(range(self.n)), wit, ops)


def schreier_unsparsifiable(n: int) -> SchreierInstance:
    """Augment the K_{n,n} partition with 2n pendant points so each matching is a bridge set.

    Vertices: K_{n,n} left 0..n-1 and right n..2n-1, then a'_i = 2n + 2i and
    b'_i = 2n + 2i + 1.  With (a_i, b_i) the transversal edge in M_i,
    M'_i = (M_i - M) + {(a_i, a'_i), (b_i, b'_i)} + {(a'_j, b'_j) : j != i}.
    """
    base = knn_transversal_partition(n)
    P = 4 * n
    tset = {frozenset(e) for e in base.transversal}
    newm = []
    for i, Mi in enumerate(base.matchings):
        (a, b), = [e for e in Mi if frozenset(e) in tset]
        ai, bi = 2 * n + 2 * i, 2 * n + 2 * i + 1
        Mp = [e for e in Mi if frozenset(e) not in tset]
        Mp += [(a, ai), (b, bi)]
        Mp += [(2 * n + 2 * j, 2 * n + 2 * j + 1) for j in range(n) if j != i]
        newm.append(tuple(Mp))
    witnesses = []
    for i in range(n):
        x = -np.ones(P, dtype=np.int64)
        x[2 * n + 2 * i] = x[2 * n + 2 * i + 1] = 1
        witnesses.append(x)
    perms = [matching_involution(P, M) for M in newm]
    action = GroupAction(P, perms, involutions=[True] * n,
                         labels=[f"M{i}" for i in range(n)])
    inst = SchreierInstance(n, P, tuple(newm), action, tuple(witnesses), base)
    MatchingPartition(P, inst.matchings)  # each M'_i is a perfect matching
    if _components(P, [e for M in newm for e in M]) != 1:
        raise AssertionError("augmented graph is disconnected")
    if not verify_cut_certificate(inst.matchings, inst.witnesses, P):
        raise AssertionError("cut certificate failed")
    return inst


def cut_values(matchings, witnesses, points: int | None = None) -> np.ndarray:
    """Integer matrix V[i, j] = x_i^T L_{M_j} x_i."""
    X = [np.asarray(x, dtype=np.int64) for x in witnesses]
    if points is not None and any(x.shape != (points,) for x in X):
        raise DimensionMismatch("witness length differs from the point count")
    V = np.zeros((len(X), len(matchings)), dtype=np.int64)
    for i, x in enumerate(X):
        for j, M in enumerate(matchings):
            V[i, j] = sum(int(x[u] - x[v]) ** 2 for u, v in M)
    return V


def verify_cut_certificate(matchings, witnesses, points: int | None = None) -> bool:
    """x_i^T L_{M_i} x_i > 0 and x_i^T L_{M_j} x_i = 0 for j != i, in exact integers."""
    if len(matchings) != len(witnesses):
        raise DimensionMismatch("one witness per matching is required")
    V = cut_values(matchings, witnesses, points)
    d = len(matchings)
    off = V[~np.eye(d, dtype=bool)]
    return bool(np.all(np.diag(V) > 0) and np.all(off == 0))
