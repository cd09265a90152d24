"""Line-oriented text formats for collections, weights, groups, graphs and certificates.

Every format starts with a ``<KIND> v1`` header, ignores ``#`` comments and
blank lines, and separates fields by whitespace.  Floats are written with 17
significant digits so that emit followed by parse is the identity.
"""

from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .connectivity import AlphaMinimalCertificate, certificate_from_witnesses
from .errors import DimensionMismatch, ParseError, PreconditionError
from .groups import FiniteGroup, GeneratorSet, GroupAction, from_table
from .instances import Graph
from .psd_core import PsdCollection, WeightVector


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


class _Lines:
    """Token lines of a file with their 1-based line numbers, comments stripped."""

    def __init__(self, text: str):
        self.items = []
        for no, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].split()
            if body:
                self.items.append((no, body))
        self.pos = 0

    def next(self, what: str):
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 1
            raise ParseError(f"unexpected end of file, expected {what}", last)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else None

    def header(self, kind: str):
        no, toks = self.next(f"{kind} header")
        if toks != [kind, "v1"]:
            raise ParseError(f"expected header '{kind} v1'", no)

    def keyword(self, key: str, count: int = 1):
        no, toks = self.next(key)
        if toks[0] != key or len(toks) != count + 1:
            raise ParseError(f"expected '{key}' followed by {count} value(s)", no)
        return no, toks[1:]

    def keyword_int(self, key: str) -> int:
        no, (v,) = self.keyword(key)
        return _int(v, no)

    def end(self):
        if self.pos < len(self.items):
            raise ParseError("trailing content", self.items[self.pos][0])


def _int(tok, no) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", no) from None


def _float(tok, no) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", no) from None


def _floats(toks, no, n):
    if len(toks) != n:
        raise ParseError(f"expected {n} values, got {len(toks)}", no)
    return [_float(t, no) for t in toks]


def _ints(toks, no, n=None):
    if n is not None and len(toks) != n:
        raise ParseError(f"expected {n} values, got {len(toks)}", no)
    return [_int(t, no) for t in toks]


def _read(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text()
    return source.read()


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# PSDC

def parse_psdc(source) -> PsdCollection:
    L = _Lines(_read(source))
    L.header("PSDC")
    n = L.keyword_int("dim")
    r = L.keyword_int("count")
    if n < 1 or r < 1:
        raise ParseError("dim and count must be positive", L.items[L.pos - 1][0])
    mats = []
    for i in range(r):
        no, toks = L.keyword("matrix")
        if _int(toks[0], no) != i:
            raise ParseError(f"expected 'matrix {i}'", no)
        M = np.empty((n, n))
        for row in range(n):
            rno, rtoks = L.next(f"row {row} of matrix {i}")
            if len(rtoks) != n:
                raise DimensionMismatch(f"line {rno}: row has {len(rtoks)} entries, expected {n}")
            M[row] = _floats(rtoks, rno, n)
        mats.append(M)
    L.end()
    return PsdCollection(mats)


def emit_psdc(collection: PsdCollection, target=None) -> str:
    out = io.StringIO()
    out.write("PSDC v1\n")
    out.write(f"dim {collection.dim}\ncount {collection.r}\n")
    for i in range(collection.r):
        out.write(f"matrix {i}\n")
        for row in collection[i]:
            out.write(" ".join(fmt_float(x) for x in row) + "\n")
    return _finish(out.getvalue(), target)


def _finish(text, target):
    if target is None:
        return text
    if isinstance(target, (str, os.PathLike)):
        atomic_write(target, text)
    else:
        target.write(text)
    return text


# WEIGHTS

def parse_weights(source) -> WeightVector:
    L = _Lines(_read(source))
    L.header("WEIGHTS")
    r = L.keyword_int("count")
    entries = {}
    last = -1
    while L.peek() is not None:
        no, toks = L.next("weight entry")
        if len(toks) != 2:
            raise ParseError("expected '<index> <weight>'", no)
        i, w = _int(toks[0], no), _float(toks[1], no)
        if i <= last:
            raise ParseError("indices must be strictly ascending", no)
        if not 0 <= i < r:
            raise ParseError(f"index {i} outside [0, {r})", no)
        if not w > 0 or not np.isfinite(w):
            raise ParseError("weights must be positive and finite", no)
        entries[i] = w
        last = i
    return WeightVector(r, entries)


def emit_weights(weights: WeightVector, target=None) -> str:
    lines = ["WEIGHTS v1", f"count {weights.size}"]
    lines += [f"{i} {fmt_float(w)}" for i, w in sorted(weights.entries.items())]
    return _finish("\n".join(lines) + "\n", target)


# GROUP

def parse_group(source) -> FiniteGroup:
    """Table groups, or direct sums of cyclic groups via a ``factors`` line."""
    L = _Lines(_read(source))
    L.header("GROUP")
    N = L.keyword_int("order")
    ident = L.keyword_int("identity")
    no, toks = L.next("'table' or 'factors'")
    if toks[0] == "factors":
        factors = _ints(toks[1:], no)
        L.end()
        if ident != 0:
            raise ParseError("direct-sum groups have identity 0", no)
        try:
            return FiniteGroup(N, factors=factors)
        except Exception as exc:
            raise ParseError(str(exc), no) from exc
    if toks != ["table"]:
        raise ParseError("expected 'table' or 'factors'", no)
    rows = []
    for g in range(N):
        rno, rtoks = L.next(f"table row {g}")
        rows.append(_ints(rtoks, rno, N))
    L.end()
    return from_table(np.array(rows, dtype=np.int64).reshape(N, N), identity=ident)


def emit_group(group: FiniteGroup, target=None) -> str:
    lines = ["GROUP v1", f"order {group.order}", f"identity {group.identity}"]
    if group.factors is not None and group.order > 64:
        lines.append("factors " + " ".join(str(k) for k in group.factors))
    else:
        lines.append("table")
        lines += [" ".join(str(int(x)) for x in row) for row in group.mul]
    return _finish("\n".join(lines) + "\n", target)


# GENS

def parse_gens(source, group: FiniteGroup) -> GeneratorSet:
    L = _Lines(_read(source))
    L.header("GENS")
    no, toks = L.next("generator list")
    els = _ints(toks, no)
    weights = None
    nxt = L.peek()
    if nxt is not None:
        wno, wtoks = L.next("weights")
        if wtoks[0] != "weights":
            raise ParseError("expected 'weights' line", wno)
        vals = wtoks[1:]
        if not vals:
            wno, vals = L.next("weight values")
        weights = dict(zip(els, _floats(vals, wno, len(els))))
    L.end()
    if len(set(els)) != len(els):
        raise ParseError("duplicate generator", no)
    if any(not 0 <= s < group.order for s in els):
        raise ParseError("generator index outside the group", no)
    return GeneratorSet(group, tuple(els), weights)


def emit_gens(genset: GeneratorSet, target=None) -> str:
    lines = ["GENS v1", " ".join(str(s) for s in genset.elements)]
    if genset.weights is not None:
        lines.append("weights " + " ".join(fmt_float(genset.weights[s]) for s in genset.elements))
    return _finish("\n".join(lines) + "\n", target)


# GRAPH

def parse_graph(source) -> Graph:
    L = _Lines(_read(source))
    L.header("GRAPH")
    n = L.keyword_int("vertices")
    m = L.keyword_int("edges")
    edges = []
    for _ in range(m):
        no, toks = L.next("edge")
        if len(toks) not in (2, 3):
            raise ParseError("expected 'u v [w]'", no)
        u, v = _int(toks[0], no), _int(toks[1], no)
        w = _float(toks[2], no) if len(toks) == 3 else 1.0
        if u == v:
            raise ParseError(f"self-loop at vertex {u}", no)
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError("vertex index out of range", no)
        if not (w >= 0 and np.isfinite(w)):
            raise ParseError("edge weight must be finite and non-negative", no)
        edges.append((u, v, w))
    L.end()
    return Graph(n, tuple(edges))


def emit_graph(graph: Graph, target=None) -> str:
    lines = ["GRAPH v1", f"vertices {graph.n}", f"edges {graph.m}"]
    for u, v, w in graph.edges:
        lines.append(f"{u} {v}" if w == 1.0 else f"{u} {v} {fmt_float(w)}")
    return _finish("\n".join(lines) + "\n", target)


# ACTION

def parse_action(source) -> GroupAction:
    L = _Lines(_read(source))
    L.header("ACTION")
    P = L.keyword_int("points")
    d = L.keyword_int("gens")
    perms = []
    for i in range(d):
        no, toks = L.next(f"permutation {i}")
        p = _ints(toks, no, P)
        if sorted(p) != list(range(P)):
            raise ParseError(f"line is not a permutation of 0..{P - 1}", no)
        perms.append(p)
    L.end()
    ar = np.arange(P)
    inv = [bool(np.array_equal(np.asarray(p)[p], ar)) for p in perms]
    return GroupAction(P, perms, involutions=inv)


def emit_action(action: GroupAction, target=None) -> str:
    lines = ["ACTION v1", f"points {action.points}", f"gens {len(action.perms)}"]
    lines += [" ".join(str(int(x)) for x in p) for p in action.perms]
    return _finish("\n".join(lines) + "\n", target)


# CERT: witness certificate for alpha-minimality of a subset of a PSDC collection

def parse_cert(source) -> dict:
    """Returns {'alpha', 'dim', 'subset', 'witnesses'}; bind to a collection with :func:`bind_cert`."""
    L = _Lines(_read(source))
    L.header("CERT")
    _, (a,) = L.keyword("alpha")
    alpha = _float(a, L.items[L.pos - 1][0])
    n = L.keyword_int("dim")
    no, toks = L.next("subset")
    if toks[0] != "subset":
        raise ParseError("expected 'subset'", no)
    subset = _ints(toks[1:], no)
    witnesses = {}
    for i in subset:
        wno, wt = L.keyword("witness")
        if _int(wt[0], wno) != i:
            raise ParseError(f"expected 'witness {i}'", wno)
        vno, vals = L.next("witness vector")
        witnesses[i] = np.array(_floats(vals, vno, n))
    L.end()
    return {"alpha": alpha, "dim": n, "subset": subset, "witnesses": witnesses}


def emit_cert(cert: AlphaMinimalCertificate, target=None) -> str:
    if cert.witnesses is None:
        raise PreconditionError("certificate has no explicit witness vectors")
    subset = list(cert.subset)
    dim = len(next(iter(cert.witnesses.values()))) if subset else 0
    lines = ["CERT v1", f"alpha {fmt_float(cert.alpha)}", f"dim {dim}",
             "subset" + "".join(f" {i}" for i in subset)]
    for i in subset:
        lines.append(f"witness {i}")
        lines.append(" ".join(fmt_float(x) for x in cert.witnesses[i]))
    return _finish("\n".join(lines) + "\n", target)


def bind_cert(data: dict, collection: PsdCollection) -> AlphaMinimalCertificate:
    if data["dim"] != collection.dim:
        raise DimensionMismatch("certificate dimension differs from the collection")
    subset = data["subset"]
    if any(not 0 <= i < collection.r for i in subset):
        raise DimensionMismatch("certificate subset index outside the collection")
    ops = [collection[i] for i in subset]
    return certificate_from_witnesses(data["alpha"], subset, data["witnesses"], ops)


def sniff(path) -> str:
    """First token of the first non-comment line (the format kind)."""
    for raw in Path(path).read_text().splitlines():
        toks = raw.split("#", 1)[0].split()
        if toks:
            return toks[0]
    return ""

