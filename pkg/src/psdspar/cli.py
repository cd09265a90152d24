"""Command-line interface: ``psdspar <command> ...``.

Exit codes: 0 on verified success, 2 when a verification fails, 1 on usage,
parse or precondition errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import formats
from .cayley import cayley_sparsify, certify_domination, find_relation, weighted_cayley_sparsify
from .connectivity import (
    DEFAULT_SUBSET_CAP,
    alpha_eps,
    connectivity_parameter,
    verify_unsparsifiable,
)
from .errors import ExhaustedAttempts, PsdSparError
from .groups import GeneratorSet, boolean_cube, cyclic, weighted_laplacian_dense
from .instances import (
    complete_graph,
    cycle_graph,
    graph_edge_collection,
    path_graph,
    schreier_unsparsifiable,
)
from .linalg import check_eps_approx
from .psd_core import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_SAMPLING_CONSTANT,
    PsdCollection,
    normalize,
    sparsify,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Report:
    """Ordered key: value fields plus an optional (index, leverage, weight) table."""

    def __init__(self, command: str):
        self.fields: list[tuple[str, object]] = [("command", command)]
        self.rows: list[tuple[int, float, float]] = []

    def add(self, key, value):
        self.fields.append((key, value))

    @staticmethod
    def _fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return formats.fmt_float(v)
        if isinstance(v, (list, tuple)):
            return " ".join(Report._fmt(x) for x in v)
        return str(v)

    def text(self) -> str:
        lines = [f"{k}: {self._fmt(v)}" for k, v in self.fields]
        if self.rows:
            lines += ["", "index\tleverage\tweight"]
            lines += [f"{i}\t{formats.fmt_float(l)}\t{formats.fmt_float(w)}" for i, l, w in self.rows]
        return "\n".join(lines) + "\n"

    def json(self) -> str:
        def conv(v):
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.floating,)):
                return float(v)
            if isinstance(v, tuple):
                return list(v)
            return v
        return json.dumps({k: conv(v) for k, v in self.fields}, indent=1, sort_keys=False) + "\n"


def _emit(report: Report, args):
    if getattr(args, "report", None):
        formats.atomic_write(args.report, report.text())
    if getattr(args, "json_report", None):
        formats.atomic_write(args.json_report, report.json())
    if not args.quiet:
        sys.stdout.write(report.text())


def _thread_limits():
    """Cap BLAS threads from PSDSPAR_THREADS (0 or unset = library default)."""
    raw = os.environ.get("PSDSPAR_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise PsdSparError(f"PSDSPAR_THREADS must be an integer, got {raw!r}") from None
    if n > 0:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=n)
    return contextlib.nullcontext()


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _eps(text: str) -> float:
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1]")
    return v


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


# commands

def cmd_sparsify(args) -> int:
    coll = formats.parse_psdc(args.psdc)
    rep = Report("sparsify")
    try:
        res = sparsify(coll, args.eps, args.seed, args.max_attempts, args.constant)
    except ExhaustedAttempts as exc:
        rep.add("verified", False)
        rep.add("error", str(exc))
        _emit(rep, args)
        return EXIT_FAIL
    if args.out:
        formats.emit_weights(res.weights, args.out)
    for key in ("eps", "seed", "attempts", "support_size", "verified_margin", "leverage_sum",
                "sampling_constant", "restricted_dim"):
        rep.add(key, getattr(res, key))
    rep.add("count", coll.r)
    rep.add("expected_support", float(res.probabilities.sum()))
    rep.add("verified", True)
    w = res.weights.to_dense()
    rep.rows = [(i, float(res.norms[i]), float(w[i])) for i in range(coll.r)]
    _emit(rep, args)
    return EXIT_OK


def _gens(args):
    G = formats.parse_group(args.group)
    return formats.parse_gens(args.gens, G)


def _cayley_report(name, S: GeneratorSet, res, args):
    rep = Report(name)
    rep.add("order", S.group.order)
    rep.add("generators", len(S))
    for key in ("eps", "seed", "attempts", "support_size", "raw_support_size", "verified_margin",
                "leverage_sum", "sampling_constant", "restricted_dim"):
        rep.add(key, getattr(res, key))
    rep.add("buckets", len(res.buckets))
    rep.add("verified", True)
    w = res.weights.entries
    rep.rows = [(s, float(res.norms.get(s, 0.0)), float(w.get(s, 0.0))) for s in S.elements]
    return rep


def cmd_cayley(args, weighted=False) -> int:
    S = _gens(args)
    fn = weighted_cayley_sparsify if weighted else cayley_sparsify
    name = "cayley-weighted" if weighted else "cayley"
    try:
        res = fn(S, args.eps, args.seed, args.max_attempts, args.constant, args.method)
    except ExhaustedAttempts as exc:
        rep = Report(name)
        rep.add("verified", False)
        rep.add("error", str(exc))
        _emit(rep, args)
        return EXIT_FAIL
    if args.out:
        formats.emit_weights(res.weights, args.out)
    _emit(_cayley_report(name, S, res, args), args)
    return EXIT_OK


def _connparam(name, coll, alpha, args) -> int:
    res = connectivity_parameter(coll, alpha, args.subset_cap, args.max_size)
    rep = Report(name)
    if getattr(args, "eps", None) is not None:
        rep.add("eps", args.eps)
    rep.add("alpha", alpha)
    rep.add("value", res.value)
    rep.add("exhaustive", res.exhaustive)
    rep.add("queries", res.queries)
    rep.add("subset", list(res.largest_minimal_subset.subset))
    cert = res.largest_minimal_subset
    if cert.subset:
        rep.add("min_witness_margin", float(cert.margins().min()))
    if args.cert_out:
        formats.emit_cert(cert, args.cert_out)
    _emit(rep, args)
    return EXIT_OK


def cmd_connparam(args) -> int:
    return _connparam("connparam", formats.parse_psdc(args.psdc), args.alpha, args)


def cmd_threshold(args) -> int:
    return _connparam("threshold", formats.parse_psdc(args.psdc), alpha_eps(args.eps), args)


def cmd_verify(args) -> int:
    rep = Report("verify")
    rep.add("eps", args.eps)
    if args.cert:
        if not args.psdc:
            raise PsdSparError("--cert needs --psdc")
        coll = formats.parse_psdc(args.psdc)
        cert = formats.bind_cert(formats.parse_cert(args.cert), coll)
        ok = verify_unsparsifiable(cert, args.eps)
        rep.add("kind", "certificate")
        rep.add("alpha", cert.alpha)
        rep.add("alpha_eps", alpha_eps(args.eps))
        rep.add("subset", list(cert.subset))
        rep.add("min_witness_margin", float(cert.margins(alpha_eps(args.eps)).min())
                if cert.subset else 0.0)
        rep.add("verified", ok)
        _emit(rep, args)
        return EXIT_OK if ok else EXIT_FAIL
    if not args.weights:
        raise PsdSparError("verify needs --weights or --cert")
    weights = formats.parse_weights(args.weights)
    if args.group:
        S = _gens(args)
        if weights.size != S.group.order:
            raise PsdSparError("weights count must equal the group order")
        A = weighted_laplacian_dense(S.group, {s: S.weight(s) for s in S.elements})
        Ap = weighted_laplacian_dense(S.group, weights.entries)
        rep.add("kind", "cayley-weights")
        rows = []
    else:
        coll = formats.parse_psdc(args.psdc)
        if weights.size != coll.r:
            raise PsdSparError("weights count must equal the collection size")
        A, Ap = coll.total(), coll.weighted_sum(weights.entries)
        rep.add("kind", "weights")
        norms = normalize(coll).norms
        dense = weights.to_dense()
        rows = [(i, float(norms[i]), float(dense[i])) for i in range(coll.r)]
    ok, margin = check_eps_approx(Ap, A, args.eps)
    rep.add("support_size", weights.support_size)
    rep.add("verified_margin", margin)
    rep.add("verified", ok)
    rep.rows = rows
    _emit(rep, args)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_relation(args) -> int:
    G = formats.parse_group(args.group)
    if args.elements:
        T = _ints(args.elements)
    else:
        size = args.size or (math.ceil(math.log2(G.order)) + 1)
        rng = np.random.Generator(np.random.Philox(args.seed))
        T = sorted(int(x) for x in rng.choice(G.order, size=size, replace=False))
    s, rel = find_relation(G, T)
    alpha = args.alpha if args.alpha is not None else 1.0 / (8 * len(T))
    ok, lam_min = certify_domination(G, T, s, rel, alpha)
    rep = Report("relation")
    rep.add("T", T)
    rep.add("target", s)
    rep.add("factors", list(rel.factors))
    rep.add("length", rel.length)
    rep.add("alpha", alpha)
    rep.add("domination_margin", lam_min)
    rep.add("verified", ok)
    _emit(rep, args)
    return EXIT_OK if ok else EXIT_FAIL


def _rank1_collection(dim, count, seed) -> PsdCollection:
    rng = np.random.Generator(np.random.Philox(seed))
    V = rng.standard_normal((count, dim))
    return PsdCollection(V[:, :, None] * V[:, None, :])


def cmd_gen(args) -> int:
    fam = args.family
    rep = Report("gen")
    rep.add("family", fam)
    written = []

    def out(kind, path, text_fn):
        if path:
            text_fn(path)
            written.append(path)

    if fam in ("path", "cycle", "complete"):
        g = {"path": path_graph, "cycle": cycle_graph, "complete": complete_graph}[fam](args.n)
        out("graph", args.graph, lambda p: formats.emit_graph(g, p))
        out("psdc", args.psdc, lambda p: formats.emit_psdc(graph_edge_collection(g), p))
        rep.add("vertices", g.n)
        rep.add("edges", g.m)
    elif fam == "rank1":
        coll = _rank1_collection(args.dim, args.count, args.seed)
        out("psdc", args.psdc, lambda p: formats.emit_psdc(coll, p))
        rep.add("dim", args.dim)
        rep.add("count", args.count)
        rep.add("seed", args.seed)
    elif fam in ("cyclic", "cube"):
        G = cyclic(args.n) if fam == "cyclic" else boolean_cube(args.n)
        els = [g for g in range(G.order) if g != G.identity]
        weights = None
        if args.weighted:
            # symmetric weights: circular distance for Z_N, popcount for the cube
            weights = {s: float(min(s, G.order - s)) if fam == "cyclic" else float(bin(s).count("1"))
                       for s in els}
        S = GeneratorSet(G, tuple(els), weights)
        out("group", args.group, lambda p: formats.emit_group(G, p))
        out("gens", args.gens, lambda p: formats.emit_gens(S, p))
        rep.add("order", G.order)
        rep.add("generators", len(S))
    elif fam == "schreier":
        inst = schreier_unsparsifiable(args.n)
        out("action", args.action, lambda p: formats.emit_action(inst.action, p))
        out("psdc", args.psdc, lambda p: formats.emit_psdc(inst.collection(), p))
        out("cert", args.cert, lambda p: formats.emit_cert(inst.certificate(), p))
        rep.add("points", inst.points)
        rep.add("matchings", len(inst.matchings))
    else:  # pragma: no cover - argparse restricts the choices
        raise PsdSparError(f"unknown family {fam}")
    rep.add("written", written)
    _emit(rep, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psdspar", description="Sparsification of PSD matrix sums and Cayley graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, report=True):
        if report:
            sp.add_argument("--report", help="write the text report here")
            sp.add_argument("--json-report", help="write a flat JSON rendering of the report")
        sp.add_argument("--quiet", action="store_true", help="do not print the report")

    def sampling(sp):
        sp.add_argument("--eps", type=_eps, required=True)
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--max-attempts", type=int, default=DEFAULT_MAX_ATTEMPTS)
        sp.add_argument("--constant", type=float, default=DEFAULT_SAMPLING_CONSTANT,
                        help="sampling constant c in R = eps^2 / (c ln 4m)")
        sp.add_argument("--out", help="weights file to write")

    sp = sub.add_parser("sparsify", help="leverage-score sparsifier of a PSDC collection")
    sp.add_argument("psdc")
    sampling(sp)
    common(sp)
    sp.set_defaults(func=cmd_sparsify)

    for name, weighted in (("cayley", False), ("cayley-weighted", True)):
        sp = sub.add_parser(name, help="sparsify a Cayley graph by sampling generators")
        sp.add_argument("group")
        sp.add_argument("gens")
        sampling(sp)
        sp.add_argument("--method", choices=["auto", "dense", "characters"], default="auto")
        common(sp)
        sp.set_defaults(func=lambda a, w=weighted: cmd_cayley(a, w))

    sp = sub.add_parser("connparam", help="brute-force connectivity parameter N(alpha)")
    sp.add_argument("psdc")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--subset-cap", type=int, default=DEFAULT_SUBSET_CAP)
    sp.add_argument("--max-size", type=int)
    sp.add_argument("--cert-out", help="write the witness certificate here")
    common(sp)
    sp.set_defaults(func=cmd_connparam)

    sp = sub.add_parser("threshold", help="connectivity threshold N*_eps = N(alpha_eps)")
    sp.add_argument("psdc")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--subset-cap", type=int, default=DEFAULT_SUBSET_CAP)
    sp.add_argument("--max-size", type=int)
    sp.add_argument("--cert-out")
    common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("gen", help="generate instance files")
    sp.add_argument("family", choices=["path", "cycle", "complete", "rank1", "cyclic", "cube",
                                       "schreier"])
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--dim", type=int, default=32)
    sp.add_argument("--count", type=int, default=500)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--weighted", action="store_true")
    for opt in ("psdc", "graph", "group", "gens", "action", "cert"):
        sp.add_argument(f"--{opt}")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("verify", help="check weights (eps-sandwich) or a witness certificate")
    sp.add_argument("--psdc")
    sp.add_argument("--group")
    sp.add_argument("--gens")
    sp.add_argument("--weights")
    sp.add_argument("--cert")
    sp.add_argument("--eps", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("relation", help="subset-product relation and domination check")
    sp.add_argument("group")
    sp.add_argument("--elements", help="the subset T, whitespace or comma separated")
    sp.add_argument("--size", type=int)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--alpha", type=float)
    common(sp)
    sp.set_defaults(func=cmd_relation)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limits():
            return int(args.func(args))
    except (PsdSparError, OSError, ValueError) as exc:
        print(f"psdspar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
