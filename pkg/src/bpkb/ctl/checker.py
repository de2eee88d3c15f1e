"""Explicit-state CTL evaluation over maximal paths.

Satisfaction sets are boolean arrays over the graph's states, memoized per
subformula.  Elementary properties go through :func:`enactment.holds`.
"""
from __future__ import annotations


import numpy as np

from .. import formula as F
from ..enactment import Context, KripkeGraph, holds
from ..formula import FALSE_FLUENT, Var
from . import _kernels
from .nf import HoldsLit, validate_nf


class NFRejected(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("query rejected: " + "; ".join(map(str, report.reasons)))


class Checker:
    def __init__(self, graph: KripkeGraph, ctx: Context, backend: str | None = None):
        self.graph = graph
        self.ctx = ctx
        self.n = len(graph.states)
        self.arrays = graph.csr()
        self.ex, self.eu, self.eg = _kernels.backend(backend)
        self.memo: dict = {}

    def sat(self, f: F.Formula) -> np.ndarray:
        r = self.memo.get(f)
        if r is not None:
            return r
        if not F.is_ground(f):
            raise ValueError(f"formula has free variables: {F.to_text(f, 'query')}")
        sp, si, pp, pi = self.arrays
        if isinstance(f, F.Top):
            r = np.ones(self.n, dtype=np.bool_)
        elif isinstance(f, F.Bottom):
            r = np.fromiter((FALSE_FLUENT in self.ctx.tf_closure(s) for s in self.graph.states),
                            dtype=np.bool_, count=self.n)
        elif isinstance(f, (F.Atom, F.Final)):
            r = np.fromiter((holds(f, s, self.ctx) for s in self.graph.states), dtype=np.bool_, count=self.n)
        elif isinstance(f, F.Not):
            r = ~self.sat(f.arg)
        elif isinstance(f, F.And):
            r = self.sat(f.left) & self.sat(f.right)
        elif isinstance(f, F.EX):
            r = self.ex(self.sat(f.arg), sp, si)
        elif isinstance(f, F.EU):
            r = self.eu(self.sat(f.left), self.sat(f.right), sp, si, pp, pi)
        elif isinstance(f, F.EG):
            r = self.eg(self.sat(f.arg), sp, si, pp, pi)
        else:
            raise TypeError(f"not a formula: {f!r}")
        self.memo[f] = r
        return r


def checker_for(graph: KripkeGraph, ctx: Context) -> Checker:
    cache = graph.__dict__.setdefault("_checkers", {})
    c = cache.get(id(ctx))
    if c is None:
        c = cache[id(ctx)] = Checker(graph, ctx)
    return c


def eval(f: F.Formula, graph: KripkeGraph, s: int, ctx: Context) -> bool:  # noqa: A001
    return bool(checker_for(graph, ctx).sat(f)[s])


def candidate_bindings(f: F.Formula, graph: KripkeGraph, ctx: Context, theta: dict | None = None) -> list[dict]:
    """Bindings for the variables of ``f`` suggested by its grounding fluents:
    each grounding fluent must unify with something holding in some state."""
    from ..enactment import _unify

    theta = theta or {}
    labels = None
    partials = []
    for a in F.grounding_atoms(F.substitute(f, theta)):
        if isinstance(a, F.Final):
            if isinstance(a.process, Var):
                partials.append([{a.process: p} for p in ctx.schema.process_ids])
            continue
        if not F.fluent_vars(a.fluent):
            continue
        if labels is None:
            labels = set()
            for s in graph.states:
                labels |= ctx.label(s)
        found = {tuple(sorted(t.items(), key=lambda kv: kv[0].name))
                 for fl in labels if (t := _unify(a.fluent, fl, {})) is not None}
        partials.append([dict(t) for t in sorted(found, key=repr)])
    out = [dict(theta)]
    for options in partials:
        nxt = []
        for base in out:
            for opt in options:
                if all(base.get(v, c) == c for v, c in opt.items()):
                    nxt.append({**base, **opt})
        out = nxt
    uniq = {tuple(sorted(t.items(), key=lambda kv: kv[0].name)): t for t in out}
    return list(uniq.values())


def eval_open(f: F.Formula, graph: KripkeGraph, s: int, ctx: Context, theta: dict | None = None) -> list[dict]:
    """All substitutions for the free variables of ``f`` that make it hold at ``s``."""
    theta = theta or {}
    g = F.substitute(f, theta)
    report = validate_nf([HoldsLit(g, graph.process)])
    if not report.accepted:
        raise NFRejected(report)
    if F.is_ground(g):
        return [dict(theta)] if eval(g, graph, s, ctx) else []
    out = []
    for t in candidate_bindings(g, graph, ctx, theta):
        if F.variables(F.substitute(g, t)):
            continue
        if eval(F.substitute(g, t), graph, s, ctx):
            out.append(t)
    return sorted(out, key=lambda t: sorted((v.name, c) for v, c in t.items()))
