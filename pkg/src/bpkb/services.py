"""Verification properties, retrieval and trace services over a loaded BPKB."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

from . import formula as F
from .annotation import AnnotationSet, parse_annotations
from .ctl import Disj, HoldsLit, Lit, NegGroup, NFRejected, checker_for, eval_open, validate_nf
from .enactment import Action, Context, KripkeGraph, default_budget, holds, initial_state, state_space, successors
from .formula import Var
from .model import ACTIVITY_KINDS, ELEMENT_KINDS, EVENT_KINDS, GATEWAY_KINDS, FLOW_KINDS, ProcessSchema, \
    hierarchical_reachable, n_reachable, parse_process_facts, seq_plus
from .ontology import RDF_TYPE, load_triples


class KnowledgeBase:
    """A context plus lazily built state spaces, one per top-level process."""

    def __init__(self, ctx: Context, budget: int | None = None):
        self.ctx = ctx
        self.budget = default_budget() if budget is None else budget
        self._graphs: dict[str, KripkeGraph] = {}
        self._rel: dict = {}

    @classmethod
    def from_texts(cls, bps: str, triples: str = "", ann: str = "", budget: int | None = None) -> "KnowledgeBase":
        schema = parse_process_facts(bps)
        store = load_triples(triples)
        annotations = parse_annotations(ann, schema, store) if ann else AnnotationSet()
        return cls(Context(schema, store, annotations), budget)

    @classmethod
    def from_files(cls, bps, triples=None, ann=None, budget=None) -> "KnowledgeBase":
        read = lambda p: Path(p).read_text(encoding="utf-8") if p else ""
        return cls.from_texts(read(bps), read(triples), read(ann), budget)

    @property
    def schema(self) -> ProcessSchema:
        return self.ctx.schema

    def graph(self, p: str) -> KripkeGraph:
        root = self.schema.root_process(p)
        g = self._graphs.get(root)
        if g is None:
            g = self._graphs[root] = state_space(root, self.ctx, self.budget)
        return g


@dataclass
class Verdict:
    holds: bool
    witness: list | None = None     # [(state index, action or None), ...]
    bindings: list | None = None    # [{var: constant}, ...]

    def to_json(self, graph: KripkeGraph | None = None) -> dict:
        out: dict = {"holds": self.holds}
        if self.witness is not None:
            out["witness"] = [{"state": i, "action": str(a) if a else None} for i, a in self.witness]
        if self.bindings is not None:
            out["bindings"] = [binding_json(t) for t in self.bindings]
        return out


def binding_json(theta: dict) -> dict:
    return {v.name if isinstance(v, Var) else str(v): c for v, c in sorted(theta.items(), key=lambda kv: repr(kv[0]))}


def shortest_path(graph: KripkeGraph, targets) -> list | None:
    """Shortest path from the initial state to some state in ``targets``,
    as (state, action taken to reach it) pairs."""
    targets = set(targets)
    parent = {graph.initial: None}
    todo = deque([graph.initial])
    while todo:
        i = todo.popleft()
        if i in targets:
            path = []
            while i is not None:
                prev = parent[i]
                path.append((i, prev[1] if prev else None))
                i = prev[0] if prev else None
            return path[::-1]
        for a, j in graph.succ(i):
            if j not in parent:
                parent[j] = (i, a)
                todo.append(j)
    return None


def option_to_complete(p: str, kb: KnowledgeBase) -> Verdict:
    g = kb.graph(p)
    sat = checker_for(g, kb.ctx).sat(F.EF(F.Final(p)))
    ok = bool(sat.all())
    if ok:
        return Verdict(True)
    # prefer ending at a stuck state; a divergent run has none to point at
    final = checker_for(g, kb.ctx).sat(F.Final(p))
    stuck = [i for i in g.sinks if not final[i]]
    return Verdict(False, shortest_path(g, stuck) or shortest_path(g, [i for i in range(len(g)) if not sat[i]]))


def inconsistency(p: str, kb: KnowledgeBase) -> Verdict:
    g = kb.graph(p)
    c = checker_for(g, kb.ctx)
    bad = c.sat(F.FALSE)
    found = bool(c.sat(F.EF(F.FALSE))[g.initial])
    return Verdict(found, shortest_path(g, [i for i in range(len(g)) if bad[i]]) if found else None)


def non_executable_activities(p: str, kb: KnowledgeBase) -> set[str]:
    """Activities that control flow reaches but that cannot begin there."""
    g = kb.graph(p)
    c = checker_for(g, kb.ctx)
    sch = kb.schema
    root = sch.root_process(p)
    out = set()
    procs = [q for q in sch.process_ids if _root_or_none(sch, q) == root]
    for q in procs:
        for a in sorted(sch.nodes.get(q, ())):
            if sch.kind(a) not in ACTIVITY_KINDS:
                continue
            for x in sch.predecessors(a, q):
                f = F.EF(F.And(F.cf(x, a, q), F.Not(F.EX(F.en(a, q)))))
                if c.sat(f)[g.initial]:
                    out.add(a)
                    break
    return out


def _root_or_none(sch: ProcessSchema, q: str):
    try:
        return sch.root_process(q)
    except KeyError:
        return None


def compliance(p: str, f: F.Formula, kb: KnowledgeBase) -> Verdict:
    """Check a violation pattern ``f`` at the initial state: the rule is
    enforced (``holds``) when no binding satisfies ``f``; the satisfying
    bindings are the counter-witnesses."""
    g = kb.graph(p)
    bindings = eval_open(f, g, g.initial, kb.ctx)
    return Verdict(not bindings, None, bindings)


# --- retrieval -------------------------------------------------------------------


def _relation(kb: KnowledgeBase, pred: str, arity: int) -> set | None:
    key = (pred, arity)
    if key in kb._rel:
        return kb._rel[key]
    sch, ctx = kb.schema, kb.ctx
    rel = None
    if arity == 1 and pred in ELEMENT_KINDS:
        rel = {(el,) for el, ks in sch.kinds.items() if pred in ks}
    elif arity == 1 and pred in ("activity", "event", "gateway", "element"):
        kinds = {"activity": ACTIVITY_KINDS, "event": EVENT_KINDS, "gateway": GATEWAY_KINDS,
                 "element": FLOW_KINDS}[pred]
        rel = {(el,) for el, ks in sch.kinds.items() if ks & kinds}
    elif pred == "bp" and arity == 3:
        rel = set(sch.processes)
    elif pred == "comp_act" and arity == 3:
        rel = set(sch.compound)
    elif pred in ("seq", "exception", "input", "output", "assigned") and arity == 3:
        rel = set(getattr(sch, {"seq": "seq", "exception": "exceptions", "input": "inputs",
                                "output": "outputs", "assigned": "assignments"}[pred]))
    elif pred in ("seq_plus", "reachable") and arity == 3:
        rel = set()
        for p in sch.process_ids:
            for x in sch.nodes.get(p, ()):
                targets = {y for q in sch.process_ids for y in sch.nodes.get(q, ())}
                for y in targets:
                    ok = (y in sch.nodes[p] and seq_plus(x, y, p, sch)) if pred == "seq_plus" \
                        else hierarchical_reachable(x, y, p, sch)
                    if ok:
                        rel.add((x, y, p))
    elif pred == "sigma" and arity == 2:
        rel = set()
        for t in ctx.annotations.terms:
            rel.add((t.element, t.concept))
            for c in ctx.tbox.sup.get(t.concept, ()):
                rel.add((t.element, c))
    elif pred == "t" and arity == 3:
        rel = {t for t in ctx.store.derived if not isinstance(t[2], tuple)}
    if rel is not None:
        kb._rel[key] = rel
    return rel


def _solve_lit(lit: Lit, theta: dict, kb: KnowledgeBase):
    args = tuple(theta.get(a, a) if isinstance(a, Var) else a for a in lit.args)
    if lit.pred == "=":
        a, b = args
        if isinstance(a, Var) and isinstance(b, Var):
            raise ValueError("equality between two unbound variables")
        if isinstance(a, Var):
            yield {**theta, a: b}
        elif isinstance(b, Var):
            yield {**theta, b: a}
        elif a == b:
            yield theta
        return
    if lit.pred == "n_reachable" and len(args) == 4 and not any(isinstance(a, Var) for a in args):
        if n_reachable(*args, kb.schema):
            yield theta
        return
    rel = _relation(kb, lit.pred, len(args))
    if rel is None:
        raise ValueError(f"unknown predicate {lit.pred}/{len(args)}")
    if not any(isinstance(a, Var) for a in args):
        if args in rel:
            yield theta
        return
    for fact in sorted(rel, key=repr):
        t = dict(theta)
        ok = True
        for a, c in zip(args, fact):
            if isinstance(a, Var):
                if t.setdefault(a, c) != c:
                    ok = False
                    break
            elif a != c:
                ok = False
                break
        if ok:
            yield t


def _solve(items, theta: dict, kb: KnowledgeBase):
    if not items:
        yield theta
        return
    it, rest = items[0], items[1:]
    if isinstance(it, Lit):
        if it.positive:
            for t in _solve_lit(it, theta, kb):
                yield from _solve(rest, t, kb)
        elif next(_solve_lit(Lit(it.pred, it.args), theta, kb), None) is None:
            yield from _solve(rest, theta, kb)
    elif isinstance(it, HoldsLit):
        p = theta.get(it.process, it.process) if isinstance(it.process, Var) else it.process
        g = kb.graph(p)
        f = F.substitute(it.formula, theta)
        if it.positive:
            for t in eval_open(f, g, g.initial, kb.ctx):
                yield from _solve(rest, {**theta, **t}, kb)
        elif not eval_open(f, g, g.initial, kb.ctx):
            yield from _solve(rest, theta, kb)
    elif isinstance(it, Disj):
        seen = set()
        for branch in it.branches:
            for t in _solve(tuple(branch), theta, kb):
                key = tuple(sorted(t.items(), key=lambda kv: kv[0].name))
                if key not in seen:
                    seen.add(key)
                    yield from _solve(rest, t, kb)
    elif isinstance(it, NegGroup):
        if next(_solve(tuple(it.body), theta, kb), None) is None:
            yield from _solve(rest, theta, kb)
    else:
        raise TypeError(it)


def retrieve(query, kb: KnowledgeBase, select: list | None = None) -> list[dict]:
    """Answer a conjunctive query; returns the distinct bindings, projected on
    ``select`` when given."""
    items = list(query)
    report = validate_nf(items)
    if not report.accepted:
        raise NFRejected(report)
    seen, out = set(), []
    for t in _solve(tuple(items), {}, kb):
        if select is not None:
            t = {v: t[v] for v in select if v in t}
        key = tuple(sorted(t.items(), key=lambda kv: kv[0].name))
        if key not in seen:
            seen.add(key)
            out.append(t)
    return sorted(out, key=lambda t: sorted((v.name, c) for v, c in t.items()))


def _v(name):
    return Var(name)


def q1() -> list:
    """Activities performed by a carrier and realizing a transportation."""
    A, C, P = _v("A"), _v("C"), _v("P")
    return [Lit("activity", (A,)), Lit("assigned", (A, C, P)),
            Lit("sigma", (C, "bro:Carrier")), Lit("sigma", (A, "bro:Transportation"))]


def q2() -> list:
    """Exclusive decision points between an order-producing activity and a q1 activity."""
    A, G, B, P, I, C, P1 = (_v(n) for n in ("A", "G", "B", "P", "I", "C", "P1"))
    q1b = [Lit("activity", (B,)), Lit("assigned", (B, C, P1)),
           Lit("sigma", (C, "bro:Carrier")), Lit("sigma", (B, "bro:Transportation"))]
    return q1b + [Lit("output", (A, I, P)), Lit("sigma", (I, "bro:Purchase_Order")),
                  Lit("reachable", (A, G, P)), Lit("exc_branch", (G,)), Lit("reachable", (G, B, P))]


def q3() -> list:
    """Order-handling activities preceding, on every run, a carrier's transportation."""
    A, B, P, I, C, P1 = (_v(n) for n in ("A", "B", "P", "I", "C", "P1"))
    q1b = [Lit("activity", (B,)), Lit("assigned", (B, C, P1)),
           Lit("sigma", (C, "bro:Carrier")), Lit("sigma", (B, "bro:Transportation"))]
    ctl = F.Not(F.EU(F.Not(F.en(A, P)), F.en(B, P)))
    return q1b + [Lit("output", (A, I, P)), Lit("sigma", (I, "bro:Purchase_Order")),
                  Lit("reachable", (A, B, P)), HoldsLit(ctl, P)]


def noncompliance_formula(p: str) -> F.Formula:
    """Some order reaches the end of ``p`` without being closed."""
    O = Var("O")
    return F.EF(F.And(F.tf(O, RDF_TYPE, "bro:Purchase_Order"),
                      F.And(F.Not(F.tf(O, RDF_TYPE, "bro:ClosedPO")), F.Final(p))))


# --- traces ----------------------------------------------------------------------


def _final(p: str, state, kb: KnowledgeBase) -> bool:
    return holds(F.Final(p), state, kb.ctx)


def check_trace(trace, p: str, kb: KnowledgeBase) -> bool:
    """Replay ``trace`` from the initial state; true if a final state is reached."""
    frontier = {initial_state(p, kb.ctx)}
    for a in trace:
        a = a if isinstance(a, Action) else Action.parse(a)
        frontier = {st.target for s in frontier for st in successors(s, kb.ctx) if st.action == a}
        if not frontier:
            return False
    return any(_final(p, s, kb) for s in frontier)


def _before(trace, a: str, b: str) -> bool:
    seen_a = False
    for act in trace:
        if act.kind == "complete" and act.element == b and seen_a:
            return True
        if act.kind == "complete" and act.element == a:
            seen_a = True
    return False


def generate_traces(p: str, kb: KnowledgeBase, max_len: int, before: tuple | None = None,
                    limit: int | None = None) -> list[tuple]:
    """Correct traces of length at most ``max_len``; ``before=(a, b)`` keeps
    only traces where ``complete(a)`` is followed later by ``complete(b)``."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    g = kb.graph(p)
    finals = [i for i, s in enumerate(g.states) if _final(p, s, kb)]
    dist = {i: 0 for i in finals}
    todo = deque(finals)
    while todo:
        j = todo.popleft()
        for _, i in g.pred(j):
            if i not in dist:
                dist[i] = dist[j] + 1
                todo.append(i)
    out: set = set()
    path: list = []

    def walk(i):
        if limit is not None and len(out) >= limit:
            return
        if i in dist and dist[i] == 0 and path:
            t = tuple(path)
            if before is None or _before(t, *before):
                out.add(t)
        for a, j in g.succ(i):
            if j in dist and len(path) + 1 + dist[j] <= max_len:
                path.append(a)
                walk(j)
                path.pop()

    if g.initial in dist:
        walk(g.initial)
    return sorted(out, key=lambda t: (len(t), [str(a) for a in t]))
