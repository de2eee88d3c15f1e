"""Token-game execution of a process schema over fluent states.

A state is a ``frozenset`` of ground fluent tuples.  ``tf`` fluents are read
through the ontology: a ``tf`` fluent holds when it is derivable from the
state's ``tf`` fluents and the TBox.
"""
from __future__ import annotations

import json
import os
import threading
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator

from . import formula as F
from .annotation import AnnotationSet
from .formula import FALSE_FLUENT, Var
from .model import ProcessSchema, UnknownProcessError, reach_avoiding
from .ontology import TripleStore, tbox_closure

State = frozenset
DEFAULT_BUDGET = 200_000


class UnsafePatternError(ValueError):
    """A variable occurs only under negation, so the pattern would flounder."""


class StateBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class Action:
    kind: str  # "begin" | "complete"
    element: str

    def __str__(self) -> str:
        return f"{self.kind}({self.element})"

    @classmethod
    def parse(cls, text: str) -> "Action":
        text = text.strip()
        for kind in ("begin", "complete"):
            if text.startswith(kind + "(") and text.endswith(")"):
                return cls(kind, text[len(kind) + 1:-1].strip())
        raise ValueError(f"not an action: {text!r}")


def canonical(state: Iterable[tuple]) -> tuple:
    return tuple(sorted(state))


def state_text(state: Iterable[tuple]) -> str:
    return "{" + ",".join(F.fluent_text(f) for f in canonical(state)) + "}"


class Context:
    """Schema, closed TBox and annotations: everything enactment reads."""

    def __init__(self, schema: ProcessSchema, store: TripleStore | None = None,
                 annotations: AnnotationSet | None = None):
        self.annotations = annotations or AnnotationSet()
        self.schema = schema.extended(self.annotations.implied_seq())
        base = store or TripleStore()
        if self.annotations.triples:
            base = base.with_triples(self.annotations.triples)
        self.store = base if base.derived is not None else tbox_closure(base)
        self.tbox = self.store.index
        self.constants = frozenset(self.annotations.constants()
                                   | set(self.schema.kinds) | set(self.schema.process_ids))
        self._closure_memo: dict = {}
        self._lock = threading.Lock()
        self._avoid: dict = {}
        self._pre = defaultdict(list)
        for r in self.annotations.preconditions:
            self._pre[(r.element, r.process)].append(r.condition)
        self._eff = defaultdict(list)
        for r in self.annotations.effects:
            self._eff[(r.element, r.process)].append(r)
        self._guards = defaultdict(dict)
        for g in self.annotations.guards:
            self._guards[(g.branch, g.process)].setdefault(g.successor, []).append(g.guard)
        self._exceptions = defaultdict(list)
        for ev, a, p in sorted(self.schema.exceptions):
            self._exceptions[(a, p)].append(ev)
        self._subprocs = {a: self._descendants(a) for a in self.schema.comp}

    def _descendants(self, a: str) -> frozenset:
        out, todo = set(), [a]
        while todo:
            q = todo.pop()
            if q in out:
                continue
            out.add(q)
            todo.extend(x for x in self.schema.nodes.get(q, ()) if x in self.schema.comp)
        return frozenset(out)

    def avoiding(self, u: str, m: str, p: str) -> frozenset:
        key = (u, m, p)
        r = self._avoid.get(key)
        if r is None:
            r = self._avoid[key] = reach_avoiding(u, m, p, self.schema)
        return r

    # --- ontology-aware labelling ------------------------------------------

    def tf_closure(self, state: State) -> frozenset:
        key = frozenset(f for f in state if f[0] == "tf")
        r = self._closure_memo.get(key)
        if r is None:
            r = self.tbox.abox_closure(key)
            with self._lock:
                r = self._closure_memo.setdefault(key, r)
        return r

    def label(self, state: State) -> frozenset:
        """All fluents holding in ``state``: control fluents plus derived tf."""
        return frozenset(f for f in state if f[0] != "tf") | self.tf_closure(state)


def initial_state(p: str, ctx: Context) -> State:
    if p not in ctx.schema.bp:
        raise UnknownProcessError(p)
    return frozenset({("cf", "start", ctx.schema.bp[p][0], p)})


def derived_closure(state: State, ctx: Context) -> frozenset:
    return ctx.tf_closure(state)


def holds(expr: F.Formula, state: State, ctx: Context) -> bool:
    """Satisfaction of a ground fluent expression."""
    if isinstance(expr, F.Top):
        return True
    if isinstance(expr, F.Bottom):
        return FALSE_FLUENT in ctx.tf_closure(state)
    if isinstance(expr, F.Atom):
        fl = expr.fluent
        if not F.is_ground(expr):
            raise ValueError(f"holds needs a ground expression, got {F.to_text(expr)}")
        if fl[0] == "tf":
            return fl in ctx.tf_closure(state)
        return fl in state
    if isinstance(expr, F.Final):
        if isinstance(expr.process, Var):
            raise ValueError("holds needs a ground expression")
        try:
            end = ctx.schema.bounds(expr.process)[1]
        except UnknownProcessError:
            return False
        return ("cf", end, "end", expr.process) in state
    if isinstance(expr, F.Not):
        return not holds(expr.arg, state, ctx)
    if isinstance(expr, F.And):
        return holds(expr.left, state, ctx) and holds(expr.right, state, ctx)
    raise TypeError(f"temporal operator in a fluent expression: {F.to_text(expr)}")


def _conjuncts(f: F.Formula) -> list:
    if isinstance(f, F.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _unify(pattern: tuple, fl: tuple, theta: dict) -> dict | None:
    if len(pattern) != len(fl) or pattern[0] != fl[0]:
        return None
    out = theta
    for a, b in zip(pattern[1:], fl[1:]):
        if isinstance(a, Var):
            bound = out.get(a)
            if bound is None:
                if out is theta:
                    out = dict(theta)
                out[a] = b
            elif bound != b:
                return None
        elif a != b:
            return None
    return out


def _match(conj: list, theta: dict, labelled: frozenset, state: State, ctx: Context, naf: bool) -> Iterator[dict]:
    if not conj:
        yield theta
        return
    f, rest = conj[0], conj[1:]
    if isinstance(f, F.Top):
        yield from _match(rest, theta, labelled, state, ctx, naf)
    elif isinstance(f, F.Bottom):
        if FALSE_FLUENT in labelled:
            yield from _match(rest, theta, labelled, state, ctx, naf)
    elif isinstance(f, F.Atom):
        pat = F.subst_fluent(f.fluent, theta)
        if not F.fluent_vars(pat):
            if pat in labelled:
                yield from _match(rest, theta, labelled, state, ctx, naf)
            return
        for fl in labelled:
            t2 = _unify(pat, fl, theta)
            if t2 is not None:
                yield from _match(rest, t2, labelled, state, ctx, naf)
    elif isinstance(f, F.Final):
        p = theta.get(f.process, f.process) if isinstance(f.process, Var) else f.process
        if isinstance(p, Var):
            for q in ctx.schema.process_ids:
                if holds(F.Final(q), state, ctx):
                    yield from _match(rest, {**theta, p: q}, labelled, state, ctx, naf)
        elif holds(F.Final(p), state, ctx):
            yield from _match(rest, theta, labelled, state, ctx, naf)
    elif isinstance(f, F.Not):
        g = F.substitute(f.arg, theta)
        if F.is_ground(g):
            ok = not holds(g, state, ctx)
        elif naf:
            ok = next(_match(_ordered(g), {}, labelled, state, ctx, True), None) is None
        else:
            raise UnsafePatternError(
                f"variables {sorted(map(repr, F.variables(g)))} occur only under negation in {F.to_text(f)}")
        if ok:
            yield from _match(rest, theta, labelled, state, ctx, naf)
    else:
        raise TypeError(f"temporal operator in a fluent expression: {F.to_text(f)}")


def _ordered(f: F.Formula) -> list:
    cs = _conjuncts(f)
    return [c for c in cs if not isinstance(c, F.Not)] + [c for c in cs if isinstance(c, F.Not)]


def match(pattern: F.Formula, state: State, ctx: Context, naf_local: bool = False) -> list[dict]:
    """All substitutions making ``pattern`` hold in ``state``.

    Positive conjuncts are solved first and bind variables; negated conjuncts
    are then tested on the instantiated pattern.  A variable left unbound
    under ``not`` raises :class:`UnsafePatternError`, unless ``naf_local`` is
    set, in which case ``not(F)`` reads as "no instance of F holds".
    """
    labelled = ctx.label(state)
    seen, out = set(), []
    for theta in _match(_ordered(pattern), {}, labelled, state, ctx, naf_local):
        key = tuple(sorted((v.name, c) for v, c in theta.items()))
        if key not in seen:
            seen.add(key)
            out.append(theta)
    return out


def gate_holds(expr: F.Formula, state: State, ctx: Context) -> bool:
    """Truth of a precondition or guard: some instance holds."""
    if F.is_ground(expr):
        return holds(expr, state, ctx)
    return bool(match(expr, state, ctx, naf_local=True))


# --- transition relation ---------------------------------------------------------


@dataclass(frozen=True)
class Step:
    action: Action
    target: State
    removed_effects: frozenset = frozenset()  # instantiated negative effects


def _pre_ok(el: str, p: str, state: State, ctx: Context) -> bool:
    conds = ctx._pre.get((el, p))
    return not conds or any(gate_holds(c, state, ctx) for c in conds)


def _finish(el: str, p: str, state: State, remove: set, add: set, ctx: Context) -> Iterator[tuple]:
    """Apply ``el``'s effect alternatives on top of a control-flow update."""
    effs = ctx._eff.get((el, p))
    if not effs:
        yield frozenset((state - remove) | add), frozenset()
        return
    for e in effs:
        for theta in match(e.qualifier, state, ctx):
            neg = {F.subst_fluent(f, theta) for f in e.negative}
            pos = {F.subst_fluent(f, theta) for f in e.positive}
            if any(F.fluent_vars(f) for f in neg | pos):
                raise UnsafePatternError(f"effect of {el} has variables not bound by its qualifier")
            yield frozenset((state - remove - neg) | add | pos), frozenset(neg)


def _guarded_targets(b: str, p: str, state: State, ctx: Context) -> list[str] | None:
    """Successors whose guard holds, or ``None`` when ``b`` has no guards."""
    guards = ctx._guards.get((b, p))
    if not guards:
        return None
    return [y for y in ctx.schema.successors(b, p)
            if y not in guards or any(gate_holds(g, state, ctx) for g in guards[y])]


def _exists_upstream(m: str, p: str, state: State, ctx: Context) -> bool:
    sch = ctx.schema
    executed = [k for k in sch.predecessors(m, p) if ("cf", k, m, p) in state]
    pending = {f[2] for f in state if f[0] == "cf" and f[3] == p}
    pending |= {f[1] for f in state if f[0] == "en" and f[2] == p}
    for x in sch.predecessors(m, p):
        if ("cf", x, m, p) in state:
            continue
        for u in pending:
            if u != x and x not in ctx.avoiding(u, m, p):
                continue
            reach = ctx.avoiding(u, m, p)
            if not any(k in reach for k in executed):
                return True
    return False


def _complete_plain(el: str, p: str, state: State, remove: set, add: set, ctx: Context, out: list) -> None:
    if not _pre_ok(el, p, state, ctx):
        return
    for s2, neg in _finish(el, p, state, remove, add, ctx):
        out.append(Step(Action("complete", el), s2, neg))


def successors(state: State, ctx: Context) -> list[Step]:
    """Every (action, next state) pair enabled in ``state``."""
    sch = ctx.schema
    out: list[Step] = []
    merges_done = set()
    for fl in sorted(state):
        kind_f = fl[0]
        if kind_f == "cf":
            _, x, y, p = fl
            k = sch.kind(y)
            if k == "start_event" and x == "start":
                for z in sch.successors(y, p):
                    _complete_plain(y, p, state, {fl}, {("cf", y, z, p)}, ctx, out)
            elif k == "end_event":
                _complete_plain(y, p, state, {fl}, {("cf", y, "end", p)}, ctx, out)
            elif k == "int_event":
                for z in sch.successors(y, p):
                    _complete_plain(y, p, state, {fl}, {("cf", y, z, p)}, ctx, out)
            elif k == "task":
                if not _pre_ok(y, p, state, ctx):
                    continue
                items = [i for a, i, q in sch.inputs if a == y and q == p]
                if any(not any(f[0] == "wrtn" and f[2] == i and f[3] == p for f in state) for i in items):
                    continue
                out.append(Step(Action("begin", y), frozenset((state - {fl}) | {("en", y, p)})))
            elif k == "comp_act":
                if ("en", y, p) in state or not _pre_ok(y, p, state, ctx):
                    continue
                items = [i for a, i, q in sch.inputs if a == y and q == p]
                if any(not any(f[0] == "wrtn" and f[2] == i and f[3] == p for f in state) for i in items):
                    continue
                s_start = sch.comp[y][0]
                out.append(Step(Action("begin", y),
                                frozenset((state - {fl}) | {("cf", "start", s_start, y), ("en", y, p)})))
            elif k == "exc_branch":
                targets = _guarded_targets(y, p, state, ctx)
                for z in sch.successors(y, p) if targets is None else targets:
                    _complete_plain(y, p, state, {fl}, {("cf", y, z, p)}, ctx, out)
            elif k == "inc_branch":
                targets = _guarded_targets(y, p, state, ctx)
                if targets is None:
                    succ = sch.successors(y, p)
                    for n in range(1, len(succ) + 1):
                        for sub in combinations(succ, n):
                            _complete_plain(y, p, state, {fl}, {("cf", y, z, p) for z in sub}, ctx, out)
                elif targets:
                    _complete_plain(y, p, state, {fl}, {("cf", y, z, p) for z in targets}, ctx, out)
            elif k == "par_branch":
                _complete_plain(y, p, state, {fl}, {("cf", y, z, p) for z in sch.successors(y, p)}, ctx, out)
            elif k == "exc_merge":
                for z in sch.successors(y, p):
                    _complete_plain(y, p, state, {fl}, {("cf", y, z, p)}, ctx, out)
            elif k == "inc_merge":
                if (y, p) in merges_done:
                    continue
                merges_done.add((y, p))
                if _exists_upstream(y, p, state, ctx):
                    continue
                arrived = {f for f in state if f[0] == "cf" and f[2] == y and f[3] == p}
                for z in sch.successors(y, p):
                    _complete_plain(y, p, state, arrived, {("cf", y, z, p)}, ctx, out)
            elif k == "par_merge":
                if (y, p) in merges_done:
                    continue
                merges_done.add((y, p))
                preds = {("cf", x2, y, p) for x2 in sch.predecessors(y, p)}
                if preds <= state:
                    for z in sch.successors(y, p):
                        _complete_plain(y, p, state, preds, {("cf", y, z, p)}, ctx, out)
        elif kind_f == "en":
            _, a, p = fl
            k = sch.kind(a)
            outputs = {("wrtn", a, i, p) for a2, i, q in sch.outputs if a2 == a and q == p}
            if k == "task":
                for z in sch.successors(a, p):
                    for s2, neg in _finish(a, p, state, {fl}, {("cf", a, z, p)} | outputs, ctx):
                        out.append(Step(Action("complete", a), s2, neg))
            elif k == "comp_act":
                end = sch.comp[a][1]
                done = ("cf", end, "end", a)
                if done in state:
                    for z in sch.successors(a, p):
                        for s2, neg in _finish(a, p, state, {fl, done}, {("cf", a, z, p)} | outputs, ctx):
                            out.append(Step(Action("complete", a), s2, neg))
            # boundary exceptions interrupt the running activity
            for ev in ctx._exceptions.get((a, p), ()):
                if sch.kind(ev) != "int_event":
                    continue
                inner = ctx._subprocs.get(a, frozenset())
                drop = {fl} | {f for f in state if f[0] in ("cf", "en") and f[-1] in inner}
                for z in sch.successors(ev, p):
                    _complete_plain(ev, p, state, drop, {("cf", ev, z, p)}, ctx, out)
    uniq = {}
    for st in out:
        key = (st.action, st.target)
        prev = uniq.get(key)
        uniq[key] = st if prev is None else Step(st.action, st.target, prev.removed_effects | st.removed_effects)
    return sorted(uniq.values(), key=lambda s: (s.action, canonical(s.target)))


# --- state space ---------------------------------------------------------------------


@dataclass
class KripkeGraph:
    process: str
    states: list
    edges: list            # (src, Action, dst)
    removed: dict = field(default_factory=dict)  # edge index -> instantiated negative effects
    initial: int = 0

    def __post_init__(self):
        self._succ = [[] for _ in self.states]
        self._pred = [[] for _ in self.states]
        for n, (i, a, j) in enumerate(self.edges):
            self._succ[i].append((a, j))
            self._pred[j].append((a, i))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def sinks(self) -> list[int]:
        return [i for i, s in enumerate(self._succ) if not s]

    def succ(self, i: int) -> list:
        return self._succ[i]

    def pred(self, i: int) -> list:
        return self._pred[i]

    def successor_ids(self, i: int) -> list[int]:
        return sorted({j for _, j in self._succ[i]})

    def csr(self):
        """Deduplicated successor/predecessor arrays (numpy) for the kernels."""
        import numpy as np

        n = len(self.states)
        pairs = sorted({(i, j) for i, _, j in self.edges})
        src = np.fromiter((i for i, _ in pairs), dtype=np.int64, count=len(pairs))
        dst = np.fromiter((j for _, j in pairs), dtype=np.int64, count=len(pairs))
        succ_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(succ_ptr, src + 1, 1)
        succ_ptr = np.cumsum(succ_ptr)
        order = np.argsort(dst, kind="stable")
        pred_idx = src[order]
        pred_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(pred_ptr, dst + 1, 1)
        pred_ptr = np.cumsum(pred_ptr)
        return succ_ptr, dst, pred_ptr, pred_idx

    def to_text(self) -> str:
        lines = [f"state {i}: {state_text(s)}" for i, s in enumerate(self.states)]
        lines += [f"edge {i} {a} {j}" for i, a, j in self.edges]
        lines += [f"sink {i}" for i in self.sinks]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "process": self.process,
            "initial": self.initial,
            "states": [[F.fluent_text(f) for f in canonical(s)] for s in self.states],
            "edges": [[i, str(a), j] for i, a, j in self.edges],
            "sinks": self.sinks,
        }


def default_budget() -> int:
    return int(os.environ.get("BPKB_STATE_BUDGET", DEFAULT_BUDGET))


def state_space(p: str, ctx: Context, budget: int | None = None) -> KripkeGraph:
    """Breadth-first closure of :func:`successors` from the initial state."""
    budget = default_budget() if budget is None else budget
    s0 = initial_state(p, ctx)
    states = [s0]
    index = {s0: 0}
    edges, removed = [], {}
    todo = deque([0])
    while todo:
        i = todo.popleft()
        for st in successors(states[i], ctx):
            j = index.get(st.target)
            if j is None:
                if len(states) >= budget:
                    raise StateBudgetExceeded(
                        f"more than {budget} states reachable in {p}; the model may be unsafe")
                j = index[st.target] = len(states)
                states.append(st.target)
                todo.append(j)
            if st.removed_effects:
                removed[len(edges)] = st.removed_effects
            edges.append((i, st.action, j))
    return KripkeGraph(p, states, edges, removed)


# --- consistency ---------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    inconsistent_states: tuple = ()
    persisting_effects: tuple = ()  # (src, action, dst, fluent)

    @property
    def ok(self) -> bool:
        return not self.inconsistent_states and not self.persisting_effects

    def to_json(self) -> dict:
        return {
            "consistent": self.ok,
            "inconsistent_states": list(self.inconsistent_states),
            "persisting_negative_effects": [
                {"from": i, "action": str(a), "to": j, "fluent": F.fluent_text(f)}
                for i, a, j, f in self.persisting_effects
            ],
        }


def consistency_check(graph: KripkeGraph, ctx: Context) -> ConsistencyReport:
    bad_states = tuple(i for i, s in enumerate(graph.states) if FALSE_FLUENT in ctx.tf_closure(s))
    persisting = []
    for n, fl in sorted(graph.removed.items()):
        i, a, j = graph.edges[n]
        for f in sorted(fl):
            if holds(F.Atom(f), graph.states[j], ctx):
                persisting.append((i, a, j, f))
    return ConsistencyReport(bad_states, tuple(persisting))


def graph_json(graph: KripkeGraph) -> str:
    return json.dumps(graph.to_json(), indent=1)
