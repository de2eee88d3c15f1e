"""Business process schemas as ground facts.

A schema is the set of facts of a ``.bps`` file, e.g.::

    bp(p, s, e)
    start_event(s)
    end_event(e)
    seq(s, e, p)

Compound activities (``comp_act(a, s, e)``) are processes in their own right:
their sequence flows carry the compound activity as process argument.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .formula import Var
from .syntax import ParseError, parse_fact_line, quote_constant

ELEMENT_KINDS = (
    "task", "comp_act", "start_event", "int_event", "end_event",
    "exc_branch", "exc_merge", "inc_branch", "inc_merge", "par_branch", "par_merge",
    "item", "participant",
)
ACTIVITY_KINDS = frozenset({"task", "comp_act"})
EVENT_KINDS = frozenset({"start_event", "int_event", "end_event"})
BRANCH_KINDS = frozenset({"exc_branch", "inc_branch", "par_branch"})
MERGE_KINDS = frozenset({"exc_merge", "inc_merge", "par_merge"})
GATEWAY_KINDS = BRANCH_KINDS | MERGE_KINDS
FLOW_KINDS = ACTIVITY_KINDS | EVENT_KINDS | GATEWAY_KINDS

# predicate -> arity
PREDICATES = {
    "bp": 3, "comp_act": 3, "seq": 3, "exception": 3,
    "input": 3, "output": 3, "assigned": 3,
    **{k: 1 for k in ELEMENT_KINDS if k != "comp_act"},
    # meta-model predicates accepted as redundant declarations
    "element": 1, "event": 1, "activity": 1, "relation": 3,
}


class UnknownProcessError(KeyError):
    pass


@dataclass(frozen=True)
class ProcessSchema:
    processes: tuple = ()          # (pid, start, end) from bp/3
    classes: tuple = ()            # (element, kind), comp_act included
    compound: tuple = ()           # (activity, start, end) from comp_act/3
    seq: frozenset = frozenset()   # (from, to, proc)
    exceptions: frozenset = frozenset()  # (event, activity, proc)
    inputs: frozenset = frozenset()      # (activity, item, proc)
    outputs: frozenset = frozenset()
    assignments: frozenset = frozenset()  # (activity, participant, proc)
    declarations: tuple = ()       # (pred, args) for element/event/activity/relation

    # --- classification ----------------------------------------------------

    @cached_property
    def kinds(self) -> dict[str, frozenset]:
        out: dict[str, set] = defaultdict(set)
        for el, k in self.classes:
            out[el].add(k)
        return {el: frozenset(ks) for el, ks in out.items()}

    def kind(self, el: str) -> str | None:
        ks = self.kinds.get(el)
        if not ks:
            return None
        return next(iter(ks)) if len(ks) == 1 else min(ks)

    def is_activity(self, el: str) -> bool:
        return bool(self.kinds.get(el, frozenset()) & ACTIVITY_KINDS)

    @cached_property
    def bp(self) -> dict[str, tuple[str, str]]:
        return {p: (s, e) for p, s, e in self.processes}

    @cached_property
    def comp(self) -> dict[str, tuple[str, str]]:
        return {a: (s, e) for a, s, e in self.compound}

    def bounds(self, p: str) -> tuple[str, str]:
        """Start and end event of a process or compound activity."""
        if p in self.bp:
            return self.bp[p]
        if p in self.comp:
            return self.comp[p]
        raise UnknownProcessError(p)

    @cached_property
    def process_ids(self) -> tuple[str, ...]:
        seen = dict.fromkeys(p for p, _, _ in self.processes)
        seen.update(dict.fromkeys(a for a, _, _ in self.compound))
        return tuple(seen)

    # --- graph views -------------------------------------------------------

    @cached_property
    def succ(self) -> dict[tuple[str, str], tuple[str, ...]]:
        out = defaultdict(list)
        for x, y, p in sorted(self.seq):
            out[(x, p)].append(y)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def pred(self) -> dict[tuple[str, str], tuple[str, ...]]:
        out = defaultdict(list)
        for x, y, p in sorted(self.seq):
            out[(y, p)].append(x)
        return {k: tuple(v) for k, v in out.items()}

    def successors(self, el: str, p: str) -> tuple[str, ...]:
        return self.succ.get((el, p), ())

    def predecessors(self, el: str, p: str) -> tuple[str, ...]:
        return self.pred.get((el, p), ())

    @cached_property
    def nodes(self) -> dict[str, frozenset]:
        """Flow elements of each process (seq endpoints, exceptions, bounds)."""
        out: dict[str, set] = defaultdict(set)
        for x, y, p in self.seq:
            out[p].update((x, y))
        for e, a, p in self.exceptions:
            out[p].update((e, a))
        for p in self.process_ids:
            out[p].update(self.bounds(p))
        return {p: frozenset(v) for p, v in out.items()}

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        """Processes in which each compound activity occurs."""
        out = defaultdict(set)
        for p, els in self.nodes.items():
            for el in els:
                if el in self.comp:
                    out[el].add(p)
        return {a: tuple(sorted(ps)) for a, ps in out.items()}

    def root_process(self, p: str) -> str:
        """Top-level process enclosing ``p`` (``p`` itself when it has a bp fact)."""
        seen = set()
        while p not in self.bp:
            if p not in self.comp or p in seen or not self.parents.get(p):
                raise UnknownProcessError(p)
            seen.add(p)
            p = self.parents[p][0]
        return p

    def check_process(self, p: str) -> None:
        if p not in self.bp and p not in self.comp:
            raise UnknownProcessError(p)

    # --- building ----------------------------------------------------------

    def extended(self, seq: Iterable[tuple] = ()) -> "ProcessSchema":
        """Copy with extra sequence flows (used for flows implied by guards)."""
        extra = frozenset(seq) - self.seq
        if not extra:
            return self
        return ProcessSchema(
            self.processes, self.classes, self.compound, self.seq | extra,
            self.exceptions, self.inputs, self.outputs, self.assignments, self.declarations,
        )

    def facts(self) -> list[tuple]:
        """All facts as (pred, args) in a canonical order."""
        out = [("bp", r) for r in self.processes]
        out += [("comp_act", r) for r in self.compound]
        out += [(k, (el,)) for el, k in self.classes if k != "comp_act"]
        out += [("seq", r) for r in sorted(self.seq)]
        out += [("exception", r) for r in sorted(self.exceptions)]
        out += [("input", r) for r in sorted(self.inputs)]
        out += [("output", r) for r in sorted(self.outputs)]
        out += [("assigned", r) for r in sorted(self.assignments)]
        out += list(self.declarations)
        return out

    def to_text(self) -> str:
        return "".join(
            f"{pred}({','.join(quote_constant(a) for a in args)})\n" for pred, args in self.facts()
        )


def schema_from_facts(facts: Iterable[tuple[str, tuple]]) -> ProcessSchema:
    processes, classes, compound, decls = [], [], [], []
    rel = defaultdict(set)
    for pred, args in facts:
        if pred == "bp":
            processes.append(tuple(args))
        elif pred == "comp_act":
            compound.append(tuple(args))
            classes.append((args[0], "comp_act"))
        elif pred in ELEMENT_KINDS:
            classes.append((args[0], pred))
        elif pred in ("seq", "exception", "input", "output", "assigned"):
            rel[pred].add(tuple(args))
        else:
            decls.append((pred, tuple(args)))
    return ProcessSchema(
        processes=tuple(dict.fromkeys(processes)),
        classes=tuple(dict.fromkeys(classes)),
        compound=tuple(dict.fromkeys(compound)),
        seq=frozenset(rel["seq"]),
        exceptions=frozenset(rel["exception"]),
        inputs=frozenset(rel["input"]),
        outputs=frozenset(rel["output"]),
        assignments=frozenset(rel["assigned"]),
        declarations=tuple(dict.fromkeys(decls)),
    )


def parse_process_facts(text: str) -> ProcessSchema:
    """Parse a ``.bps`` fact file: one ground fact per line, ``%`` comments."""
    facts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        term = parse_fact_line(line, lineno)
        arity = PREDICATES.get(term.functor)
        if arity is None:
            raise ParseError(f"unknown predicate {term.functor!r}", 0, lineno)
        if len(term.args) != arity:
            raise ParseError(
                f"arity mismatch: {term.functor} takes {arity} arguments, got {len(term.args)}",
                0, lineno,
            )
        for a in term.args:
            if isinstance(a, Var):
                raise ParseError(f"variable {a!r} in a ground fact", 0, lineno)
            if not isinstance(a, str):
                raise ParseError(f"fact arguments must be constants, got {a!r}", 0, lineno)
        facts.append((term.functor, term.args))
    return schema_from_facts(facts)


# --- reachability --------------------------------------------------------------


def _bfs(start: Iterable[str], step, blocked: str | None = None) -> set[str]:
    seen: set[str] = set()
    todo = deque(x for x in start if x != blocked)
    seen.update(todo)
    while todo:
        x = todo.popleft()
        for y in step(x):
            if y != blocked and y not in seen:
                seen.add(y)
                todo.append(y)
    return seen


def seq_plus(e1: str, e2: str, p: str, schema: ProcessSchema) -> bool:
    """Non-empty sequence-flow path from ``e1`` to ``e2`` inside process ``p``."""
    schema.check_process(p)
    return e2 in _bfs(schema.successors(e1, p), lambda x: schema.successors(x, p))


def reach_avoiding(e1: str, n: str, p: str, schema: ProcessSchema) -> frozenset:
    """Elements reachable from ``e1`` by non-empty paths whose nodes after
    ``e1`` all differ from ``n``."""
    return frozenset(_bfs(schema.successors(e1, p), lambda x: schema.successors(x, p), n))


def n_reachable(e1: str, e2: str, n: str, p: str, schema: ProcessSchema) -> bool:
    schema.check_process(p)
    return e2 in reach_avoiding(e1, n, p, schema)


def hierarchical_reachable(e1: str, e2: str, p: str, schema: ProcessSchema) -> bool:
    """``e2`` follows ``e1`` along sequence flows of ``p``, where leaving a
    compound activity through its end event continues after the compound
    activity in the enclosing process."""
    schema.check_process(p)
    seen_procs = set()
    frontier = [(e1, p)]
    while frontier:
        x, q = frontier.pop()
        if (x, q) in seen_procs:
            continue
        seen_procs.add((x, q))
        after = _bfs(schema.successors(x, q), lambda z, q=q: schema.successors(z, q))
        if e2 in after:
            return True
        if q in schema.comp and (schema.comp[q][1] in after or x == schema.comp[q][1]):
            frontier.extend((q, parent) for parent in schema.parents.get(q, ()))
    return False


# --- well-formedness -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Violation:
    rule: str  # "1".."6" or "meta:<tag>"
    elements: tuple
    message: str


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple = ()

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def to_json(self) -> list[dict]:
        return [{"rule": v.rule, "elements": list(v.elements), "message": v.message}
                for v in self.violations]


def well_formedness(schema: ProcessSchema) -> ViolationReport:
    """Check structural constraints (1)-(6) and meta-model disjointness."""
    out: set[Violation] = set()

    def bad(rule, els, msg):
        out.add(Violation(rule, tuple(els), msg))

    kinds = schema.kinds
    for el, ks in kinds.items():
        if len(ks) > 1:
            bad("meta:disjoint", (el,), f"{el} is classified as {', '.join(sorted(ks))}")

    def kind_of(el):
        return schema.kind(el)

    def need(el, allowed, role):
        k = kind_of(el)
        if k is None:
            bad("meta:unclassified", (el,), f"{el} ({role}) is not classified")
        elif k not in allowed:
            bad("meta:disjoint", (el,), f"{el} is a {k}, expected {role}")

    known = set(schema.process_ids)
    for x, y, p in schema.seq:
        need(x, FLOW_KINDS, "flow element")
        need(y, FLOW_KINDS, "flow element")
        if p not in known:
            bad("meta:unknown-process", (p,), f"seq({x},{y},{p}) refers to unknown process {p}")
    for e, a, p in schema.exceptions:
        need(e, {"int_event"}, "intermediate event")
        need(a, ACTIVITY_KINDS, "activity")
    for rel, role in ((schema.inputs, "input"), (schema.outputs, "output")):
        for a, i, p in rel:
            need(a, ACTIVITY_KINDS, "activity")
            need(i, {"item"}, "item")
    for a, r, p in schema.assignments:
        need(a, ACTIVITY_KINDS, "activity")
        need(r, {"participant"}, "participant")
    for pred, args in schema.declarations:
        expected = {"event": EVENT_KINDS, "activity": ACTIVITY_KINDS, "element": FLOW_KINDS}.get(pred)
        if expected is not None:
            need(args[0], expected, pred)

    # (1) unique start/end per process
    bp_count = defaultdict(list)
    for pid, s, e in schema.processes:
        bp_count[pid].append((s, e))
    for a, s, e in schema.compound:
        bp_count[a].append((s, e))
    exc_events = {e for e, _, _ in schema.exceptions}
    for pid, bounds in bp_count.items():
        if len(bounds) > 1:
            bad("1", (pid,), f"process {pid} has {len(bounds)} entry/exit declarations")
        s, e = bounds[0]
        if kind_of(s) != "start_event":
            bad("1", (pid, s), f"entry point {s} of {pid} is not a start event")
        if kind_of(e) != "end_event":
            bad("1", (pid, e), f"exit point {e} of {pid} is not an end event")
        for el in schema.nodes.get(pid, ()):
            if kind_of(el) == "start_event" and el != s:
                bad("1", (pid, el), f"{pid} has a second start event {el}")
            if kind_of(el) == "end_event" and el != e:
                bad("1", (pid, el), f"{pid} has a second end event {el}")

    for pid in schema.process_ids:
        s, e = schema.bounds(pid)
        els = schema.nodes.get(pid, frozenset())

        # (3)
        if schema.predecessors(s, pid):
            bad("3", (pid, s), f"start event {s} has predecessors")
        if schema.successors(e, pid):
            bad("3", (pid, e), f"end event {e} has successors")

        # (4), (5)
        for el in els:
            k = kind_of(el)
            n_in = len(schema.predecessors(el, pid))
            n_out = len(schema.successors(el, pid))
            if k in BRANCH_KINDS and not (n_in == 1 and n_out >= 2):
                bad("4", (pid, el), f"branch {el} has {n_in} predecessors and {n_out} successors")
            elif k in MERGE_KINDS and not (n_in >= 2 and n_out == 1):
                bad("4", (pid, el), f"merge {el} has {n_in} predecessors and {n_out} successors")
            elif k in ACTIVITY_KINDS and not (n_in == 1 and n_out == 1):
                bad("5", (pid, el), f"activity {el} has {n_in} predecessors and {n_out} successors")
            elif k == "int_event":
                if el in exc_events:
                    if n_out != 1 or n_in:
                        bad("5", (pid, el), f"exception {el} has {n_in} predecessors and {n_out} successors")
                elif not (n_in == 1 and n_out == 1):
                    bad("5", (pid, el), f"event {el} has {n_in} predecessors and {n_out} successors")

        # (2) every element on a start -> end path
        boundary = defaultdict(list)
        boundary_rev = defaultdict(list)
        for ev, a, q in schema.exceptions:
            if q == pid:
                boundary[a].append(ev)
                boundary_rev[ev].append(a)
        fwd = _bfs([s], lambda x: schema.successors(x, pid) + tuple(boundary[x]))
        bwd = _bfs([e], lambda x: schema.predecessors(x, pid) + tuple(boundary_rev[x]))
        for el in els:
            if el not in fwd or el not in bwd:
                bad("2", (pid, el), f"{el} is not on a path from {s} to {e}")

    # flow elements that no sequence flow attaches to any process
    placed = set().union(*schema.nodes.values()) if schema.nodes else set()
    for el, ks in kinds.items():
        if ks & FLOW_KINDS and el not in placed and el not in schema.comp:
            bad("2", (el,), f"{el} is not connected to any process")

    # (6) acyclic compound hierarchy
    children = {p: sorted(x for x in schema.nodes.get(p, ()) if x in schema.comp) for p in schema.process_ids}
    state: dict[str, int] = {}

    def visit(p, stack):
        state[p] = 1
        for c in children.get(p, ()):
            if state.get(c) == 1:
                cyc = stack[stack.index(c):] if c in stack else [c]
                bad("6", tuple(sorted(cyc)), f"cycle in compound activity hierarchy through {c}")
            elif c not in state:
                visit(c, stack + [c])
        state[p] = 2

    for p in sorted(schema.process_ids):
        if p not in state:
            visit(p, [p])

    return ViolationReport(tuple(sorted(out)))
