"""Terminological and functional annotations of process elements.

Annotation files hold one record per line::

    @default bro:
    termRef(order, Purchase_Order)
    termRef(delivering, Transportation and some related.Product)
    pre(accept_order, tf(O,rdf:type,bro:Purchase_Order), ordering)
    eff(cancel_order, tf(O,rdf:type,bro:ApprovedPO),
        [tf(O,rdf:type,bro:ApprovedPO)], [tf(O,rdf:type,bro:CancelledPO)], ordering)
    c_seq(tf(O,rdf:type,bro:ApprovedPO), g1, g3, ho)

Identifiers starting with an uppercase letter are variables.  A record may
span several lines as long as its parentheses are open.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from . import formula as F
from .model import ProcessSchema, Violation, ViolationReport
from .ontology import Normalizer, TripleStore, parse_concept
from .syntax import Compound, ParseError, TokenStream, parse_term, term_to_formula, term_to_fluent


@dataclass(frozen=True)
class TermAnnotation:
    element: str
    concept: str       # named class (complex expressions get a blank-node name)
    expression: str    # the expression as written, normalized spacing


@dataclass(frozen=True)
class Precondition:
    element: str
    condition: F.Formula
    process: str


@dataclass(frozen=True)
class Effect:
    element: str
    qualifier: F.Formula
    negative: tuple
    positive: tuple
    process: str


@dataclass(frozen=True)
class GuardedFlow:
    guard: F.Formula
    branch: str
    successor: str
    process: str


@dataclass(frozen=True)
class AnnotationSet:
    terms: tuple = ()
    preconditions: tuple = ()
    effects: tuple = ()
    guards: tuple = ()
    triples: frozenset = frozenset()  # defining axioms of complex concepts
    default_prefix: str = ""

    def pre_for(self, el: str, p: str) -> list:
        return [r.condition for r in self.preconditions if r.element == el and r.process == p]

    def eff_for(self, el: str, p: str) -> list:
        return [r for r in self.effects if r.element == el and r.process == p]

    def guards_for(self, branch: str, p: str) -> dict:
        out: dict = {}
        for g in self.guards:
            if g.branch == branch and g.process == p:
                out.setdefault(g.successor, []).append(g.guard)
        return out

    def concept_of(self, el: str) -> list[str]:
        return [t.concept for t in self.terms if t.element == el]

    def implied_seq(self) -> set:
        return {(g.branch, g.successor, g.process) for g in self.guards}

    def constants(self) -> set:
        """Constants occurring as fluent arguments (the individuals universe)."""
        out = set()
        exprs = [r.condition for r in self.preconditions] + [g.guard for g in self.guards]
        exprs += [r.qualifier for r in self.effects]
        exprs += [F.Atom(fl) for r in self.effects for fl in r.negative + r.positive]
        for e in exprs:
            for g in F.subformulas(e):
                if isinstance(g, F.Atom):
                    out.update(a for a in g.fluent[1:] if isinstance(a, str))
        return out

    def to_text(self) -> str:
        lines = []
        if self.default_prefix:
            lines.append(f"@default {self.default_prefix}")
        for t in self.terms:
            lines.append(f"termRef({t.element}, {t.expression})")
        for r in self.preconditions:
            lines.append(f"pre({r.element}, {F.to_text(r.condition)}, {r.process})")
        for r in self.effects:
            neg = ",".join(F.fluent_text(f) for f in r.negative)
            pos = ",".join(F.fluent_text(f) for f in r.positive)
            lines.append(f"eff({r.element}, {F.to_text(r.qualifier)}, [{neg}], [{pos}], {r.process})")
        for g in self.guards:
            lines.append(f"c_seq({F.to_text(g.guard)}, {g.branch}, {g.successor}, {g.process})")
        return "\n".join(lines) + ("\n" if lines else "")

    def records(self) -> tuple:
        return (self.terms, self.preconditions, self.effects, self.guards)


_TERMREF = re.compile(r"termRef\s*\(\s*([^,\s]+)\s*,(.*)\)\s*\.?\s*$", re.S)
_DEFAULT = re.compile(r"@default\s+([A-Za-z_][\w\-]*:)?\s*$")


def _records(text: str):
    """Yield (line number, record text); records may span lines."""
    buf, start, depth = [], None, 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = re.sub(r"(?:^|\s)%.*$", "", raw).strip()
        if not line:
            continue
        if start is None:
            start = lineno
        buf.append(line)
        depth += line.count("(") + line.count("[") - line.count(")") - line.count("]")
        if depth <= 0:
            yield start, " ".join(buf)
            buf, start, depth = [], None, 0
    if buf:
        raise ParseError("unbalanced parentheses at end of file", None, start)


def _fluent_list(term, line):
    if not isinstance(term, list):
        raise ParseError(f"expected a list of fluents, got {term!r}", None, line)
    try:
        return tuple(term_to_fluent(t) for t in term)
    except ParseError as e:
        raise ParseError(str(e), None, line) from None


def _formula(term, line):
    try:
        return term_to_formula(term)
    except ParseError as e:
        raise ParseError(str(e), None, line) from None


def parse_annotations(text: str, schema: ProcessSchema | None = None, store: TripleStore | None = None) -> AnnotationSet:
    """Parse an annotation file.  With a schema, records naming unknown
    elements or processes are rejected."""
    terms, pres, effs, guards = [], [], [], []
    norm = Normalizer()
    default = ""
    known = set(schema.kinds) if schema is not None else None
    procs = set(schema.process_ids) if schema is not None else None

    def check_el(el, line):
        if known is not None and el not in known:
            raise ParseError(f"unknown element {el!r}", None, line)

    def check_proc(p, line):
        if procs is not None and p not in procs:
            raise ParseError(f"unknown process {p!r}", None, line)

    for line, rec in _records(text):
        m = _DEFAULT.match(rec)
        if m:
            default = m.group(1) or ""
            continue
        m = _TERMREF.match(rec)
        if m:
            el, expr = m.group(1), m.group(2).strip()
            check_el(el, line)
            name = parse_concept(expr, norm, default, line)
            terms.append(TermAnnotation(el, name, " ".join(expr.split())))
            continue
        ts = TokenStream(rec, line)
        term = parse_term(ts)
        if ts.at("."):
            ts.next()
        if not ts.done():
            ts.fail(f"trailing input {ts.peek().text!r}")
        if not isinstance(term, Compound):
            raise ParseError(f"expected an annotation record, got {term!r}", None, line)
        name, args = term.functor, term.args
        expect = {"pre": 3, "eff": 5, "c_seq": 4}.get(name)
        if expect is None:
            raise ParseError(f"unknown annotation record {name!r}", None, line)
        if len(args) != expect:
            raise ParseError(f"{name} takes {expect} arguments, got {len(args)}", None, line)
        for a in (args[0],) if name != "c_seq" else args[1:3]:
            if not isinstance(a, str):
                raise ParseError(f"element must be a constant, got {a!r}", None, line)
            check_el(a, line)
        if not isinstance(args[-1], str):
            raise ParseError(f"process must be a constant, got {args[-1]!r}", None, line)
        check_proc(args[-1], line)
        if name == "pre":
            pres.append(Precondition(args[0], _formula(args[1], line), args[2]))
        elif name == "eff":
            effs.append(Effect(args[0], _formula(args[1], line), _fluent_list(args[2], line),
                               _fluent_list(args[3], line), args[4]))
        else:
            guards.append(GuardedFlow(_formula(args[0], line), args[1], args[2], args[3]))
    return AnnotationSet(tuple(terms), tuple(pres), tuple(effs), tuple(guards),
                         frozenset(norm.triples), default)


def validate_annotations(ann: AnnotationSet, schema: ProcessSchema, store: TripleStore | None = None) -> ViolationReport:
    out = []
    for r in ann.effects:
        overlap = set(r.negative) & set(r.positive)
        if overlap:
            out.append(Violation("ann:effect-overlap", (r.element, r.process),
                                 f"{r.element}: fluents both removed and added: "
                                 + ", ".join(sorted(F.fluent_text(f) for f in overlap))))
        qvars = F.variables(r.qualifier)
        loose = set().union(*(F.fluent_vars(f) for f in r.negative + r.positive)) - qvars
        if loose:
            out.append(Violation("ann:effect-variable", (r.element, r.process),
                                 f"{r.element}: effect variables not bound by the qualifier: "
                                 + ", ".join(sorted(map(repr, loose)))))
    for g in ann.guards:
        k = schema.kind(g.branch)
        if k not in ("exc_branch", "inc_branch"):
            out.append(Violation("ann:guard-target", (g.branch, g.process),
                                 f"guard attached to {g.branch}, which is a {k or 'unknown element'}"))
    for r in ann.preconditions:
        if r.element not in schema.kinds:
            out.append(Violation("ann:unknown-element", (r.element,), f"unknown element {r.element}"))
    if store is not None and store.asserted:
        for t in ann.terms:
            for c in sorted(_named_parts(t.concept, ann.triples)):
                if not _in_store(c, store):
                    out.append(Violation("ann:unknown-concept", (t.element, c),
                                         f"{t.element}: concept {c} does not occur in the ontology"))
        for el, c in sorted(_typed_classes(ann)):
            if not _in_store(c, store):
                out.append(Violation("ann:unknown-concept", (el, c),
                                     f"{el}: class {c} does not occur in the ontology"))
    return ViolationReport(tuple(sorted(set(out))))


def _typed_classes(ann: AnnotationSet) -> set:
    """(element, class) for every constant class in an rdf:type fluent."""
    out = set()

    def scan(el, fluents):
        for fl in fluents:
            if fl[0] == "tf" and fl[2] == "rdf:type" and isinstance(fl[3], str):
                out.add((el, fl[3]))

    def atoms(el, f):
        scan(el, [g.fluent for g in F.subformulas(f) if isinstance(g, F.Atom)])

    for r in ann.preconditions:
        atoms(r.element, r.condition)
    for r in ann.effects:
        atoms(r.element, r.qualifier)
        scan(r.element, r.negative + r.positive)
    for g in ann.guards:
        atoms(g.branch, g.guard)
    return out


def _named_parts(name: str, triples: Iterable) -> set:
    if not name.startswith("_:"):
        return {name}
    out = set()
    for s, p, o in triples:
        if s != name:
            continue
        if p == "owl:onProperty":
            out.add(o)
        elif isinstance(o, tuple):
            for x in o:
                out |= _named_parts(x, triples)
        else:
            out |= _named_parts(o, triples)
    return out


def _in_store(c: str, store: TripleStore) -> bool:
    for s, p, o in store.asserted:
        if c == s or c == p or c == o or (isinstance(o, tuple) and c in o):
            return True
    return False
