"""Reference-ontology TBox as triples, plus the OWL 2 RL rules used here.

Two input syntaxes are accepted, line by line:

* triples: ``bro:CancelledPO rdfs:subClassOf bro:ClosedPO .`` with
  ``@prefix p: <iri> .`` declarations and ``(a b)`` lists;
* DL shorthand: ``Order and some related.UnavailablePL subClassOf CancelledPO``
  (``⊑ ⊓ ∃ ¬ ⊥ ≡`` are accepted as well).  A ``@default bro:`` line sets the
  prefix given to bare names.

Complex class expressions are normalized to named (blank) classes with
``owl:intersectionOf`` / ``owl:someValuesFrom`` / ``owl:onProperty`` triples.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .formula import FALSE_FLUENT
from .syntax import ParseError

RDF_TYPE = "rdf:type"
SUBCLASS = "rdfs:subClassOf"
SUBPROP = "rdfs:subPropertyOf"
DOMAIN = "rdfs:domain"
RANGE = "rdfs:range"
EQUIV = "owl:equivalentClass"
DISJOINT = "owl:disjointWith"
INTERSECTION = "owl:intersectionOf"
SOME = "owl:someValuesFrom"
ON_PROP = "owl:onProperty"
INVERSE = "owl:inverseOf"
TRANSITIVE = "owl:TransitiveProperty"
THING = "owl:Thing"
NOTHING = "owl:Nothing"

VOCABULARY = frozenset({
    RDF_TYPE, SUBCLASS, SUBPROP, DOMAIN, RANGE, EQUIV, DISJOINT,
    INTERSECTION, SOME, ON_PROP, INVERSE,
    # annotation-ish predicates that carry no rule
    "rdfs:label", "rdfs:comment",
})
_RESERVED = ("rdf:", "rdfs:", "owl:")

Triple = tuple  # (s, p, o); o is a tuple for intersectionOf lists


def check_predicate(p: str, line: int | None = None) -> None:
    if p.startswith(_RESERVED) and p not in VOCABULARY:
        raise ParseError(f"unsupported vocabulary predicate {p!r}", None, line)


# --- closure ----------------------------------------------------------------


def _schema_step(facts: set) -> set:
    """One round of the schema-level rules; returns triples not yet in ``facts``."""
    by_p: dict[str, list] = defaultdict(list)
    for t in facts:
        by_p[t[1]].append(t)
    sub = defaultdict(set)
    for c, _, d in by_p[SUBCLASS]:
        sub[c].add(d)
    out = set()
    # transitive subsumption
    for c1, _, c2 in by_p[SUBCLASS]:
        for c3 in sub.get(c2, ()):
            out.add((c1, SUBCLASS, c3))
    # inheritance
    for x, _, c1 in by_p[RDF_TYPE]:
        for c2 in sub.get(c1, ()):
            out.add((x, RDF_TYPE, c2))
    # inheritance through equivalence (both directions)
    eq = defaultdict(set)
    for a, _, b in by_p[EQUIV]:
        eq[a].add(b)
        eq[b].add(a)
    for x, _, c1 in by_p[RDF_TYPE]:
        for c2 in eq.get(c1, ()):
            out.add((x, RDF_TYPE, c2))
    # domain / range
    for p, _, c in by_p[DOMAIN]:
        for x, _, _ in by_p.get(p, ()):
            out.add((x, RDF_TYPE, c))
    for p, _, c in by_p[RANGE]:
        for _, _, y in by_p.get(p, ()):
            if isinstance(y, str):
                out.add((y, RDF_TYPE, c))
    # transitivity
    for p, _, k in by_p[RDF_TYPE]:
        if k == TRANSITIVE:
            succ = defaultdict(set)
            for x, _, y in by_p.get(p, ()):
                succ[x].add(y)
            for x, _, y in by_p.get(p, ()):
                for z in succ.get(y, ()):
                    out.add((x, p, z))
    # subsumption of existentials
    svf = defaultdict(set)
    onp = defaultdict(set)
    for c, _, d in by_p[SOME]:
        svf[c].add(d)
    for c, _, p in by_p[ON_PROP]:
        onp[c].add(p)
    for c1, ds1 in svf.items():
        for c2, ds2 in svf.items():
            if onp.get(c1, set()) & onp.get(c2, set()):
                if any(d2 in sub.get(d1, ()) for d1 in ds1 for d2 in ds2):
                    out.add((c1, SUBCLASS, c2))
    # intersection
    for c, _, members in by_p[INTERSECTION]:
        for d in members:
            out.add((c, SUBCLASS, d))
    return out - facts


def closure_of(triples: Iterable[Triple]) -> frozenset:
    facts = set(triples)
    while True:
        new = _schema_step(facts)
        if not new:
            return frozenset(facts)
        facts |= new


@dataclass(frozen=True)
class TripleStore:
    asserted: frozenset = frozenset()
    derived: frozenset | None = None
    prefixes: tuple = ()

    @property
    def closed(self) -> bool:
        return self.derived is not None

    def with_triples(self, triples: Iterable[Triple]) -> "TripleStore":
        return TripleStore(self.asserted | frozenset(triples), None, self.prefixes)

    def facts(self) -> frozenset:
        return self.derived if self.derived is not None else self.asserted

    def to_text(self) -> str:
        lines = [f"@prefix {p} <{iri}> ." for p, iri in self.prefixes]
        for s, p, o in sorted(self.asserted, key=repr):
            obj = "(" + " ".join(o) + ")" if isinstance(o, tuple) else o
            lines.append(f"{s} {p} {obj} .")
        return "\n".join(lines) + ("\n" if lines else "")

    # --- indexes for the per-state rules -------------------------------------

    @cached_property
    def index(self) -> "TBoxIndex":
        return TBoxIndex.build(self.facts())

    def individuals_in_conflict(self) -> set:
        """Individuals typed with two disjoint classes by the store itself."""
        return self.index.conflicts(t for t in self.facts() if t[1] == RDF_TYPE)


def tbox_closure(store: TripleStore) -> TripleStore:
    return TripleStore(store.asserted, closure_of(store.asserted), store.prefixes)


def entails(store: TripleStore, q: Triple) -> bool:
    if store.derived is None:
        store = tbox_closure(store)
    return tuple(q) in store.derived


def is_subclass(store: TripleStore, c: str, d: str) -> bool:
    """``c`` equals ``d`` or ``c rdfs:subClassOf d`` is derived."""
    return c == d or d in store.index.sup.get(c, ())


@dataclass
class TBoxIndex:
    sup: dict          # class -> superclasses
    superprop: dict    # property -> all superproperties (transitively)
    domain: dict
    range: dict
    transitive: frozenset
    inter_by_member: dict  # member class -> [(class, other member)]
    exist_by_filler: dict  # filler -> [(class, property)]
    exist_by_prop: dict    # property -> [(class, filler)]
    disjoint: dict

    @classmethod
    def build(cls, facts: Iterable[Triple]) -> "TBoxIndex":
        sup, sp, dom, rng, disj = (defaultdict(set) for _ in range(5))
        trans = set()
        svf, onp = defaultdict(set), defaultdict(set)
        inter = defaultdict(list)
        for s, p, o in facts:
            if p == SUBCLASS:
                sup[s].add(o)
            elif p == EQUIV:
                sup[s].add(o)
                sup[o].add(s)
            elif p == SUBPROP:
                sp[s].add(o)
            elif p == DOMAIN:
                dom[s].add(o)
            elif p == RANGE:
                rng[s].add(o)
            elif p == RDF_TYPE and o == TRANSITIVE:
                trans.add(s)
            elif p == SOME:
                svf[s].add(o)
            elif p == ON_PROP:
                onp[s].add(o)
            elif p == INTERSECTION and len(o) == 2:
                a, b = o
                inter[a].append((s, b))
                inter[b].append((s, a))
            elif p == DISJOINT:
                disj[s].add(o)
                disj[o].add(s)
        # subPropertyOf chains: iterating rule 2 reaches every ancestor
        closed_sp = {}
        for p in list(sp):
            seen, todo = set(), list(sp[p])
            while todo:
                q = todo.pop()
                if q not in seen:
                    seen.add(q)
                    todo.extend(sp.get(q, ()))
            closed_sp[p] = frozenset(seen)
        by_filler, by_prop = defaultdict(list), defaultdict(list)
        for c, fillers in svf.items():
            for r in fillers:
                for p in onp.get(c, ()):
                    by_filler[r].append((c, p))
                    by_prop[p].append((c, r))
        return cls(
            {k: frozenset(v) for k, v in sup.items()}, closed_sp,
            {k: frozenset(v) for k, v in dom.items()}, {k: frozenset(v) for k, v in rng.items()},
            frozenset(trans), dict(inter), dict(by_filler), dict(by_prop),
            {k: frozenset(v) for k, v in disj.items()},
        )

    def conflicts(self, type_triples) -> set:
        types = defaultdict(set)
        for s, _, c in type_triples:
            types[s].add(c)
        return {s for s, cs in types.items() if any(self.disjoint.get(c, frozenset()) & cs for c in cs)}

    def abox_closure(self, fluents: Iterable[tuple]) -> frozenset:
        """Close a set of ``("tf", s, p, o)`` fluents under the state-level
        rules: subsumption, subproperties, domain, range, transitivity,
        binary intersection, existential restriction and disjointness.  The
        result contains ``FALSE_FLUENT`` when two disjoint types meet."""
        facts: set = set()
        types = defaultdict(set)
        out_edges = defaultdict(set)  # (s, p) -> objects
        in_edges = defaultdict(set)   # (o, p) -> subjects
        by_obj = defaultdict(set)     # o -> {(s, p)}
        inconsistent = False
        todo = [f[1:] for f in fluents if f[0] == "tf"]
        while todo:
            t = todo.pop()
            if t in facts:
                continue
            facts.add(t)
            s, p, o = t
            if p == RDF_TYPE:
                types[s].add(o)
                for c in self.sup.get(o, ()):
                    todo.append((s, RDF_TYPE, c))
                for c, other in self.inter_by_member.get(o, ()):
                    if other in types[s]:
                        todo.append((s, RDF_TYPE, c))
                for c, prop in self.exist_by_filler.get(o, ()):
                    for x in in_edges.get((s, prop), ()):
                        todo.append((x, RDF_TYPE, c))
                if self.disjoint.get(o, frozenset()) & types[s]:
                    inconsistent = True
            else:
                out_edges[(s, p)].add(o)
                in_edges[(o, p)].add(s)
                by_obj[o].add((s, p))
                for q in self.superprop.get(p, ()):
                    todo.append((s, q, o))
                for c in self.domain.get(p, ()):
                    todo.append((s, RDF_TYPE, c))
                for c in self.range.get(p, ()):
                    todo.append((o, RDF_TYPE, c))
                if p in self.transitive:
                    for z in list(out_edges.get((o, p), ())):
                        todo.append((s, p, z))
                    for x in list(in_edges.get((s, p), ())):
                        todo.append((x, p, o))
                for c, r in self.exist_by_prop.get(p, ()):
                    if r in types[o]:
                        todo.append((s, RDF_TYPE, c))
        out = {("tf", *t) for t in facts}
        if inconsistent:
            out.add(FALSE_FLUENT)
        return frozenset(out)


# --- parsing ------------------------------------------------------------------

_COMMENT = re.compile(r"(?:^|\s)[#%].*$")
_PREFIX_LINE = re.compile(r"@prefix\s+([A-Za-z_][\w\-]*)?:\s*<([^>]*)>\s*\.?\s*$")
_DEFAULT_LINE = re.compile(r"@default\s+([A-Za-z_][\w\-]*:)?\s*$")
_TRIPLE_TOKEN = re.compile(r"\s*(<[^>\s]*>|\"(?:[^\"\\]|\\.)*\"|[()]|\.(?=\s*$)|[^\s()]+)")

_UNICODE = {"⊑": " subClassOf ", "⊓": " and ", "∃": " some ", "¬": " not ", "⊥": " Nothing ",
            "≡": " equivalentClass ", "⊤": " Thing ", "⁻": " ^- "}
_DL_TOKEN = re.compile(r"\s*(\^-|[().]|(?:[A-Za-z_][\w\-]*:)?[A-Za-z_][\w\-]*)")
_DL_KEYWORDS = {"subClassOf", "equivalentClass", "disjointWith", "subPropertyOf", "and",
                "some", "not", "Nothing", "Thing", "inverse", "transitive", "domain", "range", "class"}


@dataclass(frozen=True)
class Some:
    prop: str
    filler: object
    inverse: bool = False


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    arg: object


def concept_text(c) -> str:
    if isinstance(c, str):
        return c
    if isinstance(c, And):
        return f"({concept_text(c.left)} and {concept_text(c.right)})"
    if isinstance(c, Some):
        prop = f"inverse({c.prop})" if c.inverse else c.prop
        return f"some {prop}.{concept_text(c.filler)}"
    if isinstance(c, Not):
        return f"not {concept_text(c.arg)}"
    raise TypeError(c)


class _DLParser:
    def __init__(self, text: str, default: str, line: int | None):
        for k, v in _UNICODE.items():
            text = text.replace(k, v)
        self.line = line
        self.default = default
        self.toks = []
        i = 0
        text = text.rstrip()
        while i < len(text):
            m = _DL_TOKEN.match(text, i)
            if not m:
                if text[i:].strip() == "":
                    break
                raise ParseError(f"unexpected character {text[i]!r}", i, line)
            self.toks.append(m.group(1))
            i = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        t = self.peek()
        if t is None or (expected is not None and t != expected):
            raise ParseError(f"expected {expected or 'a token'!r}, found {t or 'end of line'!r}", None, self.line)
        self.i += 1
        return t

    def name(self) -> str:
        t = self.take()
        if t in _DL_KEYWORDS or t in ("(", ")", ".", "^-"):
            raise ParseError(f"expected a name, found {t!r}", None, self.line)
        return t if ":" in t else self.default + t

    def role(self) -> tuple[str, bool]:
        if self.peek() == "inverse":
            self.take()
            self.take("(")
            p = self.name()
            self.take(")")
            return p, True
        p = self.name()
        if self.peek() == "^-":
            self.take()
            return p, True
        return p, False

    def concept(self):
        c = self.unary()
        while self.peek() == "and":
            self.take()
            c = And(c, self.unary())
        return c

    def unary(self):
        t = self.peek()
        if t == "(":
            self.take()
            c = self.concept()
            self.take(")")
            return c
        if t == "not":
            self.take()
            return Not(self.unary())
        if t == "some":
            self.take()
            p, inv = self.role()
            if self.peek() == ".":
                self.take()
                filler = self.unary()
            else:
                filler = THING
            return Some(p, filler, inv)
        if t == "Nothing":
            self.take()
            return NOTHING
        if t == "Thing":
            self.take()
            return THING
        return self.name()

    def done(self):
        if self.peek() is not None:
            raise ParseError(f"trailing input {self.peek()!r}", None, self.line)


class Normalizer:
    """Turns class expressions into named classes plus defining triples."""

    def __init__(self):
        self.triples: list[Triple] = []
        self._names: dict = {}

    def emit(self, *t):
        self.triples.append(tuple(t))

    def name_of(self, c) -> str:
        if isinstance(c, str):
            return c
        if c in self._names:
            return self._names[c]
        if isinstance(c, Not):
            raise ParseError(f"negated class {concept_text(c)} can only appear on the right of subClassOf")
        node = "_:" + re.sub(r"\s+", "_", concept_text(c))
        self._names[c] = node
        if isinstance(c, And):
            self.emit(node, INTERSECTION, (self.name_of(c.left), self.name_of(c.right)))
        else:
            if c.inverse:
                raise ParseError("inverse roles are only supported as 'some P^- subClassOf C'")
            self.emit(node, SOME, self.name_of(c.filler))
            self.emit(node, ON_PROP, c.prop)
        return node

    def subclass(self, lhs, rhs) -> None:
        if isinstance(rhs, And):
            self.subclass(lhs, rhs.left)
            self.subclass(lhs, rhs.right)
            return
        if rhs == NOTHING:
            if isinstance(lhs, And):
                self.emit(self.name_of(lhs.left), DISJOINT, self.name_of(lhs.right))
                return
            raise ParseError(f"unsupported axiom {concept_text(lhs)} subClassOf Nothing")
        if isinstance(rhs, Not):
            self.emit(self.name_of(lhs), DISJOINT, self.name_of(rhs.arg))
            return
        if isinstance(lhs, Some) and lhs.filler == THING:
            self.emit(lhs.prop, RANGE if lhs.inverse else DOMAIN, self.name_of(rhs))
            return
        self.emit(self.name_of(lhs), SUBCLASS, self.name_of(rhs))


def parse_concept(text: str, normalizer: Normalizer, default_prefix: str = "", line: int | None = None) -> str:
    """Parse a class expression and return the name standing for it."""
    p = _DLParser(text, default_prefix, line)
    c = p.concept()
    p.done()
    return normalizer.name_of(c)


def _dl_axiom(text: str, norm: Normalizer, default: str, line: int) -> None:
    p = _DLParser(text, default, line)
    if p.peek() == "class":
        p.take()
        while p.peek() is not None:
            norm.emit(p.name(), RDF_TYPE, "owl:Class")
        return
    if p.peek() == "transitive":
        p.take()
        norm.emit(p.name(), RDF_TYPE, TRANSITIVE)
        p.done()
        return
    # role axioms: "P subPropertyOf Q", "P domain C", "P range C"
    if len(p.toks) >= 3 and p.toks[1] in ("subPropertyOf", "domain", "range"):
        prop = p.name()
        kw = p.take()
        if kw == "subPropertyOf":
            norm.emit(prop, SUBPROP, p.name())
        else:
            norm.emit(prop, DOMAIN if kw == "domain" else RANGE, norm.name_of(p.concept()))
        p.done()
        return
    lhs = p.concept()
    kw = p.take()
    rhs = p.concept()
    p.done()
    if kw == "subClassOf":
        norm.subclass(lhs, rhs)
    elif kw == "equivalentClass":
        a, b = norm.name_of(lhs), norm.name_of(rhs)
        norm.emit(a, EQUIV, b)
        norm.subclass(a, b)
        norm.subclass(b, a)
    elif kw == "disjointWith":
        norm.emit(norm.name_of(lhs), DISJOINT, norm.name_of(rhs))
    else:
        raise ParseError(f"unknown axiom keyword {kw!r}", None, line)


def _triple_line(text: str, prefixes: dict, line: int) -> Triple:
    toks = _TRIPLE_TOKEN.findall(text)
    if not toks or toks[-1] != ".":
        raise ParseError("triple must end with ' .'", None, line)
    toks = toks[:-1]

    def term(t, predicate=False):
        if t.startswith("<") and t.endswith(">"):
            iri = t[1:-1]
            for p, base in prefixes.items():
                if base and iri.startswith(base):
                    return f"{p}:{iri[len(base):]}"
            return t
        if t == "a" and predicate:
            return RDF_TYPE
        if ":" in t and not t.startswith(("_:", '"')):
            pfx = t.split(":", 1)[0]
            if prefixes and pfx not in prefixes and pfx not in ("rdf", "rdfs", "owl", "xsd"):
                raise ParseError(f"undeclared prefix {pfx!r}", None, line)
        return t

    if len(toks) >= 3 and toks[2] == "(":
        if toks[-1] != ")":
            raise ParseError("unterminated list", None, line)
        s, p = term(toks[0]), term(toks[1], True)
        o = tuple(term(t) for t in toks[3:-1])
    elif len(toks) == 3:
        s, p, o = term(toks[0]), term(toks[1], True), term(toks[2])
    else:
        raise ParseError(f"expected 'subject predicate object .', got {len(toks)} terms", None, line)
    check_predicate(p, line)
    if p == INTERSECTION and (not isinstance(o, tuple) or len(o) != 2):
        raise ParseError("owl:intersectionOf takes a list of exactly two classes", None, line)
    return (s, p, o)


def load_triples(text: str) -> TripleStore:
    """Load a triple file and/or DL-shorthand axioms into an (unclosed) store."""
    prefixes: dict[str, str] = {}
    default = ""
    norm = Normalizer()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        m = _PREFIX_LINE.match(line)
        if m:
            prefixes[m.group(1) or ""] = m.group(2)
            continue
        m = _DEFAULT_LINE.match(line)
        if m:
            default = m.group(1) or ""
            continue
        if line.startswith("@"):
            raise ParseError(f"unknown directive {line.split()[0]!r}", None, lineno)
        if line.endswith(" .") or line.endswith(")."):
            norm.triples.append(_triple_line(line, prefixes, lineno))
        else:
            _dl_axiom(line, norm, default, lineno)
    asserted = set(norm.triples)
    for s, p, o in list(asserted):
        if p == EQUIV and isinstance(o, str):
            asserted |= {(s, SUBCLASS, o), (o, SUBCLASS, s)}
    return TripleStore(frozenset(asserted), None, tuple(sorted(prefixes.items())))
