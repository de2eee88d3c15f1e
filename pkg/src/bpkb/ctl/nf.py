"""Static check that a query cannot flounder.

A query is a conjunction (possibly with disjunctions and negations) of
literals.  ``HoldsLit`` is a CTL test at the initial state of a process;
every other literal is a ``Lit`` over knowledge-base predicates.  Variables
are bound left to right: by positive ordinary literals, and by fluents in
grounding position inside a positive ``HoldsLit``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .. import formula as F
from ..formula import Var


@dataclass(frozen=True)
class Lit:
    pred: str
    args: tuple
    positive: bool = True


@dataclass(frozen=True)
class HoldsLit:
    formula: F.Formula
    process: object  # constant or Var
    positive: bool = True


@dataclass(frozen=True)
class Disj:
    branches: tuple  # each a tuple of items


@dataclass(frozen=True)
class NegGroup:
    body: tuple  # negated conjunction


@dataclass(frozen=True)
class Reason:
    rule: str        # well-modedness | grounding-subformula | unsafe-negation
    location: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.location}"


@dataclass(frozen=True)
class NFReport:
    verdict: str
    reasons: tuple = ()

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"

    def to_json(self) -> dict:
        return {"verdict": self.verdict,
                "reasons": [{"rule": r.rule, "location": r.location} for r in self.reasons]}


def _vars(args) -> set:
    return {a for a in args if isinstance(a, Var)}


def _lit_text(lit) -> str:
    if isinstance(lit, HoldsLit):
        s = f"holds({F.to_text(lit.formula)}, s0({lit.process!r}))"
    elif isinstance(lit, Lit):
        s = f"{lit.pred}({', '.join(map(repr, lit.args))})"
    else:
        s = repr(lit)
    return s if getattr(lit, "positive", True) else "not " + s


def fluent_variables(f: F.Formula) -> set:
    return F.variables(f)


def grounding_variables(f: F.Formula) -> set:
    out = set()
    for a in F.grounding_atoms(f):
        if isinstance(a, F.Atom):
            out |= F.fluent_vars(a.fluent)
        elif isinstance(a.process, Var):
            out.add(a.process)
    return out


def _check(items, bound: set, reasons: list) -> set:
    bound = set(bound)
    for it in items:
        if isinstance(it, Disj):
            outs = [_check(b, bound, reasons) for b in it.branches]
            bound = set.intersection(*outs) if outs else bound
        elif isinstance(it, NegGroup):
            free = set()
            _collect(it.body, free)
            for v in sorted(free - bound, key=repr):
                reasons.append(Reason("unsafe-negation", f"{v!r} is unbound in negated group"))
        elif isinstance(it, HoldsLit):
            loc = _lit_text(it)
            if isinstance(it.process, Var) and it.process not in bound:
                reasons.append(Reason("well-modedness", f"{it.process!r} in the state argument of {loc} is not bound earlier"))
            fvs = F.variables(it.formula)
            if not it.positive:
                for v in sorted(fvs - bound, key=repr):
                    reasons.append(Reason("unsafe-negation", f"{v!r} is unbound in {loc}"))
                continue
            grounding = grounding_variables(it.formula)
            for v in sorted(fvs - bound - grounding, key=repr):
                reasons.append(Reason("grounding-subformula",
                                      f"first occurrence of {v!r} in {loc} is not in a grounding subformula"))
            bound |= grounding
        elif isinstance(it, Lit):
            vs = _vars(it.args)
            if not it.positive:
                for v in sorted(vs - bound, key=repr):
                    reasons.append(Reason("unsafe-negation", f"{v!r} is unbound in {_lit_text(it)}"))
            elif it.pred == "=":
                if all(isinstance(a, Var) and a not in bound for a in it.args):
                    reasons.append(Reason("well-modedness", f"both sides of {_lit_text(it)} are unbound"))
                else:
                    bound |= vs
            else:
                bound |= vs
        else:
            raise TypeError(f"not a query item: {it!r}")
    return bound


def _collect(items, out: set) -> None:
    for it in items:
        if isinstance(it, Disj):
            for b in it.branches:
                _collect(b, out)
        elif isinstance(it, NegGroup):
            _collect(it.body, out)
        elif isinstance(it, HoldsLit):
            out |= F.variables(it.formula)
            if isinstance(it.process, Var):
                out.add(it.process)
        elif isinstance(it, Lit):
            out |= _vars(it.args)


def validate_nf(query) -> NFReport:
    """Accept a query (sequence of items, or a single formula checked as
    ``holds(f, s0(p))`` with a ground process) when it is well-moded and every
    variable is first bound positively in a grounding position."""
    if isinstance(query, (Lit, HoldsLit, Disj, NegGroup)):
        query = [query]
    elif not isinstance(query, (list, tuple)):
        query = [HoldsLit(query, "_")]
    reasons: list[Reason] = []
    _check(list(query), set(), reasons)
    uniq = tuple(dict.fromkeys(reasons))
    return NFReport("rejected" if uniq else "accepted", uniq)
