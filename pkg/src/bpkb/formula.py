"""Fluent expressions and CTL formulas.

Fluent expressions (``true``, fluents, ``not``, ``and``) are the fragment of
CTL formulas without temporal operators, so one tree type serves both.  Nodes
are frozen dataclasses: they hash structurally and can key memo tables.

Fluents themselves are plain tuples whose first item names the fluent kind::

    ("cf", from_el, to_el, proc)   control token on a sequence flow
    ("en", activity, proc)         activity under execution
    ("wrtn", activity, item, proc) item produced by activity
    ("tf", subject, predicate, object)  ontology assertion about individuals

Arguments are constant strings or :class:`Var` placeholders.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

FLUENT_ARITY = {"cf": 3, "en": 2, "wrtn": 3, "tf": 3}


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return self.name if self.name[:1].isupper() or self.name[:1] == "_" else "?" + self.name


Term = Union[str, Var]
Fluent = tuple

# distinguished fluent marking a contradiction derived in a state
FALSE_FLUENT: Fluent = ("false",)


@dataclass(frozen=True, slots=True)
class Top:
    pass


@dataclass(frozen=True, slots=True)
class Bottom:
    """``false``: holds in a state iff a contradiction is derivable there."""


@dataclass(frozen=True, slots=True)
class Atom:
    fluent: Fluent


@dataclass(frozen=True, slots=True)
class Final:
    process: Term


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class EX:
    arg: "Formula"


@dataclass(frozen=True, slots=True)
class EU:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class EG:
    arg: "Formula"


Formula = Union[Top, Bottom, Atom, Final, Not, And, EX, EU, EG]

TRUE = Top()
FALSE = Bottom()


def EF(f: Formula) -> EU:
    return EU(TRUE, f)


def AG(f: Formula) -> Not:
    return Not(EF(Not(f)))


def Or(a: Formula, b: Formula) -> Not:
    return Not(And(Not(a), Not(b)))


def conj(*fs: Formula) -> Formula:
    """Right-nested conjunction; ``conj()`` is ``true``."""
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def cf(a: Term, b: Term, p: Term) -> Atom:
    return Atom(("cf", a, b, p))


def en(a: Term, p: Term) -> Atom:
    return Atom(("en", a, p))


def wrtn(a: Term, i: Term, p: Term) -> Atom:
    return Atom(("wrtn", a, i, p))


def tf(s: Term, p: Term, o: Term) -> Atom:
    return Atom(("tf", s, p, o))


def children(f: Formula) -> tuple:
    if isinstance(f, (Not, EX, EG)):
        return (f.arg,)
    if isinstance(f, (And, EU)):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """Post-order walk (children before parents)."""
    for c in children(f):
        yield from subformulas(c)
    yield f


def is_temporal(f: Formula) -> bool:
    return any(isinstance(g, (EX, EU, EG)) for g in subformulas(f))


def fluent_vars(fl: Fluent) -> set[Var]:
    return {a for a in fl[1:] if isinstance(a, Var)}


def variables(f: Formula) -> set[Var]:
    out: set[Var] = set()
    for g in subformulas(f):
        if isinstance(g, Atom):
            out |= fluent_vars(g.fluent)
        elif isinstance(g, Final) and isinstance(g.process, Var):
            out.add(g.process)
    return out


def is_ground(f: Formula) -> bool:
    return not variables(f)


def subst_fluent(fl: Fluent, theta: dict) -> Fluent:
    return (fl[0],) + tuple(theta.get(a, a) if isinstance(a, Var) else a for a in fl[1:])


def substitute(f: Formula, theta: dict) -> Formula:
    if not theta:
        return f
    if isinstance(f, Atom):
        return Atom(subst_fluent(f.fluent, theta))
    if isinstance(f, Final):
        return Final(theta.get(f.process, f.process)) if isinstance(f.process, Var) else f
    if isinstance(f, (Not, EX, EG)):
        return type(f)(substitute(f.arg, theta))
    if isinstance(f, (And, EU)):
        return type(f)(substitute(f.left, theta), substitute(f.right, theta))
    return f


def grounding_atoms(f: Formula) -> list:
    """Elementary subformulas in grounding position.

    A fluent is grounding when reaching it from the root only passes through
    ``and`` (either side), ``EX``, the right side of ``EU`` and ``EG``; any
    negation or left side of ``EU`` breaks the chain.  ``final(P)`` is treated
    like a fluent here since it abbreviates ``cf(E, end, P)``.
    """
    if isinstance(f, (Atom, Final)):
        return [f]
    if isinstance(f, And):
        return grounding_atoms(f.left) + grounding_atoms(f.right)
    if isinstance(f, (EX, EG)):
        return grounding_atoms(f.arg)
    if isinstance(f, EU):
        return grounding_atoms(f.right)
    return []


def depth(f: Formula) -> int:
    cs = children(f)
    return 1 + max((depth(c) for c in cs), default=0)


# --- printing ------------------------------------------------------------


def _term(t: Term) -> str:
    if isinstance(t, Var):
        return repr(t)
    from .syntax import quote_constant

    return quote_constant(t)


def fluent_text(fl: Fluent, style: str = "prolog") -> str:
    if fl == FALSE_FLUENT:
        return "false"
    name = fl[0]
    if name == "tf" and style == "query":
        name = "t"
    return f"{name}({','.join(_term(a) for a in fl[1:])})"


def to_text(f: Formula, style: str = "prolog") -> str:
    """Render a formula.  ``prolog`` gives ``and(a,b)`` terms as used in
    annotation files, ``query`` gives the keyword syntax of CTL blocks."""
    q = style == "query"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Atom):
        return fluent_text(f.fluent, style)
    if isinstance(f, Final):
        return f"final({_term(f.process)})"
    if isinstance(f, Not):
        return f"NOT({to_text(f.arg, style)})" if q else f"not({to_text(f.arg, style)})"
    if isinstance(f, And):
        if q:
            return f"({to_text(f.left, style)} AND {to_text(f.right, style)})"
        return f"and({to_text(f.left, style)},{to_text(f.right, style)})"
    if isinstance(f, EX):
        return f"{'EX' if q else 'ex'}({to_text(f.arg, style)})"
    if isinstance(f, EG):
        return f"{'EG' if q else 'eg'}({to_text(f.arg, style)})"
    if isinstance(f, EU):
        return f"{'EU' if q else 'eu'}({to_text(f.left, style)},{to_text(f.right, style)})"
    raise TypeError(f"not a formula: {f!r}")
