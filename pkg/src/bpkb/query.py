"""SELECT-WHERE queries over a knowledge base.

Grammar::

    query   := SELECT ('<>' | ?var+) WHERE expr
    expr    := conj (OR conj)*
    conj    := unary (AND unary)*
    unary   := NOT unary | '(' expr ')' | '[' ctl '|' proc ']'
             | ?x '::' Concept | term '=' term | pred '(' arg, ... ')'
    arg     := ?x ['::' Concept] | constant

``?x::C`` inside an atom adds the condition that ``x`` is annotated with a
concept subsumed by ``C``.  CTL blocks use the formula syntax of
:func:`syntax.parse_formula` and are tested at the initial state of ``proc``.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import formula as F
from .ctl import Disj, HoldsLit, Lit, NegGroup
from .formula import Var
from .syntax import ParseError, TokenStream, formula_from_stream, quote_constant


@dataclass(frozen=True)
class Typed:
    var: Var
    concept: str


@dataclass(frozen=True)
class QAtom:
    pred: str
    args: tuple  # Var | Typed | str


@dataclass(frozen=True)
class QSigma:
    var: Var
    concept: str


@dataclass(frozen=True)
class QEq:
    left: object
    right: object


@dataclass(frozen=True)
class QCtl:
    formula: F.Formula
    process: object


@dataclass(frozen=True)
class QNot:
    arg: object


@dataclass(frozen=True)
class QAnd:
    items: tuple


@dataclass(frozen=True)
class QOr:
    items: tuple


@dataclass(frozen=True)
class QueryAst:
    select: tuple | None   # None for a boolean query
    where: object

    @property
    def boolean(self) -> bool:
        return self.select is None

    def conjuncts(self) -> tuple:
        return self.where.items if isinstance(self.where, QAnd) else (self.where,)


def _arg(ts: TokenStream):
    t = ts.next()
    if t.kind == "qvar":
        v = Var(t.text[1:])
        if ts.at("::"):
            ts.next()
            return Typed(v, _concept(ts))
        return v
    if t.kind == "quoted":
        return t.text[1:-1].replace("\\'", "'")
    if t.kind in ("name", "iri"):
        return t.text
    ts.fail(f"expected a variable or constant, found {t.text or 'end of input'!r}", t)


def _concept(ts: TokenStream) -> str:
    t = ts.next()
    if t.kind not in ("name", "iri"):
        ts.fail(f"expected a concept name, found {t.text or 'end of input'!r}", t)
    return t.text


def _primary(ts: TokenStream):
    t = ts.peek()
    if ts.at_kw("NOT"):
        ts.next()
        return QNot(_primary(ts))
    if ts.at("("):
        ts.next()
        e = _expr(ts)
        ts.expect(")")
        return e
    if ts.at("["):
        ts.next()
        f = formula_from_stream(ts, uppercase_vars=False)
        ts.expect("|")
        p = _arg(ts)
        if isinstance(p, Typed):
            ts.fail("a process selector cannot carry a concept", t)
        ts.expect("]")
        return QCtl(f, p)
    if t.kind == "qvar" and ts.at("::", 1):
        a = _arg(ts)
        if ts.at("="):
            ts.fail("typed variable cannot appear in an equality")
        return QSigma(a.var, a.concept)
    if t.kind == "name" and ts.at("(", 1) and t.text.upper() not in ("AND", "OR", "NOT", "WHERE", "SELECT"):
        ts.next()
        ts.next()
        args = [_arg(ts)]
        while ts.at(","):
            ts.next()
            args.append(_arg(ts))
        ts.expect(")")
        return QAtom(t.text, tuple(args))
    if t.kind in ("qvar", "name", "quoted", "iri") and ts.at("=", 1):
        left = _arg(ts)
        ts.expect("=")
        right = _arg(ts)
        if isinstance(right, Typed):
            ts.fail("typed variable cannot appear in an equality")
        return QEq(left, right)
    ts.fail(f"expected a condition, found {t.text or 'end of input'!r}", t)


def _conj(ts: TokenStream):
    items = [_primary(ts)]
    while ts.at_kw("AND"):
        ts.next()
        items.append(_primary(ts))
    return items[0] if len(items) == 1 else QAnd(tuple(items))


def _expr(ts: TokenStream):
    items = [_conj(ts)]
    while ts.at_kw("OR"):
        ts.next()
        items.append(_conj(ts))
    return items[0] if len(items) == 1 else QOr(tuple(items))


def parse_query(text: str) -> QueryAst:
    ts = TokenStream(text)
    if not ts.at_kw("SELECT"):
        ts.fail("query must start with SELECT")
    ts.next()
    if ts.at("<>"):
        ts.next()
        select = None
    else:
        vs = []
        while ts.peek().kind == "qvar":
            vs.append(Var(ts.next().text[1:]))
        if not vs:
            ts.fail("expected '<>' or a list of ?variables after SELECT")
        select = tuple(vs)
    if not ts.at_kw("WHERE"):
        ts.fail("expected WHERE")
    ts.next()
    if ts.done():
        ts.fail("empty WHERE clause")
    where = _expr(ts)
    if not ts.done():
        ts.fail(f"trailing input {ts.peek().text!r}")
    return QueryAst(select, where)


# --- printing --------------------------------------------------------------------


def _arg_text(a) -> str:
    if isinstance(a, Typed):
        return f"?{a.var.name}::{a.concept}"
    if isinstance(a, Var):
        return f"?{a.name}"
    return quote_constant(a)


def _ctl_text(f) -> str:
    return F.to_text(f, "query")


def _node_text(n, top=False) -> str:
    if isinstance(n, QAtom):
        return f"{n.pred}({', '.join(_arg_text(a) for a in n.args)})"
    if isinstance(n, QSigma):
        return f"?{n.var.name}::{n.concept}"
    if isinstance(n, QEq):
        return f"{_arg_text(n.left)} = {_arg_text(n.right)}"
    if isinstance(n, QCtl):
        return f"[{_ctl_text(n.formula)} | {_arg_text(n.process)}]"
    if isinstance(n, QNot):
        return f"NOT {_node_text(n.arg)}"
    if isinstance(n, QAnd):
        s = " AND ".join(_node_text(i) for i in n.items)
        return s if top else f"({s})"
    if isinstance(n, QOr):
        return "(" + " OR ".join(_node_text(i) for i in n.items) + ")"
    raise TypeError(n)


def print_query(q: QueryAst) -> str:
    sel = "<>" if q.select is None else " ".join(f"?{v.name}" for v in q.select)
    return f"SELECT {sel} WHERE {_node_text(q.where, top=True)}"


# --- translation -----------------------------------------------------------------


def _items(n) -> list:
    if isinstance(n, QAnd):
        return [i for m in n.items for i in _items(m)]
    if isinstance(n, QOr):
        return [Disj(tuple(tuple(_items(m)) for m in n.items))]
    if isinstance(n, QNot):
        inner = _items(n.arg)
        if len(inner) == 1 and isinstance(inner[0], Lit) and inner[0].positive:
            return [Lit(inner[0].pred, inner[0].args, False)]
        if len(inner) == 1 and isinstance(inner[0], HoldsLit) and inner[0].positive:
            return [HoldsLit(inner[0].formula, inner[0].process, False)]
        return [NegGroup(tuple(inner))]
    if isinstance(n, QAtom):
        args = tuple(a.var if isinstance(a, Typed) else a for a in n.args)
        extra = [Lit("sigma", (a.var, a.concept)) for a in n.args if isinstance(a, Typed)]
        return [Lit(n.pred, args)] + extra
    if isinstance(n, QSigma):
        return [Lit("sigma", (n.var, n.concept))]
    if isinstance(n, QEq):
        left = n.left.var if isinstance(n.left, Typed) else n.left
        extra = [Lit("sigma", (n.left.var, n.left.concept))] if isinstance(n.left, Typed) else []
        return [Lit("=", (left, n.right))] + extra
    if isinstance(n, QCtl):
        return [HoldsLit(n.formula, n.process)]
    raise TypeError(n)


def to_items(q: QueryAst) -> list:
    """The query body as a left-to-right list of retrieval items."""
    return _items(q.where)


def evaluate(q: QueryAst, kb):
    """Boolean queries give a bool; variable queries give the binding table."""
    from .services import retrieve

    rows = retrieve(to_items(q), kb, None if q.boolean else list(q.select))
    if q.boolean:
        return bool(rows)
    return rows


__all__ = ["QueryAst", "QAtom", "QSigma", "QEq", "QCtl", "QNot", "QAnd", "QOr", "Typed",
           "parse_query", "print_query", "to_items", "evaluate", "ParseError"]
