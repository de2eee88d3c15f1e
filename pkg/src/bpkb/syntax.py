"""Tokenizer and recursive-descent parsers for the Prolog-like surface syntax.

Shared by the fact files (``.bps``), annotation files (``.ann``), the textual
CTL syntax and the SELECT-WHERE query language.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import formula as F
from .formula import Var


class ParseError(ValueError):
    def __init__(self, message: str, pos: int | None = None, line: int | None = None):
        self.pos = pos
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if pos is not None:
            where.append(f"col {pos + 1}")
        super().__init__(f"{message}" + (f" ({', '.join(where)})" if where else ""))


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<qvar>\?[A-Za-z_]\w*)
  | (?P<name>(?:[A-Za-z_]\w*)?:[A-Za-z_][\w\-]*|[A-Za-z_]\w*|\d+)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<iri><[^<>\s]+>)
  | (?P<punct>::|<>|[()\[\],|=.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # name | quoted | qvar | iri | punct | eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", pos=i)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), i))
        i = m.end()
    out.append(Token("eof", "", len(text)))
    return out


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __repr__(self) -> str:
        return f"{self.functor}({', '.join(map(repr, self.args))})"


_PLAIN = re.compile(r"(?:[A-Za-z_]\w*)?:[A-Za-z_][\w\-]*|[a-z]\w*|\d+")


def quote_constant(c: str) -> str:
    if _PLAIN.fullmatch(c):
        return c
    return "'" + c.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


class TokenStream:
    def __init__(self, text: str, line: int | None = None):
        self.text = text
        self.line = line
        try:
            self.toks = tokenize(text)
        except ParseError as e:
            raise ParseError(str(e).split(" (")[0], e.pos, line) from None
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i = min(self.i + 1, len(self.toks) - 1)
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("punct", "name") and t.text == text

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "name" and t.text.upper() == word

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text or t.kind not in ("punct", "name"):
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.pos, self.line)

    def done(self) -> bool:
        return self.peek().kind == "eof"


def _is_var_name(text: str, uppercase_vars: bool) -> bool:
    return uppercase_vars and ":" not in text and (text[0].isupper() or text[0] == "_")


def parse_term(ts: TokenStream, uppercase_vars: bool = True):
    """term := VAR | constant | name '(' term, ... ')' | '[' term, ... ']'"""
    t = ts.next()
    if t.kind == "qvar":
        return Var(t.text[1:])
    if t.kind == "quoted":
        return _unquote(t.text)
    if t.kind == "iri":
        return t.text
    if t.kind == "punct" and t.text == "[":
        items = []
        if not ts.at("]"):
            items.append(parse_term(ts, uppercase_vars))
            while ts.at(","):
                ts.next()
                items.append(parse_term(ts, uppercase_vars))
        ts.expect("]")
        return items
    if t.kind != "name":
        ts.fail(f"unexpected {t.text or 'end of input'!r}", t)
    if ts.at("("):
        ts.next()
        args = []
        if not ts.at(")"):
            args.append(parse_term(ts, uppercase_vars))
            while ts.at(","):
                ts.next()
                args.append(parse_term(ts, uppercase_vars))
        ts.expect(")")
        return Compound(t.text, tuple(args))
    if _is_var_name(t.text, uppercase_vars):
        return Var(t.text)
    return t.text


def parse_fact_line(text: str, line: int | None = None) -> Compound:
    ts = TokenStream(text, line)
    term = parse_term(ts)
    if ts.at("."):
        ts.next()
    if not ts.done():
        ts.fail(f"trailing input {ts.peek().text!r}")
    if not isinstance(term, Compound):
        raise ParseError(f"expected a fact pred(arg, ...), got {term!r}", 0, line)
    return term


# --- formulas ----------------------------------------------------------------

_FLUENTS = {"cf": ("cf", 3), "en": ("en", 2), "wrtn": ("wrtn", 3), "tf": ("tf", 3), "t": ("tf", 3)}
_UNARY = {"NOT": F.Not, "EX": F.EX, "EG": F.EG, "EF": F.EF, "AG": F.AG}
_BINARY = {"AND": F.And, "OR": F.Or, "EU": F.EU}


def _simple_arg(ts: TokenStream, uppercase_vars: bool):
    tok = ts.peek()
    arg = parse_term(ts, uppercase_vars)
    if isinstance(arg, (Compound, list)):
        ts.fail("fluent arguments must be constants or variables", tok)
    return arg


def _formula_primary(ts: TokenStream, uv: bool) -> F.Formula:
    t = ts.peek()
    if ts.at("("):
        ts.next()
        f = _formula_or(ts, uv)
        ts.expect(")")
        return f
    if t.kind != "name":
        ts.fail(f"expected a formula, found {t.text or 'end of input'!r}", t)
    word = t.text
    up = word.upper()
    if up == "NOT":
        ts.next()
        return F.Not(_formula_unary(ts, uv))
    if up in ("TRUE", "FALSE") and not ts.at("(", 1):
        ts.next()
        return F.TRUE if up == "TRUE" else F.FALSE
    if not ts.at("(", 1):
        ts.fail(f"expected a formula, found {word!r}", t)
    ts.next()
    ts.next()
    if up in _UNARY:
        f = _formula_or(ts, uv)
        ts.expect(")")
        return _UNARY[up](f)
    if up in _BINARY:
        a = _formula_or(ts, uv)
        ts.expect(",")
        b = _formula_or(ts, uv)
        ts.expect(")")
        return _BINARY[up](a, b)
    if word == "final":
        p = _simple_arg(ts, uv)
        ts.expect(")")
        return F.Final(p)
    if word in _FLUENTS:
        kind, arity = _FLUENTS[word]
        args = [_simple_arg(ts, uv)]
        while ts.at(","):
            ts.next()
            args.append(_simple_arg(ts, uv))
        ts.expect(")")
        if len(args) != arity:
            ts.fail(f"{word} expects {arity} arguments, got {len(args)}", t)
        return F.Atom((kind, *args))
    ts.fail(f"unknown elementary property {word!r}", t)


def _formula_unary(ts: TokenStream, uv: bool) -> F.Formula:
    if ts.at_kw("NOT") and not ts.at("(", 1):
        ts.next()
        return F.Not(_formula_unary(ts, uv))
    return _formula_primary(ts, uv)


def _formula_and(ts: TokenStream, uv: bool) -> F.Formula:
    parts = [_formula_unary(ts, uv)]
    while ts.at_kw("AND"):
        ts.next()
        parts.append(_formula_unary(ts, uv))
    return F.conj(*parts)


def _formula_or(ts: TokenStream, uv: bool) -> F.Formula:
    f = _formula_and(ts, uv)
    while ts.at_kw("OR"):
        ts.next()
        f = F.Or(f, _formula_and(ts, uv))
    return f


def formula_from_stream(ts: TokenStream, uppercase_vars: bool = True) -> F.Formula:
    return _formula_or(ts, uppercase_vars)


def parse_formula(text: str, uppercase_vars: bool = True) -> F.Formula:
    """Parse a fluent expression or CTL formula.

    Accepts both ``and(not(en(a,p)), true)`` and ``NOT en(a,p) AND true``.
    Variables are ``?x`` and, when ``uppercase_vars`` is set, identifiers
    starting with an uppercase letter.
    """
    ts = TokenStream(text)
    f = _formula_or(ts, uppercase_vars)
    if not ts.done():
        ts.fail(f"trailing input {ts.peek().text!r}")
    return f


def term_to_formula(term) -> F.Formula:
    """Convert a generic parsed term (from :func:`parse_term`) to a formula."""
    if isinstance(term, str):
        if term == "true":
            return F.TRUE
        if term == "false":
            return F.FALSE
        raise ParseError(f"expected a formula, got constant {term!r}")
    if isinstance(term, Var) or isinstance(term, list):
        raise ParseError(f"expected a formula, got {term!r}")
    name, args = term.functor, term.args
    up = name.upper()
    if up in _UNARY and len(args) == 1:
        return _UNARY[up](term_to_formula(args[0]))
    if up in _BINARY and len(args) == 2:
        return _BINARY[up](term_to_formula(args[0]), term_to_formula(args[1]))
    if name == "final" and len(args) == 1:
        return F.Final(_check_simple(args[0]))
    if name in _FLUENTS:
        kind, arity = _FLUENTS[name]
        if len(args) != arity:
            raise ParseError(f"{name} expects {arity} arguments, got {len(args)}")
        return F.Atom((kind, *(_check_simple(a) for a in args)))
    raise ParseError(f"unknown elementary property {name!r}")


def term_to_fluent(term) -> tuple:
    f = term_to_formula(term)
    if not isinstance(f, F.Atom):
        raise ParseError(f"expected a fluent, got {term!r}")
    return f.fluent


def _check_simple(a):
    if isinstance(a, (Compound, list)):
        raise ParseError(f"fluent arguments must be constants or variables, got {a!r}")
    return a
