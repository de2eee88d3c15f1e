import pytest
from hypothesis import given, settings, strategies as st

from bpkb import formula as F
from bpkb.ctl import validate_nf
from bpkb.datasets import read
from bpkb.formula import Var
from bpkb.query import (QAnd, QAtom, QCtl, QEq, QNot, QOr, QSigma, QueryAst, Typed, evaluate, parse_query,
                        print_query, to_items)
from bpkb.syntax import ParseError

COMPLIANCE = read("handle_order/compliance.qbpal")
SECOND = read("handle_order/order_then_carrier.qbpal")


def test_boolean_query_with_ctl_block():
    q = parse_query(COMPLIANCE)
    assert q.boolean
    (block,) = q.conjuncts()
    assert isinstance(block, QCtl) and block.process == "ho"
    assert isinstance(block.formula, F.EU)


def test_selecting_query():
    q = parse_query(SECOND)
    assert q.select == (Var("a"), Var("p"))
    parts = q.conjuncts()
    assert len(parts) == 5
    assert [type(c) for c in parts].count(QCtl) == 1
    assert parts[0] == QAtom("output", (Var("a"), Typed(Var("i"), "bro:Purchase_Order"), Var("p")))


@pytest.mark.parametrize("text", ["SELECT ?x WHERE", "SELECT WHERE task(?x)", "SELECT ?x task(?x)",
                                  "SELECT ?x WHERE task(?x", "SELECT ?x WHERE [EF(en(?x,p)) | p"])
def test_syntax_errors(text):
    with pytest.raises(ParseError):
        parse_query(text)


def test_error_carries_position():
    with pytest.raises(ParseError, match="col"):
        parse_query("SELECT ?x WHERE")


def test_example_queries_pass_nf():
    for text in (COMPLIANCE, SECOND):
        assert validate_nf(to_items(parse_query(text))).accepted


def test_compliance_query_matches(ho):
    assert evaluate(parse_query(COMPLIANCE), ho) is True


def test_typed_atom_adds_annotation_check(ho):
    rows = evaluate(parse_query("SELECT ?a WHERE task(?a::bro:Transportation)"), ho)
    assert [r[Var("a")] for r in rows] == ["delivering"]


def test_or_and_not(ho):
    q = parse_query("SELECT ?a WHERE task(?a) AND (?a = delivering OR ?a = payment) AND NOT ?a = payment")
    assert [r[Var("a")] for r in evaluate(q, ho)] == ["delivering"]


# --- round trip -----------------------------------------------------------------

names = st.sampled_from(["a", "b", "x1", "order"])
consts = st.sampled_from(["ho", "s", "bro:Carrier", "create_order", "two words"])
qvars = names.map(Var)
concepts = st.sampled_from(["bro:Carrier", "bro:Purchase_Order", "Thing"])
args = st.one_of(qvars, consts, st.builds(Typed, qvars, concepts))
plain = st.one_of(qvars, consts)

atoms = st.one_of(
    st.builds(lambda a, p: F.en(a, p), plain, plain),
    st.builds(lambda a, b, p: F.cf(a, b, p), plain, plain, plain),
    st.builds(lambda s, o: F.tf(s, "rdf:type", o), plain, plain),
    st.builds(F.Final, plain),
    st.just(F.TRUE),
)
ctl = st.recursive(atoms, lambda sub: st.one_of(
    st.builds(F.Not, sub), st.builds(F.And, sub, sub), st.builds(F.EX, sub),
    st.builds(F.EU, sub, sub), st.builds(F.EG, sub)), max_leaves=6)

leaves = st.one_of(
    st.builds(lambda p, xs: QAtom(p, tuple(xs)), st.sampled_from(["task", "seq", "reachable", "assigned"]),
              st.lists(args, min_size=1, max_size=3)),
    st.builds(QSigma, qvars, concepts),
    st.builds(QEq, plain, plain),
    st.builds(QCtl, ctl, plain),
)
nodes = st.recursive(leaves, lambda sub: st.one_of(
    st.builds(QNot, sub),
    st.lists(sub, min_size=2, max_size=3).map(lambda xs: QAnd(tuple(xs))),
    st.lists(sub, min_size=2, max_size=3).map(lambda xs: QOr(tuple(xs)))), max_leaves=8)
queries = st.builds(QueryAst, st.one_of(st.none(), st.lists(qvars, min_size=1, max_size=3).map(tuple)), nodes)


@settings(max_examples=300, deadline=None)
@given(queries)
def test_print_parse_round_trip(q):
    once = parse_query(print_query(q))
    assert parse_query(print_query(once)) == once
    assert once == q
