import random

import pytest

from bpkb import formula as F
from bpkb.annotation import (Effect, GuardedFlow, Precondition, TermAnnotation, parse_annotations,
                             validate_annotations)
from bpkb.formula import Var
from bpkb.syntax import ParseError


def parse(ho, text):
    return parse_annotations(text, ho.schema, ho.ctx.store)


def rules(ho, text):
    return validate_annotations(parse(ho, text), ho.schema, ho.ctx.store).rules()


def test_precondition(ho):
    a = parse(ho, "pre(accept_order, tf(O,rdf:type,bro:Purchase_Order), ordering)")
    assert a.preconditions == (
        Precondition("accept_order", F.tf(Var("O"), "rdf:type", "bro:Purchase_Order"), "ordering"),)


def test_guard_and_implied_edge(ho):
    a = parse(ho, "c_seq(tf(O,rdf:type,bro:ApprovedPO), g1, g3, ho)")
    assert a.guards == (GuardedFlow(F.tf(Var("O"), "rdf:type", "bro:ApprovedPO"), "g1", "g3", "ho"),)
    assert a.implied_seq() == {("g1", "g3", "ho")}


def test_term_reference(ho):
    a = parse(ho, "@default bro:\ntermRef(order, Purchase_Order)")
    assert a.terms == (TermAnnotation("order", "bro:Purchase_Order", "Purchase_Order"),)


def test_complex_concept_is_named(ho):
    a = parse(ho, "@default bro:\ntermRef(delivering, Transportation and some related.Product)")
    (t,) = a.terms
    assert t.concept.startswith("_:")
    assert any(s == t.concept for s, _, _ in a.triples)


@pytest.mark.parametrize("text", [
    "pre(nosuch, true, ho)",
    "pre(accept_order, true, nowhere)",
    "pre(accept_order, tf(o,x",
    "eff(accept_order, true, [tf(o,rdf:type,c)], ordering)",
])
def test_parse_errors(ho, text):
    with pytest.raises(ParseError):
        parse(ho, text)


def test_overlapping_effect(ho):
    text = "eff(accept_order, true, [tf(o,rdf:type,bro:Order)], [tf(o,rdf:type,bro:Order)], ordering)"
    assert rules(ho, text) == {"ann:effect-overlap"}


def test_unbound_effect_variable(ho):
    text = "eff(accept_order, true, [], [tf(X,rdf:type,bro:Order)], ordering)"
    assert rules(ho, text) == {"ann:effect-variable"}


def test_guard_on_task(ho):
    assert rules(ho, "c_seq(true, accept_order, g3, ho)") == {"ann:guard-target"}


def test_unknown_concept(ho):
    assert rules(ho, "@default bro:\ntermRef(order, Nonesuch)") == {"ann:unknown-concept"}
    assert rules(ho, "pre(accept_order, tf(O,rdf:type,bro:Nonesuch), ordering)") == {"ann:unknown-concept"}


def test_check_inventory_rows_clean(ho):
    a = ho.ctx.annotations
    rows = a.eff_for("check_inventory", "ordering")
    assert len(rows) == 2
    assert rows[1] == Effect("check_inventory", F.TRUE, (), (), "ordering")
    assert validate_annotations(a, ho.schema, ho.ctx.store).ok


def test_bundled_annotations_clean(ho):
    assert validate_annotations(ho.ctx.annotations, ho.schema, ho.ctx.store).ok


def test_round_trip(ho):
    a = ho.ctx.annotations
    again = parse(ho, a.to_text())
    assert again.records() == a.records()
    assert parse(ho, again.to_text()).records() == again.records()


def test_effect_order_preserved(ho):
    rng = random.Random(2)
    lines = [f"eff(payment, true, [], [tf(i{k},rdf:type,bro:Invoice)], ho)" for k in range(6)]
    rng.shuffle(lines)
    a = parse(ho, "\n".join(lines))
    got = [e.positive[0][1] for e in a.eff_for("payment", "ho")]
    assert got == [line.split("tf(")[1].split(",")[0] for line in lines]
    assert [e.positive[0][1] for e in parse(ho, a.to_text()).eff_for("payment", "ho")] == got
