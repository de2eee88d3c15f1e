import random

import pytest
from hypothesis import given, settings, strategies as st

from bpkb.datasets import handle_order_paths
from bpkb.model import (UnknownProcessError, n_reachable, parse_process_facts, schema_from_facts,
                        seq_plus, well_formedness)
from bpkb.syntax import ParseError
from conftest import MINIMAL
from oracles import dfs_paths_exist


def edges(*pairs, p="p"):
    return schema_from_facts([("bp", (p, "s", "e"))] + [("seq", (a, b, p)) for a, b in pairs])


def test_minimal_schema():
    s = parse_process_facts(MINIMAL)
    assert s.process_ids == ("p",)
    assert set(s.nodes["p"]) == {"s", "e"}
    assert s.successors("s", "p") == ("e",)
    assert well_formedness(s).ok


def test_handle_order_parses():
    s = parse_process_facts(handle_order_paths()["bps"].read_text())
    assert "ho" in s.bp
    assert "ordering" in s.comp
    assert {f"g{i}" for i in range(1, 11)} <= set(s.kinds)
    assert well_formedness(s).ok, well_formedness(s).to_json()


def test_seq_arity_error():
    with pytest.raises(ParseError, match="arity"):
        parse_process_facts("seq(a,b)")


def test_unknown_predicate_reports_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_process_facts("bp(p,s,e)\nfoo(x)")


def test_variables_rejected():
    with pytest.raises(ParseError):
        parse_process_facts("seq(X,b,p)")


def test_missing_end_event_violates_uniqueness():
    s = parse_process_facts("bp(p,s,e)\nstart_event(s)\nseq(s,e,p)\n")
    assert "1" in well_formedness(s).rules()


def test_branch_with_one_successor():
    s = parse_process_facts("bp(p,s,e)\nstart_event(s)\nend_event(e)\nexc_branch(g)\ntask(a)\n"
                            "seq(s,g,p)\nseq(g,a,p)\nseq(a,e,p)\n")
    assert well_formedness(s).rules() == {"4"}


def test_activity_event_disjointness():
    s = parse_process_facts(MINIMAL + "task(s)\n")
    assert not well_formedness(s).ok


def test_seq_plus_examples():
    assert seq_plus("a", "b", "p", edges(("a", "b")))
    assert seq_plus("a", "c", "p", edges(("a", "b"), ("b", "c")))
    assert not seq_plus("b", "a", "p", edges(("a", "b")))


def test_process_filter():
    s = schema_from_facts([("bp", ("p", "s", "e")), ("bp", ("q", "s2", "e2")),
                           ("seq", ("a", "b", "p")), ("seq", ("b", "c", "q"))])
    assert not seq_plus("a", "c", "p", s)


def test_unknown_process():
    with pytest.raises(UnknownProcessError):
        seq_plus("a", "b", "nope", edges(("a", "b")))


def test_n_reachable_examples():
    assert n_reachable("a", "b", "c", "p", edges(("a", "b")))
    assert not n_reachable("a", "b", "m", "p", edges(("a", "m"), ("m", "b")))
    assert n_reachable("a", "a", "c", "p", edges(("a", "b"), ("b", "a")))
    assert not n_reachable("a", "b", "b", "p", edges(("a", "b")))


def test_wellformedness_order_independent(ho):
    facts = ho.schema.facts()
    base = well_formedness(schema_from_facts(facts)).to_json()
    broken = facts + [("task", ("orphan",))]
    ref = sorted(map(str, well_formedness(schema_from_facts(broken)).to_json()))
    assert base == []
    rng = random.Random(3)
    for _ in range(5):
        rng.shuffle(broken)
        assert sorted(map(str, well_formedness(schema_from_facts(broken)).to_json())) == ref


graphs = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), max_size=30)


@settings(max_examples=200, deadline=None)
@given(graphs, st.integers(0, 11), st.integers(0, 11), st.integers(0, 11))
def test_reachability_matches_dfs(es, x, y, n):
    es = [(f"v{a}", f"v{b}") for a, b in es] + [("v0", "v0")]
    s = edges(*es)
    x, y, n = f"v{x}", f"v{y}", f"v{n}"
    assert seq_plus(x, y, "p", s) == dfs_paths_exist(es, x, y)
    assert n_reachable(x, y, n, "p", s) == dfs_paths_exist(es, x, y, avoid=n)
    if n_reachable(x, y, n, "p", s):
        assert seq_plus(x, y, "p", s)
