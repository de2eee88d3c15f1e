import random
import time

import numpy as np
import pytest

from bpkb import formula as F
from bpkb.ctl import (Checker, HoldsLit, Lit, NFRejected, eval, eval_open, validate_nf)
from bpkb.ctl import _kernels
from bpkb.formula import Var
from bpkb.services import noncompliance_formula, q3
from generators import PROPS, kripke_from, plain_context, random_formula, random_graph
from oracles import PathOracle, brute_eval_open

P, Q = F.Atom(PROPS[0]), F.Atom(PROPS[1])


def graph_of(succ, labels):
    return kripke_from(succ, labels), plain_context()


def test_sink_has_no_next():
    g, ctx = graph_of({0: []}, {0: set()})
    assert not eval(F.EX(F.TRUE), g, 0, ctx)


@pytest.mark.parametrize("label", [set(), {PROPS[0]}])
def test_always_at_sink_is_local(label):
    g, ctx = graph_of({0: []}, {0: label})
    assert eval(F.AG(P), g, 0, ctx) == eval(P, g, 0, ctx)


def test_two_state_until_and_globally():
    g, ctx = graph_of({0: [1], 1: []}, {0: set(), 1: {PROPS[0]}})
    assert eval(F.EU(F.TRUE, P), g, 0, ctx)
    assert not eval(F.EG(P), g, 0, ctx)
    assert eval(F.EG(P), g, 1, ctx)


def test_globally_on_cycle():
    g, ctx = graph_of({0: [1], 1: [0]}, {0: {PROPS[0]}, 1: {PROPS[0]}})
    assert eval(F.EG(P), g, 0, ctx)
    assert not eval(F.EF(F.Not(P)), g, 0, ctx)


def test_final_is_structural(minimal_kb):
    g = minimal_kb.graph("p")
    got = [eval(F.Final("p"), g, i, minimal_kb.ctx) for i in range(len(g.states))]
    assert got == [False, False, True]


# --- open formulas ---------------------------------------------------------------


def test_open_task_formula(one_task_kb):
    g = one_task_kb.graph("p")
    A = Var("A")
    assert eval_open(F.EF(F.en(A, "p")), g, 0, one_task_kb.ctx) == [{A: "a"}]


def test_open_formula_without_witness(one_task_kb):
    g = one_task_kb.graph("p")
    X = Var("X")
    assert eval_open(F.EF(F.tf(X, "rdf:type", "c")), g, 0, one_task_kb.ctx) == []


def test_noncompliance_has_bindings(ho):
    got = eval_open(noncompliance_formula("ho"), ho.graph("ho"), 0, ho.ctx)
    assert {Var("O"): "o"} in got


# --- NF validation ---------------------------------------------------------------


def test_floundering_query_rejected():
    A = Var("A")
    q = [HoldsLit(F.EU(F.en(A, "p"), F.TRUE), "p"), Lit("task", (A,), positive=False)]
    rep = validate_nf(q)
    assert not rep.accepted
    assert any(r.rule == "grounding-subformula" for r in rep.reasons)


def test_eval_open_rejects_non_grounding(one_task_kb):
    A = Var("A")
    with pytest.raises(NFRejected):
        eval_open(F.EU(F.en(A, "p"), F.TRUE), one_task_kb.graph("p"), 0, one_task_kb.ctx)


def test_retrieval_query_accepted():
    assert validate_nf(q3()).accepted


def test_ground_query_accepted():
    assert validate_nf([HoldsLit(F.EF(F.Final("p")), "p")]).accepted
    assert validate_nf(F.AG(F.EF(F.Final("p")))).accepted


# --- invariants -------------------------------------------------------------------


def random_cases(seed, n_graphs, n_formulas):
    rng = random.Random(seed)
    for _ in range(n_graphs):
        succ, labels = random_graph(rng)
        yield succ, labels, [random_formula(rng, rng.randint(0, 4)) for _ in range(n_formulas)]


def test_negation_and_duality():
    for succ, labels, fs in random_cases(7, 60, 20):
        g, ctx = graph_of(succ, labels)
        c = Checker(g, ctx)
        for f in fs:
            assert np.array_equal(c.sat(F.Not(f)), ~c.sat(f))
            assert np.array_equal(c.sat(F.AG(f)), ~c.sat(F.EF(F.Not(f))))


def test_backends_agree():
    if "numba" not in _kernels.BACKENDS:
        pytest.skip("numba not importable")
    for succ, labels, fs in random_cases(9, 80, 20):
        g, ctx = graph_of(succ, labels)
        a, b = Checker(g, ctx, backend="numpy"), Checker(g, ctx, backend="numba")
        for f in fs:
            assert np.array_equal(a.sat(f), b.sat(f))


def test_open_eval_matches_grounding():
    A = Var("A")
    rng = random.Random(4)
    universe = ["q0", "q1", "q2", "id0", "x0", "zz"]
    checked = 0
    for _ in range(150):
        succ, labels = random_graph(rng)
        g, ctx = graph_of(succ, labels)
        oracle = PathOracle(succ, labels)
        rest = random_formula(rng, 2)
        bound_again = rng.choice([None, F.EX, lambda h: F.Not(F.EX(h)), F.EG])
        if bound_again is not None:
            rest = F.And(rest, bound_again(F.Atom(("en", A, "g"))))
        shape = rng.choice([F.EF, F.EX, lambda h: h, lambda h: F.EU(F.TRUE, h)])
        f = shape(F.And(F.Atom(("en", A, "g")), rest))
        s = rng.randrange(len(succ))
        got = eval_open(f, g, s, ctx)
        expected = brute_eval_open(f, lambda h: oracle.sat(h, s), universe)
        key = lambda ts: sorted(sorted((v.name, c) for v, c in t.items()) for t in ts)
        assert key(got) == key(expected), F.to_text(f)
        checked += 1
    assert checked == 150


def test_runtime_polynomial_on_chains():
    f = F.EU(F.Not(P), F.EG(F.Not(Q)))

    def run(n):
        succ = {i: [i + 1] for i in range(n - 1)} | {n - 1: []}
        g, ctx = graph_of(succ, {i: set() for i in range(n)})
        best = float("inf")
        for _ in range(3):
            c = Checker(g, ctx)
            c.memo.clear()
            t = time.perf_counter()
            c.sat(f)
            best = min(best, time.perf_counter() - t)
        return best

    sizes = [2 ** k for k in range(6, 11)]
    times = [max(run(n), 1e-6) for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(times), 1)[0]
    assert slope < 3.0, (sizes, times)
