"""Synthetic safe process models for scalability runs.

The default model chains ``units`` blocks.  Each block is a parallel split
whose left arm is an exclusive choice between two task chains and whose right
arm is a plain task chain.  With 7 units this gives 87 flow elements, 14
exclusive and 14 parallel gateways.
"""
from __future__ import annotations

from .model import ProcessSchema, schema_from_facts


def chain_model(units: int = 7, xor_len: int = 2, par_len: int = 4, lead: int = 1,
                pid: str = "synth") -> ProcessSchema:
    facts = [("bp", (pid, "s", "e")), ("start_event", ("s",)), ("end_event", ("e",))]
    prev = "s"

    def task(name):
        facts.append(("task", (name,)))
        return name

    def link(a, b):
        facts.append(("seq", (a, b, pid)))

    def run(names, start, end):
        cur = start
        for n in names:
            link(cur, task(n))
            cur = n
        link(cur, end)

    for i in range(lead):
        link(prev, task(f"lead{i}"))
        prev = f"lead{i}"
    for u in range(units):
        pb, pm, xb, xm = f"p{u}b", f"p{u}m", f"x{u}b", f"x{u}m"
        facts += [("par_branch", (pb,)), ("par_merge", (pm,)),
                  ("exc_branch", (xb,)), ("exc_merge", (xm,))]
        link(prev, pb)
        link(pb, xb)
        run([f"u{u}l{k}" for k in range(xor_len)], xb, xm)
        run([f"u{u}r{k}" for k in range(xor_len)], xb, xm)
        link(xm, pm)
        run([f"u{u}c{k}" for k in range(par_len)], pb, pm)
        prev = pm
    link(prev, "e")
    return schema_from_facts(facts)
