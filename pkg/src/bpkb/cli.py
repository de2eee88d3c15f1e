"""Command-line driver.

Exit status: 0 on success or when the checked property holds, 1 on
violations or when it fails, 2 on input errors (bad files, rejected queries,
state budget exceeded).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from .annotation import AnnotationSet, parse_annotations, validate_annotations
from .bpmn import BpmnImportError, import_bpmn_xml
from .ctl import NFRejected
from .enactment import Action, Context, StateBudgetExceeded, consistency_check
from .model import UnknownProcessError, parse_process_facts, well_formedness
from .ontology import load_triples
from .query import evaluate, parse_query, to_items
from .services import (KnowledgeBase, binding_json, check_trace, generate_traces, inconsistency,
                       non_executable_activities, option_to_complete)
from .syntax import ParseError


class InputError(Exception):
    pass


class Timer:
    def __init__(self):
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name):
        t = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + time.perf_counter() - t


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None


def load(args) -> KnowledgeBase:
    if bool(args.bps) == bool(args.bpmn):
        raise InputError("give exactly one of --bps or --bpmn")
    schema = parse_process_facts(_read(args.bps)) if args.bps else import_bpmn_xml(_read(args.bpmn))
    store = load_triples(_read(args.triples)) if args.triples else load_triples("")
    ann = parse_annotations(_read(args.ann), schema, store) if args.ann else AnnotationSet()
    if args.budget is not None and args.budget <= 0:
        raise InputError("--budget must be positive")
    return KnowledgeBase(Context(schema, store, ann), args.budget)


def _process(args, kb: KnowledgeBase) -> str:
    if args.process:
        kb.schema.check_process(args.process)
        return args.process
    if not kb.schema.processes:
        raise InputError("no bp/3 fact: nothing to run")
    return kb.schema.processes[0][0]


# --- commands: each returns (exit code, result dict, text lines) ----------------


def cmd_validate(args, kb, timer):
    wf = well_formedness(kb.schema)
    ann = validate_annotations(kb.ctx.annotations, kb.schema, kb.ctx.store)
    lines = [f"well-formedness: {'ok' if wf.ok else f'{len(wf)} violation(s)'}"]
    lines += [f"  [{v.rule}] {v.message}" for v in wf]
    lines.append(f"annotations: {'ok' if ann.ok else f'{len(ann)} violation(s)'}")
    lines += [f"  [{v.rule}] {v.message}" for v in ann]
    code = 0 if wf.ok and ann.ok else 1
    return code, {"well_formedness": wf.to_json(), "annotations": ann.to_json()}, lines


def cmd_space(args, kb, timer):
    p = _process(args, kb)
    with timer.phase("space"):
        g = kb.graph(p)
    result = {"process": g.process, "states": len(g.states), "edges": len(g.edges), "sinks": len(g.sinks)}
    if args.graph:
        dump = g.to_text() if args.format == "text" else json.dumps(g.to_json(), indent=1)
        Path(args.graph).write_text(dump, encoding="utf-8")
        result["graph_file"] = str(args.graph)
    lines = [f"process {g.process}: {len(g.states)} states, {len(g.edges)} edges, {len(g.sinks)} sinks"]
    return 0, result, lines


def _witness_text(w):
    return " -> ".join(f"{i}" if a is None else f"{a} -> {i}" for i, a in w)


def cmd_verify(args, kb, timer):
    p = _process(args, kb)
    with timer.phase("space"):
        g = kb.graph(p)
    with timer.phase("query"):
        otc = option_to_complete(p, kb)
        inc = inconsistency(p, kb)
        nex = sorted(non_executable_activities(p, kb))
        cons = consistency_check(g, kb.ctx)
    ok = otc.holds and not inc.holds and not nex and cons.ok
    result = {
        "process": p,
        "option_to_complete": otc.to_json(),
        "inconsistency": inc.to_json(),
        "non_executable": nex,
        "consistency": cons.to_json(),
    }
    lines = [f"option to complete: {'HOLDS' if otc.holds else 'FAILS'}"]
    if otc.witness:
        lines.append("  counterexample: " + _witness_text(otc.witness))
    lines.append(f"inconsistent state reachable: {'yes' if inc.holds else 'no'}")
    if inc.witness:
        lines.append("  witness: " + _witness_text(inc.witness))
    lines.append("non-executable activities: " + (", ".join(nex) if nex else "none"))
    lines.append(f"consistency condition: {'ok' if cons.ok else 'violated'}")
    for i, a, j, f in cons.persisting_effects:
        lines.append(f"  {a} ({i} -> {j}) leaves removed fluent {f} derivable")
    if cons.inconsistent_states:
        lines.append(f"  {len(cons.inconsistent_states)} inconsistent state(s)")
    return (0 if ok else 1), result, lines


def cmd_query(args, kb, timer):
    text = args.query
    if Path(text).is_file():
        text = _read(text)
    q = parse_query(text)
    with timer.phase("query"):
        answer = evaluate(q, kb)
    if q.boolean:
        found = answer
        rows = None
    else:
        rows = [binding_json(t) for t in answer]
        found = bool(rows)
    result = {"boolean": q.boolean, "answer": found if q.boolean else rows}
    if args.violation:
        result["compliant"] = not found
        # counter-witnesses: the bindings of all query variables
        if found:
            cw = [binding_json(t) for t in _all_bindings(q, kb)]
            result["counter_witnesses"] = cw
        lines = ["compliance rule violated" if found else "compliance rule enforced"]
        if found:
            lines += ["  " + _row_text(r) for r in result["counter_witnesses"]]
        return (1 if found else 0), result, lines
    if q.boolean:
        return (0 if found else 1), result, ["HOLDS" if found else "FAILS"]
    lines = [_row_text(r) for r in rows] or ["no answers"]
    return 0, result, lines


def _all_bindings(q, kb):
    from .services import retrieve

    return retrieve(to_items(q), kb)


def _row_text(r: dict) -> str:
    return ", ".join(f"?{k} = {v}" for k, v in r.items()) or "(empty binding)"


def _parse_trace(text: str) -> list[Action]:
    out = []
    for line in text.splitlines():
        line = line.split("%", 1)[0].strip()
        if not line:
            continue
        depth, start = 0, 0
        for i, ch in enumerate(line + ","):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch in ",;" and depth == 0:
                tok = line[start:i].strip().strip("[]").strip()
                if tok:
                    try:
                        out.append(Action.parse(tok))
                    except ValueError as e:
                        raise InputError(str(e)) from None
                start = i + 1
    return out


def cmd_trace_check(args, kb, timer):
    p = _process(args, kb)
    trace = _parse_trace(_read(args.trace))
    with timer.phase("query"):
        ok = check_trace(trace, p, kb)
    result = {"process": p, "trace": [str(a) for a in trace], "correct": ok}
    return (0 if ok else 1), result, [f"trace of {len(trace)} action(s): {'correct' if ok else 'not correct'}"]


def cmd_trace_gen(args, kb, timer):
    p = _process(args, kb)
    before = None
    if args.before:
        parts = [x.strip() for x in args.before.split(",")]
        if len(parts) != 2 or not all(parts):
            raise InputError("--before expects two elements: a,b")
        before = tuple(parts)
    if args.max_len < 0:
        raise InputError("--max-len must be non-negative")
    with timer.phase("space"):
        kb.graph(p)
    with timer.phase("query"):
        traces = generate_traces(p, kb, args.max_len, before, args.limit)
    result = {"process": p, "traces": [[str(a) for a in t] for t in traces]}
    lines = [" ".join(str(a) for a in t) for t in traces] + [f"{len(traces)} trace(s)"]
    return 0, result, lines


COMMANDS = {
    "validate": cmd_validate, "space": cmd_space, "verify": cmd_verify, "query": cmd_query,
    "trace-check": cmd_trace_check, "trace-gen": cmd_trace_gen,
}
STATUS = {0: "ok", 1: "fails", 2: "error"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bps", help="process fact file")
    common.add_argument("--bpmn", help="BPMN 2.0 XML file (instead of --bps)")
    common.add_argument("--triples", help="ontology file (triples and DL axioms)")
    common.add_argument("--ann", help="annotation file")
    common.add_argument("--budget", type=int, help="state budget (default: $BPKB_STATE_BUDGET or 200000)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--process", help="process to run (default: first bp fact)")

    ap = argparse.ArgumentParser(prog="bpkb", description="Verify and query annotated process models.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="well-formedness and annotation checks")
    sp = sub.add_parser("space", parents=[common], help="build the state space")
    sp.add_argument("--graph", help="dump the graph to this file (text or json per --format)")
    sub.add_parser("verify", parents=[common], help="standard verification properties")
    q = sub.add_parser("query", parents=[common], help="run a SELECT-WHERE query (file or string)")
    q.add_argument("query")
    q.add_argument("--violation", action="store_true",
                   help="the query describes a violation: answers mean the rule is not enforced")
    tc = sub.add_parser("trace-check", parents=[common], help="check a trace file")
    tc.add_argument("trace")
    tg = sub.add_parser("trace-gen", parents=[common], help="generate correct traces")
    tg.add_argument("--max-len", type=int, required=True)
    tg.add_argument("--before", help="keep traces completing a before b: a,b")
    tg.add_argument("--limit", type=int, help="stop after this many traces")
    return ap


def run_cli(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    timer = Timer()
    try:
        with timer.phase("setup"):
            kb = load(args)
        code, result, lines = COMMANDS[args.command](args, kb, timer)
    except (InputError, ParseError, BpmnImportError, UnknownProcessError, NFRejected,
            StateBudgetExceeded, ValueError) as e:
        code, result, lines = 2, {"error": str(e)}, [f"error: {e}"]
        if isinstance(e, NFRejected):
            result["nf"] = e.report.to_json()
    report = {"command": args.command, "status": STATUS[code], "exit_code": code,
              "timing": {k: round(v, 6) for k, v in timer.phases.items()}, "result": result}
    if args.format == "json":
        out = json.dumps(report, indent=2) + "\n"
    else:
        timing = ", ".join(f"{k} {v * 1000:.1f} ms" for k, v in timer.phases.items())
        out = "\n".join(lines + [f"timing: {timing}"]) + "\n"
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        stdout.write(out)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
