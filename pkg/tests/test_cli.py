import io
import json
import subprocess
import sys

import jsonschema
import pytest

from bpkb.cli import run_cli
from bpkb.datasets import DATA, handle_order_paths
from conftest import MINIMAL

SCHEMA = json.loads((DATA / "report.schema.json").read_text())
HO = handle_order_paths()
HO_ARGS = ["--bps", str(HO["bps"]), "--triples", str(HO["triples"]), "--ann", str(HO["ann"])]
COMPLIANCE = str(DATA / "handle_order" / "compliance.qbpal")


@pytest.fixture
def minimal(tmp_path):
    p = tmp_path / "m.bps"
    p.write_text(MINIMAL)
    return ["--bps", str(p)]


def run(*argv):
    out = io.StringIO()
    code = run_cli(list(argv), out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--format", "json")
    report = json.loads(text)
    jsonschema.validate(report, SCHEMA)
    assert report["exit_code"] == code
    return code, report


def test_verify_minimal(minimal):
    code, text = run("verify", *minimal)
    assert code == 0
    assert "option to complete: HOLDS" in text
    code, rep = run_json("verify", *minimal)
    assert rep["status"] == "ok" and rep["result"]["option_to_complete"]["holds"]


def test_space_deterministic(tmp_path):
    dumps = []
    for k in range(2):
        g = tmp_path / f"g{k}.json"
        code, rep = run_json("space", *HO_ARGS, "--graph", str(g))
        assert code == 0
        dumps.append((rep["result"]["states"], rep["result"]["edges"], g.read_text()))
    assert dumps[0] == dumps[1]
    assert dumps[0][0] == 111


def test_compliance_query_violated():
    code, text = run("query", *HO_ARGS, COMPLIANCE, "--violation")
    assert code == 1
    assert text.startswith("compliance rule violated")
    assert "?o = o" in text
    code, rep = run_json("query", *HO_ARGS, COMPLIANCE, "--violation")
    assert rep["result"]["compliant"] is False
    assert rep["result"]["counter_witnesses"] == [{"o": "o"}]


def test_selecting_query():
    code, rep = run_json("query", *HO_ARGS, "SELECT ?a WHERE task(?a::bro:Transportation)")
    assert code == 0 and rep["result"]["answer"] == [{"a": "delivering"}]


def test_trace_commands(minimal, tmp_path):
    t = tmp_path / "t.txt"
    t.write_text("% a full run\ncomplete(s), complete(e)\n")
    assert run("trace-check", *minimal, str(t))[0] == 0
    t.write_text("[complete(e)]")
    assert run("trace-check", *minimal, str(t))[0] == 1
    code, rep = run_json("trace-gen", *minimal, "--max-len", "2")
    assert rep["result"]["traces"] == [["complete(s)", "complete(e)"]]


def test_validate(minimal, tmp_path):
    assert run_json("validate", *HO_ARGS)[0] == 0
    bad = tmp_path / "bad.bps"
    bad.write_text("bp(p,s,e)\nstart_event(s)\nseq(s,e,p)\n")
    code, rep = run_json("validate", "--bps", str(bad))
    assert code == 1 and rep["result"]["well_formedness"]


def test_bpmn_input(tmp_path):
    x = tmp_path / "m.bpmn"
    x.write_text('<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="p">'
                 '<startEvent id="s"/><endEvent id="e"/><sequenceFlow id="f" sourceRef="s" targetRef="e"/>'
                 '</process></definitions>')
    assert run_json("verify", "--bpmn", str(x))[0] == 0


FLOUNDERS = "SELECT ?a WHERE [EU(en(?a,ho),true) | ho] AND NOT task(?a)"


@pytest.mark.parametrize("argv", [
    ["verify", "--bps", "/nonexistent.bps"],
    ["verify"],
    ["verify", *HO_ARGS, "--bpmn", str(HO["bps"])],
    ["query", *HO_ARGS, "SELECT ?x WHERE"],
    ["query", *HO_ARGS, FLOUNDERS],
    ["space", *HO_ARGS, "--budget", "5"],
    ["verify", *HO_ARGS, "--process", "nowhere"],
    ["trace-gen", *HO_ARGS, "--max-len", "-1"],
])
def test_input_errors(argv):
    code, rep = run_json(*argv)
    assert code == 2 and rep["status"] == "error" and rep["result"]["error"]


def test_rejected_query_explains():
    code, rep = run_json("query", *HO_ARGS, FLOUNDERS)
    assert rep["result"]["nf"]["verdict"] == "rejected"
    assert any(r["rule"] == "grounding-subformula" for r in rep["result"]["nf"]["reasons"])


@pytest.mark.parametrize("argv", [["verify"], ["query", COMPLIANCE, "--violation"], ["space"],
                                  ["query", COMPLIANCE]])
def test_text_and_json_agree(argv):
    code_text, text = run(argv[0], *HO_ARGS, *argv[1:])
    code_json, rep = run_json(argv[0], *HO_ARGS, *argv[1:])
    assert code_text == code_json
    res = rep["result"]
    if argv[0] == "verify":
        assert ("option to complete: HOLDS" in text) == res["option_to_complete"]["holds"]
        assert ("inconsistent state reachable: yes" in text) == res["inconsistency"]["holds"]
    elif "--violation" in argv:
        assert text.startswith("compliance rule violated") == (not res["compliant"])
    elif argv[0] == "query":
        assert text.startswith("HOLDS") == res["answer"]
    else:
        assert f"{res['states']} states, {res['edges']} edges" in text


def test_out_file(minimal, tmp_path):
    out = tmp_path / "r.json"
    code, text = run("verify", *minimal, "--format", "json", "--out", str(out))
    assert text == "" and json.loads(out.read_text())["exit_code"] == code == 0


def test_console_entry_point(minimal):
    r = subprocess.run([sys.executable, "-m", "bpkb.cli", "verify", *minimal], capture_output=True, text=True)
    assert r.returncode == 0 and "HOLDS" in r.stdout
