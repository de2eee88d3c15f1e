import pytest

from bpkb.bpmn import BpmnImportError, import_bpmn_xml
from bpkb.model import well_formedness

NS = 'xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"'


def doc(body, pid="p"):
    return f'<definitions {NS}><process id="{pid}">{body}</process></definitions>'


TWO_NODES = doc('<startEvent id="s"/><endEvent id="e"/><sequenceFlow id="f1" sourceRef="s" targetRef="e"/>')


def test_two_nodes():
    s = import_bpmn_xml(TWO_NODES)
    assert s.bp == {"p": ("s", "e")}
    assert s.successors("s", "p") == ("e",)
    assert well_formedness(s).ok


def test_event_based_gateway_rejected():
    xml = doc('<startEvent id="s"/><eventBasedGateway id="g"/><endEvent id="e"/>'
              '<sequenceFlow id="f1" sourceRef="s" targetRef="g"/><sequenceFlow id="f2" sourceRef="g" targetRef="e"/>')
    with pytest.raises(BpmnImportError, match="eventBasedGateway"):
        import_bpmn_xml(xml)


def test_subprocess_with_boundary_event():
    xml = doc('<startEvent id="s"/><endEvent id="e"/><endEvent id="e2"/>'
              '<subProcess id="sub"><startEvent id="s1"/><task id="t"/><endEvent id="e1"/>'
              '<sequenceFlow id="g1" sourceRef="s1" targetRef="t"/>'
              '<sequenceFlow id="g2" sourceRef="t" targetRef="e1"/></subProcess>'
              '<boundaryEvent id="x" attachedToRef="sub"/>'
              '<exclusiveGateway id="m" gatewayDirection="Converging"/>'
              '<sequenceFlow id="f1" sourceRef="s" targetRef="sub"/>'
              '<sequenceFlow id="f2" sourceRef="sub" targetRef="m"/>'
              '<sequenceFlow id="f3" sourceRef="x" targetRef="m"/>'
              '<sequenceFlow id="f4" sourceRef="m" targetRef="e"/>')
    s = import_bpmn_xml(xml.replace('<endEvent id="e2"/>', ""))
    facts = set(s.facts())
    assert ("comp_act", ("sub", "s1", "e1")) in facts
    assert ("exception", ("x", "sub", "p")) in facts
    assert ("int_event", ("x",)) in facts
    assert ("exc_merge", ("m",)) in facts
    assert well_formedness(s).ok, well_formedness(s).to_json()
    # a stray second end event is kept so validation can name it
    rep = well_formedness(import_bpmn_xml(xml))
    assert [v.elements for v in rep] == [("e2",)]


def test_lanes_and_data():
    xml = doc('<laneSet><lane id="l1" name="Sales Clerk"><flowNodeRef>t</flowNodeRef></lane></laneSet>'
              '<dataObject id="d"/>'
              '<startEvent id="s"/><userTask id="t"><dataOutputAssociation><targetRef>d</targetRef>'
              '</dataOutputAssociation></userTask><endEvent id="e"/>'
              '<sequenceFlow id="f1" sourceRef="s" targetRef="t"/><sequenceFlow id="f2" sourceRef="t" targetRef="e"/>')
    facts = set(import_bpmn_xml(xml).facts())
    assert ("participant", ("sales_clerk",)) in facts
    assert ("assigned", ("t", "sales_clerk", "p")) in facts
    assert ("output", ("t", "d", "p")) in facts
    assert ("task", ("t",)) in facts


def test_gateway_direction_from_degree():
    xml = doc('<startEvent id="s"/><parallelGateway id="g"/><task id="a"/><task id="b"/>'
              '<parallelGateway id="m"/><endEvent id="e"/>'
              + "".join(f'<sequenceFlow id="f{i}" sourceRef="{x}" targetRef="{y}"/>'
                        for i, (x, y) in enumerate([("s", "g"), ("g", "a"), ("g", "b"), ("a", "m"),
                                                    ("b", "m"), ("m", "e")])))
    s = import_bpmn_xml(xml)
    assert s.kind("g") == "par_branch" and s.kind("m") == "par_merge"
    assert well_formedness(s).ok


@pytest.mark.parametrize("xml", ["<definitions", "<definitions/>", doc('<task id="t"/>'),
                                 doc('<startEvent id="s"/><endEvent id="e"/><sequenceFlow id="f"/>')])
def test_malformed(xml):
    with pytest.raises(BpmnImportError):
        import_bpmn_xml(xml)


def test_structural_errors_are_reported():
    xml = doc('<startEvent id="s"/><task id="t"/><endEvent id="e"/>'
              '<sequenceFlow id="f1" sourceRef="s" targetRef="e"/>')
    rep = well_formedness(import_bpmn_xml(xml))
    assert rep.rules() == {"2"}
    assert [v.elements for v in rep] == [("t",)]
