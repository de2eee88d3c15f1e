"""Import the structural part of BPMN 2.0 XML into process facts.

Only the control-flow subset the enactment engine understands is accepted;
anything else inside a process (event-based or complex gateways, call
activities, transactions, ...) is an error rather than being silently dropped.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET

from .model import ProcessSchema, schema_from_facts

TASKS = {"task", "userTask", "serviceTask", "sendTask", "receiveTask", "manualTask",
         "scriptTask", "businessRuleTask"}
INT_EVENTS = {"intermediateCatchEvent", "intermediateThrowEvent"}
GATEWAYS = {"exclusiveGateway": "exc", "inclusiveGateway": "inc", "parallelGateway": "par"}
# children carrying no control-flow meaning
IGNORED = {"documentation", "extensionElements", "incoming", "outgoing", "textAnnotation",
           "association", "dataStoreReference", "ioSpecification", "property",
           "dataInput", "dataOutput", "inputSet", "outputSet",
           "messageEventDefinition", "timerEventDefinition", "errorEventDefinition",
           "signalEventDefinition", "conditionalEventDefinition", "escalationEventDefinition",
           "terminateEventDefinition", "conditionExpression", "laneSet", "lane",
           "flowNodeRef", "sourceRef", "targetRef", "dataObjectReference", "dataObject",
           "dataInputAssociation", "dataOutputAssociation"}


class BpmnImportError(ValueError):
    pass


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child_text(el, name):
    for c in el:
        if _local(c.tag) == name and c.text:
            return c.text.strip()
    return None


class _Importer:
    def __init__(self):
        self.facts: list[tuple[str, tuple]] = []
        self.data_refs: dict[str, str] = {}

    def add(self, pred, *args):
        self.facts.append((pred, tuple(args)))

    def container(self, el, pid: str):
        """Map the flow content of a process or sub-process with id ``pid``."""
        kids = list(el)
        flows = [c for c in kids if _local(c.tag) == "sequenceFlow"]
        degree_in: dict[str, int] = {}
        degree_out: dict[str, int] = {}
        for f in flows:
            s, t = f.get("sourceRef"), f.get("targetRef")
            if not s or not t:
                raise BpmnImportError(f"sequenceFlow {f.get('id')!r} lacks sourceRef/targetRef")
            degree_out[s] = degree_out.get(s, 0) + 1
            degree_in[t] = degree_in.get(t, 0) + 1
            self.add("seq", s, t, pid)

        # data objects first so associations can resolve references
        for c in kids:
            tag = _local(c.tag)
            if tag == "dataObject":
                self.add("item", c.get("id"))
            elif tag == "dataObjectReference":
                self.data_refs[c.get("id")] = c.get("dataObjectRef") or c.get("id")
                if not c.get("dataObjectRef"):
                    self.add("item", c.get("id"))

        starts, ends = [], []
        for c in kids:
            tag, cid = _local(c.tag), c.get("id")
            if tag in ("sequenceFlow",) or tag in IGNORED:
                if tag == "laneSet":
                    self.lanes(c, pid)
                continue
            if not cid:
                raise BpmnImportError(f"<{tag}> without an id")
            if tag in TASKS:
                self.add("task", cid)
            elif tag == "subProcess":
                s, e = self.container(c, cid)
                self.add("comp_act", cid, s, e)
            elif tag == "startEvent":
                starts.append(cid)
                self.add("start_event", cid)
            elif tag == "endEvent":
                ends.append(cid)
                self.add("end_event", cid)
            elif tag in INT_EVENTS:
                self.add("int_event", cid)
            elif tag == "boundaryEvent":
                target = c.get("attachedToRef")
                if not target:
                    raise BpmnImportError(f"boundaryEvent {cid!r} lacks attachedToRef")
                self.add("int_event", cid)
                self.add("exception", cid, target, pid)
            elif tag in GATEWAYS:
                direction = c.get("gatewayDirection", "")
                if direction == "Diverging":
                    branch = True
                elif direction == "Converging":
                    branch = False
                else:
                    branch = degree_out.get(cid, 0) > 1
                self.add(GATEWAYS[tag] + ("_branch" if branch else "_merge"), cid)
            else:
                raise BpmnImportError(f"unsupported BPMN element <{tag}> ({cid})")
            if tag in TASKS or tag == "subProcess":
                self.associations(c, cid, pid)
        if not starts or not ends:
            raise BpmnImportError(f"process {pid!r} needs a start event and an end event")
        # extra start/end events stay classified so well-formedness reports them
        return starts[0], ends[0]

    def associations(self, act, aid: str, pid: str):
        for c in act:
            tag = _local(c.tag)
            if tag == "dataInputAssociation":
                for ref in (x for x in c if _local(x.tag) == "sourceRef"):
                    self.add("input", aid, self.data_refs.get(ref.text.strip(), ref.text.strip()), pid)
            elif tag == "dataOutputAssociation":
                ref = _child_text(c, "targetRef")
                if ref:
                    self.add("output", aid, self.data_refs.get(ref, ref), pid)

    def lanes(self, lane_set, pid: str):
        for lane in lane_set:
            if _local(lane.tag) != "lane":
                continue
            who = lane.get("name") or lane.get("id")
            who = "_".join(who.split()).lower() if lane.get("name") else who
            self.add("participant", who)
            for ref in lane:
                if _local(ref.tag) == "flowNodeRef" and ref.text:
                    self.add("assigned", ref.text.strip(), who, pid)
                elif _local(ref.tag) == "childLaneSet":
                    self.lanes(ref, pid)


def import_bpmn_xml(text: str) -> ProcessSchema:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise BpmnImportError(f"malformed XML: {e}") from None
    procs = [root] if _local(root.tag) == "process" else [c for c in root if _local(c.tag) == "process"]
    if not procs:
        raise BpmnImportError("no <process> element found")
    imp = _Importer()
    for p in procs:
        pid = p.get("id")
        if not pid:
            raise BpmnImportError("<process> without an id")
        s, e = imp.container(p, pid)
        imp.add("bp", pid, s, e)
    # inputs of an association to a data object that has no dataObject tag
    known = {a[0] for pred, a in imp.facts if pred == "item"}
    for pred, a in list(imp.facts):
        if pred in ("input", "output") and a[1] not in known:
            imp.add("item", a[1])
            known.add(a[1])
    return schema_from_facts(imp.facts)
