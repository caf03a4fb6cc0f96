"""Wire mirror of the domain types.

Every construct maps field-for-field onto plain JSON so HTTP clients can
rebuild exactly what the server holds. Decoding goes through the real
constructors, so malformed payloads fail with the same messages as malformed
programs; encode(decode(x)) and decode(encode(x)) are both identities.
"""

from __future__ import annotations

from typing import Any, Optional

from ..core.annotations import Annotation, OperatorStyle, SymbolStyle, TargetKind, TargetRef
from ..core.operands import Application, Constant, Operand, Variable
from ..core.operators import (
    ActionalBody,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
)
from ..core.rules import (
    Action,
    Condition,
    ConnectorNode,
    ControlStructure,
    RewritingRule,
    RuleNode,
)
from ..core.state import State
from ..core.structures import LayoutStructure, TopologicalObject, WebStructure
from ..core.values import Coordinates, TypedVariable, Value, ValueKind
from ..dsl.bundle import (
    ArcDecl,
    AttrSet,
    Bundle,
    CommunityDecl,
    ComponentDecl,
    EntityDecl,
    FactDecl,
    NamedControl,
    NamedOperand,
    NamedWeb,
    PostStep,
    PropagateStep,
    ReplaceStep,
    RoundStep,
    ScenarioStep,
    WorkspaceDecl,
)


class CodecError(ValueError):
    pass


def _need(data: Any, key: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise CodecError(f"missing field {key!r}")
    return data[key]


# -- values ---------------------------------------------------------------------


def value_to_json(v: Value) -> dict:
    out: dict = {"kind": v.kind.value, "value": v.raw}
    if v.media_kind is not None:
        out["mediaKind"] = v.media_kind
    return out


def value_from_json(data: Any) -> Value:
    kind = _need(data, "kind")
    raw = _need(data, "value")
    try:
        vk = ValueKind(kind)
    except ValueError:
        raise CodecError(f"unknown value kind {kind!r}")
    if vk is ValueKind.MEDIA:
        return Value.media(str(raw), str(_need(data, "mediaKind")))
    if vk is ValueKind.BOOLEAN:
        if not isinstance(raw, bool):
            raise CodecError("boolean value must be true or false")
        return Value.boolean(raw)
    if vk is ValueKind.INTEGER:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise CodecError("integer value must be a whole number")
        return Value.integer(raw)
    if vk is ValueKind.DECIMAL:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise CodecError("decimal value must be a number")
        return Value.decimal(float(raw))
    return Value.text(str(raw))


def _kind_to_json(kind: Optional[ValueKind]) -> Optional[str]:
    return kind.value if kind is not None else None


def _kind_from_json(data: Any) -> Optional[ValueKind]:
    if data is None:
        return None
    try:
        return ValueKind(data)
    except ValueError:
        raise CodecError(f"unknown value kind {data!r}")


# -- operands -------------------------------------------------------------------


def operand_to_json(op: Operand) -> dict:
    if isinstance(op, Constant):
        return {"const": value_to_json(op.value)}
    if isinstance(op, Variable):
        return {
            "var": {"name": op.var.name, "kind": _kind_to_json(op.var.kind), "group": op.var.group}
        }
    return {
        "app": {"operator": op.operator, "args": [operand_to_json(a) for a in op.args]}
    }


def operand_from_json(data: Any) -> Operand:
    if not isinstance(data, dict):
        raise CodecError("operand must be an object")
    if "const" in data:
        return Constant(value_from_json(data["const"]))
    if "var" in data:
        v = data["var"]
        kind = _kind_from_json(_need(v, "kind"))
        if kind is None:
            raise CodecError("a variable needs a concrete kind")
        return Variable(TypedVariable(_need(v, "name"), kind, bool(v.get("group", False))))
    if "app" in data:
        a = data["app"]
        return Application(
            _need(a, "operator"), tuple(operand_from_json(x) for x in _need(a, "args"))
        )
    raise CodecError("operand must be const, var, or app")


def _application_from_json(data: Any) -> Application:
    op = operand_from_json(data)
    if not isinstance(op, Application):
        raise CodecError("expected an application")
    return op


# -- operators ------------------------------------------------------------------


def operator_to_json(op: OperatorConstruct) -> dict:
    body: dict
    if isinstance(op.body, FunctionalBody):
        body = {"expr": operand_to_json(op.body.expr)}
    else:
        body = {"steps": [operand_to_json(s) for s in op.body.steps]}
    return {
        "name": op.name,
        "kind": op.kind.value,
        "params": [
            {"name": p.name, "kind": _kind_to_json(p.kind), "group": p.group} for p in op.params
        ],
        "body": body,
        "result": _kind_to_json(op.result),
        "resultGroup": op.result_group,
        "variadic": op.variadic,
    }


def operator_from_json(data: Any) -> OperatorConstruct:
    kind = OperatorKind(_need(data, "kind"))
    params = tuple(
        ParamSpec(_need(p, "name"), _kind_from_json(p.get("kind")), bool(p.get("group", False)))
        for p in _need(data, "params")
    )
    raw_body = _need(data, "body")
    if "expr" in raw_body:
        body: FunctionalBody | ActionalBody = FunctionalBody(operand_from_json(raw_body["expr"]))
    elif "steps" in raw_body:
        body = ActionalBody(tuple(_application_from_json(s) for s in raw_body["steps"]))
    else:
        raise CodecError("operator body must have expr or steps")
    return OperatorConstruct(
        _need(data, "name"),
        kind,
        params,
        body,
        result=_kind_from_json(data.get("result")),
        result_group=bool(data.get("resultGroup", False)),
        variadic=bool(data.get("variadic", False)),
    )


# -- structures -----------------------------------------------------------------


def web_to_json(web: WebStructure) -> dict:
    return {
        "layouts": [
            {
                "name": l.name,
                "objects": [
                    {
                        "operand": operand_to_json(o.operand),
                        "at": {"x": o.coordinates.x, "y": o.coordinates.y}
                        if o.coordinates
                        else None,
                    }
                    for o in l.objects
                ],
            }
            for l in web.layouts
        ],
        "links": [[a, b] for a, b in web.hyperlinks],
    }


def web_from_json(data: Any) -> WebStructure:
    layouts = []
    for l in _need(data, "layouts"):
        objects = []
        for o in _need(l, "objects"):
            at = o.get("at")
            coords = Coordinates(at["x"], at["y"]) if at else None
            objects.append(TopologicalObject(operand_from_json(_need(o, "operand")), coords))
        layouts.append(LayoutStructure(_need(l, "name"), tuple(objects)))
    links = tuple((a, b) for a, b in _need(data, "links"))
    return WebStructure(tuple(layouts), links)


# -- rules and controls -----------------------------------------------------------


def _invocation_to_json(inv: Condition | Action) -> dict:
    return {"operator": inv.operator, "args": [operand_to_json(a) for a in inv.args]}


def rule_to_json(rule: RewritingRule) -> dict:
    return {
        "name": rule.name,
        "when": [_invocation_to_json(c) for c in rule.conditions],
        "then": [_invocation_to_json(a) for a in rule.actions],
    }


def rule_from_json(data: Any) -> RewritingRule:
    conds = tuple(
        Condition(_need(c, "operator"), tuple(operand_from_json(a) for a in _need(c, "args")))
        for c in _need(data, "when")
    )
    acts = tuple(
        Action(_need(a, "operator"), tuple(operand_from_json(x) for x in _need(a, "args")))
        for a in _need(data, "then")
    )
    return RewritingRule(_need(data, "name"), conds, acts)


def control_to_json(cs: ControlStructure) -> dict:
    if isinstance(cs, RuleNode):
        return {"rule": rule_to_json(cs.rule)}
    return {
        "connector": {
            "operator": cs.operator,
            "children": [control_to_json(c) for c in cs.children],
        }
    }


def control_from_json(data: Any) -> ControlStructure:
    if not isinstance(data, dict):
        raise CodecError("control must be an object")
    if "rule" in data:
        return RuleNode(rule_from_json(data["rule"]))
    if "connector" in data:
        c = data["connector"]
        return ConnectorNode(
            _need(c, "operator"),
            tuple(control_from_json(x) for x in _need(c, "children")),
        )
    raise CodecError("control must be rule or connector")


# -- annotations ------------------------------------------------------------------


def annotation_to_json(ann: Annotation) -> dict:
    body: dict
    if isinstance(ann.body, SymbolStyle):
        body = {"styleTokens": list(ann.body.tokens)}
    elif isinstance(ann.body, OperatorStyle):
        body = {"styleApply": operand_to_json(ann.body.application)}
    else:
        body = {"note": value_to_json(ann.body)}
    return {
        "id": ann.id,
        "body": body,
        "targets": [
            {"kind": t.kind.value, "path": list(t.path), "selector": t.selector}
            for t in ann.targets
        ],
        "author": ann.author,
        "timestamp": ann.timestamp,
    }


def annotation_from_json(data: Any) -> Annotation:
    raw_body = _need(data, "body")
    if "styleTokens" in raw_body:
        body: SymbolStyle | OperatorStyle | Value = SymbolStyle(tuple(raw_body["styleTokens"]))
    elif "styleApply" in raw_body:
        body = OperatorStyle(_application_from_json(raw_body["styleApply"]))
    elif "note" in raw_body:
        body = value_from_json(raw_body["note"])
    else:
        raise CodecError("annotation body must be styleTokens, styleApply, or note")
    targets = tuple(
        TargetRef(
            TargetKind(_need(t, "kind")),
            tuple(_need(t, "path")),
            t.get("selector", "select"),
        )
        for t in _need(data, "targets")
    )
    return Annotation(
        _need(data, "id"), body, targets, _need(data, "author"), _need(data, "timestamp")
    )


# -- state ------------------------------------------------------------------------


def state_to_json(state: State) -> dict:
    return {
        "scopes": {
            scope: {name: operand_to_json(op) for name, op in state.entries(scope)}
            for scope in state.scope_names()
        },
        "seq": state.seq,
    }


def state_from_json(data: Any) -> State:
    scopes = {
        scope: {name: operand_from_json(op) for name, op in entries.items()}
        for scope, entries in _need(data, "scopes").items()
    }
    return State(scopes, int(data.get("seq", 0)))


# -- profile declarations -----------------------------------------------------------


def attrs_to_json(attrs: AttrSet) -> list:
    return [[name, value_to_json(v)] for name, v in attrs]


def attrs_from_json(data: Any) -> AttrSet:
    if not isinstance(data, list):
        raise CodecError("attributes must be a list of [name, value] pairs")
    out = []
    for row in data:
        if not isinstance(row, (list, tuple)) or len(row) != 2:
            raise CodecError("attributes must be a list of [name, value] pairs")
        name, v = row
        out.append((str(name), value_from_json(v)))
    return tuple(out)


def entity_to_json(e: EntityDecl) -> dict:
    return {
        "id": e.id,
        "memory": [attrs_to_json(a) for a in e.memory],
        "behavior": control_to_json(e.behavior) if e.behavior else None,
    }


def entity_from_json(data: Any) -> EntityDecl:
    behavior = data.get("behavior")
    return EntityDecl(
        _need(data, "id"),
        tuple(attrs_from_json(a) for a in data.get("memory", [])),
        control_from_json(behavior) if behavior else None,
    )


def community_to_json(c: CommunityDecl) -> dict:
    return {
        "name": c.name,
        "members": list(c.members),
        "facts": [{"owner": f.owner, "attrs": attrs_to_json(f.attrs)} for f in c.facts],
    }


def community_from_json(data: Any) -> CommunityDecl:
    facts = tuple(
        FactDecl(_need(f, "owner"), attrs_from_json(_need(f, "attrs")))
        for f in data.get("facts", [])
    )
    return CommunityDecl(_need(data, "name"), tuple(data.get("members", [])), facts)


def workspace_to_json(w: WorkspaceDecl) -> dict:
    return {
        "name": w.name,
        "components": [
            {
                "id": c.id,
                "kind": c.kind,
                "records": [attrs_to_json(r) for r in c.records],
                "predicate": operand_to_json(c.predicate) if c.predicate else None,
            }
            for c in w.components
        ],
        "arcs": [
            {
                "source": a.source,
                "target": a.target,
                "selector": operand_to_json(a.selector) if a.selector else None,
            }
            for a in w.arcs
        ],
    }


def workspace_from_json(data: Any) -> WorkspaceDecl:
    components = tuple(
        ComponentDecl(
            _need(c, "id"),
            _need(c, "kind"),
            tuple(attrs_from_json(r) for r in c.get("records", [])),
            operand_from_json(c["predicate"]) if c.get("predicate") else None,
        )
        for c in _need(data, "components")
    )
    arcs = tuple(
        ArcDecl(
            _need(a, "source"),
            _need(a, "target"),
            operand_from_json(a["selector"]) if a.get("selector") else None,
        )
        for a in data.get("arcs", [])
    )
    return WorkspaceDecl(_need(data, "name"), components, arcs)


def step_to_json(step: ScenarioStep) -> dict:
    if isinstance(step, PostStep):
        return {
            "post": {
                "entity": step.entity,
                "community": step.community,
                "attrs": attrs_to_json(step.attrs),
            }
        }
    if isinstance(step, RoundStep):
        return {"round": {"community": step.community}}
    if isinstance(step, PropagateStep):
        return {"propagate": {"workspace": step.workspace}}
    return {
        "replace": {
            "workspace": step.workspace,
            "filter": step.filter_id,
            "keep": operand_to_json(step.predicate),
        }
    }


def step_from_json(data: Any) -> ScenarioStep:
    if "post" in data:
        p = data["post"]
        return PostStep(
            _need(p, "entity"), _need(p, "community"), attrs_from_json(_need(p, "attrs"))
        )
    if "round" in data:
        return RoundStep(_need(data["round"], "community"))
    if "propagate" in data:
        return PropagateStep(_need(data["propagate"], "workspace"))
    if "replace" in data:
        r = data["replace"]
        return ReplaceStep(
            _need(r, "workspace"), _need(r, "filter"), operand_from_json(_need(r, "keep"))
        )
    raise CodecError("unknown scenario step")


# -- bundles -----------------------------------------------------------------------


def bundle_to_json(bundle: Bundle) -> dict:
    return {
        "operators": [operator_to_json(o) for o in bundle.operators],
        "operands": [
            {"name": o.name, "operand": operand_to_json(o.operand)} for o in bundle.operands
        ],
        "webs": [{"name": w.name, "web": web_to_json(w.web)} for w in bundle.webs],
        "controls": [
            {"name": c.name, "control": control_to_json(c.control)} for c in bundle.controls
        ],
        "annotations": [annotation_to_json(a) for a in bundle.annotations],
        "state": state_to_json(bundle.state) if bundle.state is not None else None,
        "entities": [entity_to_json(e) for e in bundle.entities],
        "communities": [community_to_json(c) for c in bundle.communities],
        "workspaces": [workspace_to_json(w) for w in bundle.workspaces],
        "scenario": [step_to_json(s) for s in bundle.scenario],
    }


def bundle_from_json(data: Any) -> Bundle:
    if not isinstance(data, dict):
        raise CodecError("bundle must be an object")
    try:
        return Bundle(
            operators=tuple(operator_from_json(o) for o in data.get("operators", [])),
            operands=tuple(
                NamedOperand(_need(o, "name"), operand_from_json(_need(o, "operand")))
                for o in data.get("operands", [])
            ),
            webs=tuple(
                NamedWeb(_need(w, "name"), web_from_json(_need(w, "web")))
                for w in data.get("webs", [])
            ),
            controls=tuple(
                NamedControl(_need(c, "name"), control_from_json(_need(c, "control")))
                for c in data.get("controls", [])
            ),
            annotations=tuple(annotation_from_json(a) for a in data.get("annotations", [])),
            state=state_from_json(data["state"]) if data.get("state") else None,
            entities=tuple(entity_from_json(e) for e in data.get("entities", [])),
            communities=tuple(community_from_json(c) for c in data.get("communities", [])),
            workspaces=tuple(workspace_from_json(w) for w in data.get("workspaces", [])),
            scenario=tuple(step_from_json(s) for s in data.get("scenario", [])),
        )
    except (ValueError, TypeError) as e:  # constructors veto malformed payloads
        raise CodecError(str(e))
