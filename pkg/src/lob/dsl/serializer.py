"""Canonical text form of a bundle.

One canonical form per bundle: two-space indentation, fixed section order,
one blank line between blocks, LF line endings, trailing newline. Because
the form is canonical, formatting is idempotent by construction.
"""

from __future__ import annotations

from ..core.annotations import Annotation, OperatorStyle, SymbolStyle, TargetKind
from ..core.operands import Application, Constant, Operand, Variable
from ..core.operators import (
    ActionalBody,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
)
from ..core.rules import ConnectorNode, ControlStructure, RewritingRule, RuleNode
from ..core.state import State
from ..core.structures import LayoutStructure, WebStructure
from ..core.validate import (
    validate_annotation,
    validate_control_structure,
    validate_operand,
    validate_web_structure,
)
from ..core.values import Value, ValueKind
from .bundle import (
    ArcDecl,
    AttrSet,
    Bundle,
    CommunityDecl,
    ComponentDecl,
    EntityDecl,
    PostStep,
    PropagateStep,
    ReplaceStep,
    RoundStep,
    WorkspaceDecl,
    signature_view,
)

INDENT = "  "


class SerializeError(ValueError):
    """The bundle fails validation and has no canonical text form."""

    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = tuple(violations)


# -- leaf rendering --------------------------------------------------------------


def escape_text(raw: str) -> str:
    out = []
    for ch in raw:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def render_value(v: Value) -> str:
    if v.kind is ValueKind.BOOLEAN:
        return "true" if v.raw else "false"
    if v.kind is ValueKind.INTEGER:
        return str(v.raw)
    if v.kind is ValueKind.DECIMAL:
        return repr(v.raw)
    if v.kind is ValueKind.TEXT:
        return f'"{escape_text(str(v.raw))}"'
    return f'media("{escape_text(str(v.raw))}", "{escape_text(str(v.media_kind))}")'


def _render_kind(kind: ValueKind | None, group: bool) -> str:
    base = kind.value if kind is not None else "any"
    return base + ("*" if group else "")


def render_operand(op: Operand) -> str:
    if isinstance(op, Constant):
        return render_value(op.value)
    if isinstance(op, Variable):
        return f"{op.var.name}: {_render_kind(op.var.kind, op.var.group)}"
    return f"{op.operator}({', '.join(render_operand(a) for a in op.args)})"


def render_invocation(operator: str, args: tuple[Operand, ...]) -> str:
    return f"{operator}({', '.join(render_operand(a) for a in args)})"


def _render_param(p: ParamSpec) -> str:
    return f"{p.name}: {_render_kind(p.kind, p.group)}"


def _render_attrs(attrs: AttrSet) -> str:
    inner = ", ".join(f'"{escape_text(n)}" = {render_value(v)}' for n, v in attrs)
    return "{ " + inner + " }"


# -- block rendering ---------------------------------------------------------------


def _operator_block(op: OperatorConstruct) -> list[str]:
    params = ", ".join(_render_param(p) for p in op.params)
    if op.kind is OperatorKind.FUNCTIONAL:
        head = (
            f"operator {op.name} functional({params}) -> "
            f"{_render_kind(op.result, op.result_group)}:"
        )
        assert isinstance(op.body, FunctionalBody)
        return [head, INDENT + render_operand(op.body.expr)]
    head = f"operator {op.name} actional({params}):"
    assert isinstance(op.body, ActionalBody)
    return [head] + [INDENT + render_operand(step) for step in op.body.steps]


def _layout_block(layout: LayoutStructure, depth: int) -> list[str]:
    pad = INDENT * depth
    lines = [f"{pad}layout {layout.name}:"]
    for obj in layout.objects:
        line = f"{pad}{INDENT}object {render_operand(obj.operand)}"
        if obj.coordinates is not None:
            line += f" at ({obj.coordinates.x!r}, {obj.coordinates.y!r})"
        lines.append(line)
    return lines


def _web_block(name: str, web: WebStructure) -> list[str]:
    lines = [f"web {name}:"]
    for layout in web.layouts:
        lines.extend(_layout_block(layout, 1))
    for src, dst in web.hyperlinks:
        lines.append(f"{INDENT}link {src} -> {dst}")
    return lines


def _rule_block(rule: RewritingRule, depth: int) -> list[str]:
    pad = INDENT * depth
    lines = [f"{pad}rule {rule.name}:"]
    for c in rule.conditions:
        lines.append(f"{pad}{INDENT}when {render_invocation(c.operator, c.args)}")
    for a in rule.actions:
        lines.append(f"{pad}{INDENT}then {render_invocation(a.operator, a.args)}")
    return lines


def _control_block(name: str, cs: ControlStructure) -> list[str]:
    if isinstance(cs, RuleNode):
        return _rule_block(cs.rule, 0)
    lines = [f"connector {name} {cs.operator}:"]
    for child in cs.children:
        lines.extend(_control_child(child, 1))
    return lines


def _control_child(cs: ControlStructure, depth: int) -> list[str]:
    if isinstance(cs, RuleNode):
        return _rule_block(cs.rule, depth)
    pad = INDENT * depth
    lines = [f"{pad}connector {cs.operator}:"]
    for child in cs.children:
        lines.extend(_control_child(child, depth + 1))
    return lines


_TARGET_WORDS = {
    TargetKind.CONTROL: "rule",
    TargetKind.OBJECT: "object",
    TargetKind.ANNOTATION: "annotation",
}


def _annotation_block(ann: Annotation) -> list[str]:
    lines = [f'annotation {ann.id} by "{escape_text(ann.author)}" at "{escape_text(ann.timestamp)}":']
    if isinstance(ann.body, SymbolStyle):
        lines.append(f"{INDENT}body style {' '.join(ann.body.tokens)}")
    elif isinstance(ann.body, OperatorStyle):
        lines.append(f"{INDENT}body apply {render_operand(ann.body.application)}")
    else:
        lines.append(f"{INDENT}body {render_value(ann.body)}")
    for ref in ann.targets:
        line = f"{INDENT}target {_TARGET_WORDS[ref.kind]} {'/'.join(ref.path)}"
        if ref.selector != "select":
            line += f" via {ref.selector}"
        lines.append(line)
    return lines


def _state_block(state: State) -> list[str]:
    lines = ["state:"]
    for scope in state.scope_names():
        for name, op in state.entries(scope):
            lines.append(f"{INDENT}{scope} {name} = {render_operand(op)}")
    return lines


def _entity_block(e: EntityDecl) -> list[str]:
    lines = [f"entity {e.id}:"]
    for attrs in e.memory:
        lines.append(f"{INDENT}memory {_render_attrs(attrs)}")
    if e.behavior is not None:
        assert isinstance(e.behavior, ConnectorNode)
        lines.append(f"{INDENT}behavior {e.behavior.operator}:")
        for child in e.behavior.children:
            lines.extend(_control_child(child, 2))
    return lines


def _community_block(c: CommunityDecl) -> list[str]:
    lines = [f"community {c.name}:"]
    for m in c.members:
        lines.append(f"{INDENT}member {m}")
    for f in c.facts:
        lines.append(f"{INDENT}fact {f.owner} {_render_attrs(f.attrs)}")
    return lines


def _component_lines(comp: ComponentDecl) -> list[str]:
    if comp.kind == "source":
        lines = [f"{INDENT}source {comp.id}:"]
        for rec in comp.records:
            lines.append(f"{INDENT}{INDENT}record {_render_attrs(rec)}")
        return lines
    if comp.kind == "filter":
        assert comp.predicate is not None
        return [
            f"{INDENT}filter {comp.id}:",
            f"{INDENT}{INDENT}keep {render_operand(comp.predicate)}",
        ]
    return [f"{INDENT}{comp.kind} {comp.id}"]


def _workspace_block(w: WorkspaceDecl) -> list[str]:
    lines = [f"workspace {w.name}:"]
    for comp in w.components:
        lines.extend(_component_lines(comp))
    for arc in w.arcs:
        line = f"{INDENT}wire {arc.source} -> {arc.target}"
        if arc.selector is not None:
            line += f" when {render_operand(arc.selector)}"
        lines.append(line)
    return lines


def _scenario_block(steps) -> list[str]:
    lines = ["scenario:"]
    for s in steps:
        if isinstance(s, PostStep):
            lines.append(f"{INDENT}post {s.entity} {s.community} {_render_attrs(s.attrs)}")
        elif isinstance(s, RoundStep):
            lines.append(f"{INDENT}round {s.community}")
        elif isinstance(s, PropagateStep):
            lines.append(f"{INDENT}propagate {s.workspace}")
        else:
            assert isinstance(s, ReplaceStep)
            lines.append(f"{INDENT}replace {s.workspace} {s.filter_id}:")
            lines.append(f"{INDENT}{INDENT}keep {render_operand(s.predicate)}")
    return lines


# -- entry point --------------------------------------------------------------------


def _validate(bundle: Bundle) -> None:
    view = signature_view(bundle)
    violations = []
    for op in bundle.operators:
        locals_ = {p.name: (p.kind, p.group) for p in op.params}
        if isinstance(op.body, FunctionalBody):
            violations.extend(validate_operand(op.body.expr, view, op.name, locals_))
        else:
            for i, step_app in enumerate(op.body.steps):
                for arg in step_app.args:
                    violations.extend(validate_operand(arg, view, f"{op.name}/{i}", locals_))
    for named in bundle.operands:
        violations.extend(validate_operand(named.operand, view, named.name))
    for nw in bundle.webs:
        violations.extend(validate_web_structure(nw.web, view, nw.name).violations)
    for nc in bundle.controls:
        violations.extend(validate_control_structure(nc.control, view, nc.name).violations)
    for ann in bundle.annotations:
        violations.extend(validate_annotation(ann, view))
    if violations:
        raise SerializeError(violations)


def serialize(bundle: Bundle, *, validate: bool = True) -> str:
    """Render a bundle to its canonical text. Deterministic: equal bundles
    yield identical bytes."""
    if validate:
        _validate(bundle)
    blocks: list[list[str]] = []
    for op in bundle.operators:
        blocks.append(_operator_block(op))
    for named in bundle.operands:
        blocks.append([f"operand {named.name} = {render_operand(named.operand)}"])
    for nw in bundle.webs:
        blocks.append(_web_block(nw.name, nw.web))
    for nc in bundle.controls:
        blocks.append(_control_block(nc.name, nc.control))
    for ann in bundle.annotations:
        blocks.append(_annotation_block(ann))
    if bundle.state is not None:
        blocks.append(_state_block(bundle.state))
    for e in bundle.entities:
        blocks.append(_entity_block(e))
    for c in bundle.communities:
        blocks.append(_community_block(c))
    for w in bundle.workspaces:
        blocks.append(_workspace_block(w))
    if bundle.scenario:
        blocks.append(_scenario_block(bundle.scenario))
    if not blocks:
        return ""
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"
