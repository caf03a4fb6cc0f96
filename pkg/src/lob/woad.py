"""Document-centric profile: datoms, didgets, templates, and filled documents.

A datom is a typed unit of document content, atomic or composed of other
datoms. A didget places a datom on a template; instantiating a template
yields a document whose fills append to a replayable history. Mechanisms are
rewriting rules attached to the document and joined by an implicit OR
connector; they run to quiescence after every fill, and the document carries
their refraction memory so a mechanism that already reacted to a value does
not react to it again on later fills.

Scopes: ``document`` holds didget values, ``presentation`` styling,
``meta`` markers (official, protected, counts), ``storage`` saved entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

from .core.operands import Application, Constant, Operand, Variable
from .core.operators import FunctionalBody, OperatorConstruct, OperatorKind, ParamSpec
from .core.rules import ConnectorNode, RewritingRule, RuleNode
from .core.state import State
from .core.structures import LayoutStructure, TopologicalObject, WebStructure
from .core.values import (
    ConstructionError,
    Coordinates,
    TypedVariable,
    Value,
    ValueKind,
    check_identifier,
)
from .engine.evaluate import value_conforms
from .engine.primitives import EvalError, as_text
from .engine.registry import ConstructRegistry
from .engine.runtime import ActionContext, EngineConfig, FiringRecord, run_to_quiescence


class WoadError(Exception):
    pass


# -- datoms ------------------------------------------------------------------


@dataclass(frozen=True)
class Datom:
    """A content unit: atomic with a value kind, or composed of others."""

    name: str
    kind: Optional[ValueKind] = None
    children: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "datom name")
        if self.children:
            if self.kind is not None:
                raise ConstructionError(f"composite datom {self.name!r} cannot carry a kind")
            if len(self.children) < 2:
                raise ConstructionError(f"composite datom {self.name!r} needs at least two parts")
        elif self.kind is None:
            raise ConstructionError(f"atomic datom {self.name!r} needs a value kind")

    @property
    def atomic(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class DatomRegistry:
    """Datoms by name; composites may only reference already-added datoms,
    which keeps the composition order well-founded."""

    datoms: Mapping[str, Datom] = field(default_factory=dict)

    def add(self, datom: Datom) -> "DatomRegistry":
        if datom.name in self.datoms:
            raise WoadError(f"datom {datom.name!r} already declared")
        for child in datom.children:
            if child not in self.datoms:
                raise WoadError(f"datom {datom.name!r} references undeclared {child!r}")
        out = dict(self.datoms)
        out[datom.name] = datom
        return DatomRegistry(out)

    def get(self, name: str) -> Optional[Datom]:
        return self.datoms.get(name)

    def leaves(self, name: str) -> tuple[str, ...]:
        datom = self.datoms.get(name)
        if datom is None:
            return ()
        if datom.atomic:
            return (name,)
        out: list[str] = []
        for child in datom.children:
            out.extend(self.leaves(child))
        return tuple(out)

    def operand(self, name: str) -> Operand:
        """Operand view of a datom: a typed variable for an atomic one,
        an aggregate of parts for a composite."""
        datom = self.datoms.get(name)
        if datom is None:
            raise WoadError(f"unknown datom {name!r}")
        if datom.atomic:
            assert datom.kind is not None
            return Variable(TypedVariable(name, datom.kind))
        return Application("aggregate", tuple(self.operand(c) for c in datom.children))


# -- templates ------------------------------------------------------------------


@dataclass(frozen=True)
class Didget:
    """A datom placed on a template. Placement is mandatory: a didget is
    where a datom shows up."""

    datom: str
    coordinates: Coordinates

    def __post_init__(self) -> None:
        check_identifier(self.datom, "didget datom")
        if not isinstance(self.coordinates, Coordinates):
            raise ConstructionError("a didget needs coordinates")


@dataclass(frozen=True)
class Template:
    name: str
    didgets: tuple[Didget, ...]

    def __post_init__(self) -> None:
        check_identifier(self.name, "template name")
        if not self.didgets:
            raise ConstructionError(f"template {self.name!r} needs at least one didget")
        names = [d.datom for d in self.didgets]
        if len(names) != len(set(names)):
            raise ConstructionError(f"template {self.name!r} places a datom twice")

    def didget_names(self) -> tuple[str, ...]:
        return tuple(d.datom for d in self.didgets)

    def to_layout(self, datoms: DatomRegistry) -> LayoutStructure:
        objects = tuple(
            TopologicalObject(datoms.operand(d.datom), d.coordinates) for d in self.didgets
        )
        return LayoutStructure(self.name, objects)

    def fillable(self, datoms: DatomRegistry) -> tuple[str, ...]:
        """Leaf datoms reachable from the template's didgets."""
        out: list[str] = []
        for d in self.didgets:
            for leaf in datoms.leaves(d.datom):
                if leaf not in out:
                    out.append(leaf)
        return tuple(out)


# -- documents --------------------------------------------------------------------


@dataclass(frozen=True)
class FillEvent:
    seq: int
    didget: str
    old: Optional[Operand]
    new: Optional[Operand]
    author: str
    timestamp: str


_SCOPE_ORDER = ("document", "presentation", "meta", "storage", "scratch")


@dataclass(frozen=True)
class Document:
    id: str
    template: Template
    datoms: DatomRegistry
    registry: ConstructRegistry
    mechanisms: tuple[RewritingRule, ...] = ()
    state: State = field(default_factory=lambda: State({s: {} for s in _SCOPE_ORDER}))
    history: tuple[FillEvent, ...] = ()
    memory: Mapping[tuple[int, ...], tuple] = field(default_factory=dict)

    def values(self) -> dict[str, Operand]:
        return dict(self.state.entries("document"))

    def styles(self) -> dict[str, Operand]:
        return dict(self.state.entries("presentation"))

    def markers(self) -> dict[str, Operand]:
        return dict(self.state.entries("meta"))

    def web(self) -> WebStructure:
        return WebStructure((self.template.to_layout(self.datoms),))

    def control(self) -> Optional[ConnectorNode]:
        if not self.mechanisms:
            return None
        return ConnectorNode("or", tuple(RuleNode(m) for m in self.mechanisms))


def new_document(
    doc_id: str,
    template: Template,
    datoms: DatomRegistry,
    registry: ConstructRegistry,
    mechanisms: tuple[RewritingRule, ...] = (),
) -> Document:
    check_identifier(doc_id, "document id")
    for d in template.didgets:
        if datoms.get(d.datom) is None:
            raise WoadError(f"template {template.name!r} places undeclared datom {d.datom!r}")
    for m in mechanisms:
        for v in validate_mechanism(m, template, datoms):
            raise WoadError(v)
    return Document(doc_id, template, datoms, registry, tuple(mechanisms))


def validate_mechanism(
    mechanism: RewritingRule, template: Template, datoms: DatomRegistry
) -> list[str]:
    """Mechanism conditions may only watch didgets the template actually has
    (variables and literal document-scope reads)."""
    known = set(template.fillable(datoms)) | set(template.didget_names())
    out: list[str] = []
    for cond in mechanism.conditions:
        for arg in cond.args:
            out.extend(_check_reads(arg, known, mechanism.name))
    return out


def _check_reads(op: Operand, known: set[str], mech: str) -> list[str]:
    out: list[str] = []
    if isinstance(op, Variable) and op.var.name not in known:
        out.append(f"mechanism {mech!r} watches unknown didget {op.var.name!r}")
    elif isinstance(op, Application):
        if op.operator == "entry-or" and len(op.args) >= 2:
            name_arg, scope_arg = op.args[0], op.args[1]
            if (
                isinstance(scope_arg, Constant)
                and scope_arg.value.raw == "document"
                and isinstance(name_arg, Constant)
                and isinstance(name_arg.value.raw, str)
                and name_arg.value.raw not in known
            ):
                out.append(f"mechanism {mech!r} watches unknown didget {name_arg.value.raw!r}")
        for a in op.args:
            out.extend(_check_reads(a, known, mech))
    return out


def fill(
    document: Document,
    didget: str,
    value: Value,
    author: str = "",
    timestamp: str = "",
    config: EngineConfig = EngineConfig(),
) -> tuple[Document, tuple[FiringRecord, ...]]:
    """Set one leaf didget, then run the document's mechanisms to quiescence.

    Returns the updated document and the mechanism firings. Document-scope
    changes made by mechanisms are appended to the history with a
    ``mechanism:<rule>`` author so a history replay reproduces the document
    without re-running any rule.
    """
    datom = document.datoms.get(didget)
    if datom is None or not datom.atomic:
        raise WoadError(f"didget {didget!r} is not a fillable leaf")
    if didget not in document.template.fillable(document.datoms):
        raise WoadError(f"didget {didget!r} is not on template {document.template.name!r}")
    if document.state.get("meta", f"protected-{didget}") == Constant(Value.boolean(True)):
        raise WoadError(f"didget {didget!r} is protected")
    assert datom.kind is not None
    if not value_conforms(value, datom.kind, False):
        raise WoadError(f"didget {didget!r} holds {datom.kind.value}, got {value.kind.value}")

    old = document.state.get("document", didget)
    st = document.state.with_entry("document", didget, Constant(value))
    events = [FillEvent(st.seq, didget, old, Constant(value), author, timestamp)]
    memory = dict(document.memory)
    firings: tuple[FiringRecord, ...] = ()
    control = document.control()
    if control is not None:
        rr = run_to_quiescence(control, st, document.registry, config, memory=memory)
        if rr.halted != "quiescent":
            raise WoadError(f"mechanisms did not quiesce within {config.max_iterations} firings")
        st = rr.state
        memory = dict(rr.memory)
        firings = rr.firings()
        for fr in firings:
            for d in fr.deltas:
                if d.scope == "document":
                    events.append(
                        FillEvent(
                            fr.seq_after, d.name, d.old, d.new, f"mechanism:{fr.rule}", timestamp
                        )
                    )
    doc = replace(document, state=st, history=document.history + tuple(events), memory=memory)
    return doc, firings


def replay_history(document: Document) -> dict[str, Operand]:
    """Fold the fill history into final document values, no rules involved."""
    values: dict[str, Operand] = {}
    for ev in document.history:
        if ev.new is None:
            values.pop(ev.didget, None)
        else:
            values[ev.didget] = ev.new
    return values


def style_firings(firings: tuple[FiringRecord, ...]) -> tuple[FiringRecord, ...]:
    """Firings that changed presentation styling."""
    return tuple(
        fr
        for fr in firings
        if any(d.scope == "presentation" and d.name.startswith("style-") for d in fr.deltas)
    )


# -- the document actionals ----------------------------------------------------------


def _document_entry(ctx: ActionContext, name: str, op: str) -> Operand:
    found = ctx.get_entry("document", name)
    if found is None:
        raise EvalError("unbound-variable", f"{op}: no document entry {name!r}")
    return found


def _marker_true(ctx: ActionContext, name: str) -> bool:
    return ctx.get_entry("meta", name) == Constant(Value.boolean(True))


def _check_writable(ctx: ActionContext, didget: str, op: str) -> None:
    if _marker_true(ctx, f"protected-{didget}"):
        raise EvalError("protected", f"{op}: didget {didget!r} is protected")


def _set_marker(ctx: ActionContext, name: str) -> None:
    ctx.set_entry("meta", name, Constant(Value.boolean(True)))


def _trace_only(verb: str) -> Callable:
    def effect(ctx: ActionContext, values) -> None:
        rendered = tuple(v for v in values)
        ctx.call(verb, rendered)
        name = ctx.fresh_name("meta", f"{verb}-")
        ctx.set_entry("meta", name, Constant(Value.boolean(True)))

    return effect


def _build_natives(datoms: DatomRegistry):
    from .engine.primitives import runtime_to_operand

    def write(ctx, values):
        didget = as_text(values[0], "write")
        _check_writable(ctx, didget, "write")
        ctx.set_entry("document", didget, runtime_to_operand(values[1]))

    def correct(ctx, values):
        didget = as_text(values[0], "correct")
        if _marker_true(ctx, f"official-{didget}"):
            raise EvalError("officialized", f"correct: didget {didget!r} is official")
        _check_writable(ctx, didget, "correct")
        _document_entry(ctx, didget, "correct")
        ctx.set_entry("document", didget, runtime_to_operand(values[1]))

    def copy(ctx, values):
        src = as_text(values[0], "copy")
        dst = as_text(values[1], "copy")
        _check_writable(ctx, dst, "copy")
        ctx.set_entry("document", dst, _document_entry(ctx, src, "copy"))

    def delete(ctx, values):
        didget = as_text(values[0], "delete")
        _check_writable(ctx, didget, "delete")
        ctx.remove_entry("document", didget)

    def create(ctx, values):
        name = as_text(values[0], "create")
        datom = datoms.get(name)
        if datom is None or not datom.atomic:
            raise EvalError("unbound-variable", f"create: no atomic datom {name!r}")
        if ctx.get_entry("document", name) is not None:
            raise EvalError("duplicate-name", f"create: document entry {name!r} exists")
        defaults = {
            ValueKind.TEXT: Value.text(""),
            ValueKind.INTEGER: Value.integer(0),
            ValueKind.DECIMAL: Value.decimal(0.0),
            ValueKind.BOOLEAN: Value.boolean(False),
        }
        assert datom.kind is not None
        default = defaults.get(datom.kind)
        if default is None:
            raise EvalError("type-mismatch", f"create: datom {name!r} has no default")
        ctx.set_entry("document", name, Constant(default))

    def save(ctx, values):
        didget = as_text(values[0], "save")
        ctx.set_entry("storage", didget, _document_entry(ctx, didget, "save"))

    def retrieve(ctx, values):
        name = as_text(values[0], "retrieve")
        found = ctx.get_entry("storage", name)
        if found is None:
            raise EvalError("unbound-variable", f"retrieve: nothing stored as {name!r}")
        _check_writable(ctx, name, "retrieve")
        ctx.set_entry("document", name, found)

    def store(ctx, values):
        ctx.set_entry("storage", as_text(values[0], "store"), runtime_to_operand(values[1]))

    def officialize(ctx, values):
        didget = as_text(values[0], "officialize")
        _document_entry(ctx, didget, "officialize")
        _set_marker(ctx, f"official-{didget}")

    def protect(ctx, values):
        _set_marker(ctx, f"protected-{as_text(values[0], 'protect')}")

    def count(ctx, values):
        target = as_text(values[0], "count")
        filled = sum(
            1 for leaf in datoms.leaves(target) if ctx.get_entry("document", leaf) is not None
        )
        ctx.set_entry("meta", f"count-{target}", Constant(Value.integer(filled)))

    def style(ctx, values):
        didget = as_text(values[0], "style")
        token = as_text(values[1], "style")
        ctx.set_entry("presentation", f"style-{didget}", Constant(Value.text(token)))

    def datom_decl(ctx, values):
        ctx.call("datom", tuple(values))
        _set_marker(ctx, ctx.fresh_name("meta", "datom-"))

    t = lambda n: ParamSpec(n, ValueKind.TEXT)
    anyp = lambda n: ParamSpec(n)
    return [
        ("write", (t("didget"), anyp("value")), write),
        ("correct", (t("didget"), anyp("value")), correct),
        ("copy", (t("from"), t("to")), copy),
        ("delete", (t("didget"),), delete),
        ("create", (t("didget"),), create),
        ("save", (t("didget"),), save),
        ("retrieve", (t("name"),), retrieve),
        ("store", (t("name"), anyp("value")), store),
        ("officialize", (t("didget"),), officialize),
        ("protect", (t("didget"),), protect),
        ("count", (t("target"),), count),
        ("style", (t("didget"), t("token")), style),
        ("datom", (t("name"), t("kind")), datom_decl),
        ("attach", (t("target"), ParamSpec("media", ValueKind.MEDIA)), _trace_only("attach")),
        ("cache", (t("target"),), _trace_only("cache")),
        ("print", (t("target"),), _trace_only("print")),
        ("transmit", (t("target"), t("to")), _trace_only("transmit")),
        ("open-read", (t("target"),), _trace_only("open-read")),
    ]


_AVERAGE = OperatorConstruct(
    "average",
    OperatorKind.FUNCTIONAL,
    (ParamSpec("items", ValueKind.DECIMAL, group=True),),
    FunctionalBody(
        Application(
            "divide",
            (
                Application("total", (Variable(TypedVariable("items", ValueKind.DECIMAL, True)),)),
                Application("size", (Variable(TypedVariable("items", ValueKind.DECIMAL, True)),)),
            ),
        )
    ),
    result=ValueKind.DECIMAL,
)


def woad_registry(
    datoms: DatomRegistry, base: Optional[ConstructRegistry] = None
) -> ConstructRegistry:
    """The seed registry extended with the document actionals and the
    ``average`` specialization."""
    reg = base if base is not None else ConstructRegistry.seed()
    for name, params, effect in _build_natives(datoms):
        reg = reg.register_native(name, OperatorKind.ACTIONAL, params, effect=effect)
    return reg.register(_AVERAGE)


SIGNATURES = {
    name: sig
    for name, sig in woad_registry(DatomRegistry()).signatures().items()
    if name not in ConstructRegistry.seed().signatures()
}
