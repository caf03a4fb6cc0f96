"""Dataflow profile: records stream from sources through filters to viewers.

A workspace wires components with arcs. Arcs without a selector broadcast in
parallel; arcs with a selector from the same component form an alternative
group where the first selector that accepts the record receives it. Delivery
is exactly-once per (event, component) pair, queueing is FIFO, and a hard
delivery cap turns runaway graphs into a traced halt instead of a hang.

Replacing a filter clears the data views and re-propagates every source
exactly once, so views always reflect the current predicates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .core.operands import Constant, Operand, free_variables
from .core.operators import OperatorKind, ParamSpec
from .core.rules import Action, Condition, RewritingRule, RuleNode
from .core.state import State
from .core.structures import LayoutStructure, TopologicalObject, WebStructure
from .core.values import Coordinates, Value, is_identifier
from .dsl.bundle import ArcDecl, AttrSet, ComponentDecl, WorkspaceDecl
from .engine.evaluate import evaluate
from .engine.primitives import EvalError, as_bool
from .engine.registry import ConstructRegistry

DELIVERY_CAP = 10000

KINDS = ("source", "filter", "viewer", "handler")


class FlowError(Exception):
    pass


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str  # "data" | "change"
    payload: AttrSet
    emitter: str


@dataclass(frozen=True)
class TraceEntry:
    seq: int
    kind: str  # emit | deliver | forward | reject | view | change | duplicate | cap
    component: str
    event_seq: int
    detail: str = ""


@dataclass(frozen=True)
class Workspace:
    name: str
    components: tuple[ComponentDecl, ...]
    arcs: tuple[ArcDecl, ...]
    views: Mapping[str, tuple[AttrSet, ...]] = field(default_factory=dict)
    trace: tuple[TraceEntry, ...] = ()
    seq: int = 0
    capped: bool = False

    def component(self, cid: str) -> ComponentDecl:
        for c in self.components:
            if c.id == cid:
                return c
        raise FlowError(f"unknown component {cid!r}")

    def view(self, viewer: str) -> tuple[AttrSet, ...]:
        if self.component(viewer).kind != "viewer":
            raise FlowError(f"{viewer!r} is not a viewer")
        return self.views.get(viewer, ())

    def emissions(self, component: Optional[str] = None) -> tuple[TraceEntry, ...]:
        return tuple(
            t
            for t in self.trace
            if t.kind == "emit" and (component is None or t.component == component)
        )

    def behavior_view(self, cid: str) -> RuleNode:
        """The component restated as a rewriting rule, for inspection."""
        comp = self.component(cid)
        if comp.kind == "filter":
            assert comp.predicate is not None
            cond = _predicate_condition(comp.predicate)
            return RuleNode(
                RewritingRule(
                    f"{cid}-forward", (cond,), (Action("emit", (comp.predicate,)),)
                )
            )
        if comp.kind == "source":
            actions = tuple(
                Action("emit", (_attrs_operand(rec),)) for rec in comp.records
            ) or (Action("emit", (Constant(Value.text(cid)),)),)
            return RuleNode(RewritingRule(f"{cid}-emit", (), actions))
        verb = "view" if comp.kind == "viewer" else "handle"
        return RuleNode(
            RewritingRule(
                f"{cid}-{verb}", (), (Action("emit", (Constant(Value.text(cid)),)),)
            )
        )

    def as_web(self) -> WebStructure:
        """Two linked layouts: the wiring diagram and the current data."""
        comp_objects = []
        for i, c in enumerate(self.components):
            comp_objects.append(
                TopologicalObject(
                    Constant(Value.text(f"{c.kind}:{c.id}")),
                    Coordinates(0.0, 40.0 * i),
                )
            )
        data_objects = [TopologicalObject(Constant(Value.text(self.name)))]
        for viewer, rows in self.views.items():
            for row in rows:
                data_objects.append(TopologicalObject(_attrs_operand(row)))
        return WebStructure(
            (
                LayoutStructure("components", tuple(comp_objects)),
                LayoutStructure("data", tuple(data_objects)),
            ),
            (("components", "data"),),
        )


def _attrs_operand(attrs: AttrSet) -> Operand:
    from .casmas import attrs_to_operand

    return attrs_to_operand(attrs)


def _predicate_condition(predicate: Operand) -> Condition:
    from .core.operands import Application

    if isinstance(predicate, Application):
        return Condition(predicate.operator, predicate.args)
    return Condition("equals", (predicate, Constant(Value.boolean(True))))


def compose_workspace(decl: WorkspaceDecl) -> Workspace:
    """Validate the wiring and produce a quiescent workspace."""
    ids = {c.id for c in decl.components}
    by_id = {c.id: c for c in decl.components}
    for arc in decl.arcs:
        if arc.source not in ids or arc.target not in ids:
            raise FlowError(f"arc {arc.source!r} -> {arc.target!r} names unknown components")
        if by_id[arc.source].kind == "viewer":
            raise FlowError(f"viewer {arc.source!r} cannot feed an arc")
        if by_id[arc.target].kind == "source":
            raise FlowError(f"source {arc.target!r} cannot be an arc target")
    views = {c.id: () for c in decl.components if c.kind == "viewer"}
    return Workspace(decl.name, decl.components, decl.arcs, views)


def _payload_state(payload: AttrSet) -> Optional[State]:
    entries = {}
    for name, value in payload:
        if not is_identifier(name):
            return None
        entries[name] = Constant(value)
    return State({"event": entries})


def _accepts(predicate: Operand, payload: AttrSet, registry: ConstructRegistry) -> bool:
    """Predicates read the record's attributes as free variables; a record
    missing one of them, or failing the test, is rejected."""
    state = _payload_state(payload)
    if state is None:
        return False
    names = {v.name for v in free_variables(predicate)}
    if any(not state.has("event", n) for n in names):
        return False
    try:
        result = evaluate(predicate, state, registry)
    except EvalError:
        return False
    try:
        return as_bool(result, "predicate")
    except EvalError:
        return False


def propagate(ws: Workspace, registry: ConstructRegistry) -> Workspace:
    """Emit every source record once and drain the queue FIFO."""
    seq = ws.seq
    trace = list(ws.trace)
    views = {k: list(v) for k, v in ws.views.items()}
    queue: deque[Event] = deque()
    tick = len(trace)

    def t(kind: str, component: str, event_seq: int, detail: str = "") -> None:
        nonlocal tick
        tick += 1
        trace.append(TraceEntry(tick, kind, component, event_seq, detail))

    for comp in ws.components:
        if comp.kind != "source":
            continue
        for rec in comp.records:
            seq += 1
            queue.append(Event(seq, "data", rec, comp.id))
            t("emit", comp.id, seq)

    delivered: set[tuple[int, str]] = set()
    deliveries = 0
    capped = False
    while queue:
        ev = queue.popleft()
        for target in _route(ws, ev, registry):
            if (ev.seq, target) in delivered:
                t("duplicate", target, ev.seq)
                continue
            delivered.add((ev.seq, target))
            deliveries += 1
            if deliveries > DELIVERY_CAP:
                t("cap", target, ev.seq, f"delivery cap {DELIVERY_CAP} reached")
                capped = True
                queue.clear()
                break
            comp = ws.component(target)
            if comp.kind == "filter":
                assert comp.predicate is not None
                if _accepts(comp.predicate, ev.payload, registry):
                    seq += 1
                    queue.append(Event(seq, ev.kind, ev.payload, comp.id))
                    t("forward", comp.id, ev.seq)
                else:
                    t("reject", comp.id, ev.seq)
            elif comp.kind == "viewer":
                views[comp.id].append(ev.payload)
                t("view", comp.id, ev.seq)
            else:  # handler: reacts to change events, data passes through
                t("deliver", comp.id, ev.seq)
                if ev.kind == "change":
                    seq += 1
                    queue.append(Event(seq, "change", ev.payload, comp.id))
    return replace(
        ws,
        views={k: tuple(v) for k, v in views.items()},
        trace=tuple(trace),
        seq=seq,
        capped=capped,
    )


def _route(ws: Workspace, ev: Event, registry: ConstructRegistry) -> tuple[str, ...]:
    targets: list[str] = []
    alternative_taken = False
    for arc in ws.arcs:
        if arc.source != ev.emitter:
            continue
        if arc.selector is None:
            targets.append(arc.target)
        elif not alternative_taken and _accepts(arc.selector, ev.payload, registry):
            targets.append(arc.target)
            alternative_taken = True
    return tuple(targets)


def replace_filter(
    ws: Workspace, filter_id: str, predicate: Operand, registry: ConstructRegistry
) -> Workspace:
    """Swap a filter's predicate and rebuild the views with one fresh
    propagation. Handlers are notified with a change event first."""
    comp = ws.component(filter_id)
    if comp.kind != "filter":
        raise FlowError(f"{filter_id!r} is not a filter")
    components = tuple(
        replace(c, predicate=predicate) if c.id == filter_id else c for c in ws.components
    )
    trace = list(ws.trace)
    seq = ws.seq + 1
    trace.append(TraceEntry(len(trace) + 1, "change", filter_id, seq))
    for c in ws.components:
        if c.kind == "handler":
            trace.append(TraceEntry(len(trace) + 1, "deliver", c.id, seq, "change"))
    cleared = replace(
        ws,
        components=components,
        views={k: () for k in ws.views},
        trace=tuple(trace),
        seq=seq,
    )
    return propagate(cleared, registry)


def _emit_effect(ctx, values) -> None:
    ctx.call("emit", tuple(values))
    marker = ctx.fresh_name("meta", "emit")
    ctx.set_entry("meta", marker, Constant(Value.text("emit")))


def flow_registry(base: Optional[ConstructRegistry] = None) -> ConstructRegistry:
    reg = base if base is not None else ConstructRegistry.seed()
    return reg.register_native(
        "emit", OperatorKind.ACTIONAL, (ParamSpec("value"),), variadic=True, effect=_emit_effect
    )


SIGNATURES = {
    name: sig
    for name, sig in flow_registry().signatures().items()
    if name not in ConstructRegistry.seed().signatures()
}
