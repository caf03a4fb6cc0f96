"""Shared-space profile: entities react to facts posted in communities.

Entities own private memories and belong to communities; each community has
one space of facts. Coordination is asynchronous and data-driven: an entity
posts a fact into a space, and member entities react to what they can see,
never to messages. Visibility is the capability: an entity's state view only
contains the spaces of communities it belongs to, so posting elsewhere fails.

A reaction round freezes the world, lets every member's behavior run to
quiescence against that frozen view, then folds all effects back in a
canonical order. New fact names are drawn from per-entity counters, so the
outcome does not depend on the order entities were evaluated in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .core.operands import Application, Constant, Operand
from .core.operators import FunctionalBody, OperatorConstruct, OperatorKind, ParamSpec
from .core.rules import ConnectorNode, ControlStructure
from .core.state import State
from .core.structures import LayoutStructure, TopologicalObject, WebStructure
from .core.values import ConstructionError, Value, ValueKind, check_identifier
from .dsl.bundle import AttrSet, Bundle, check_attrs
from .engine.primitives import EvalError, as_text, record_pairs
from .engine.registry import ConstructRegistry
from .engine.runtime import ActionContext, EngineConfig, FiringRecord, run_to_quiescence
from .core.operands import Variable
from .core.values import TypedVariable


class CasmasError(Exception):
    pass


class MembershipError(CasmasError):
    """An entity acted on a community it does not belong to."""


@dataclass(frozen=True)
class Fact:
    """An attribute set owned by the entity that posted it."""

    owner: str
    attrs: AttrSet

    def __post_init__(self) -> None:
        check_identifier(self.owner, "fact owner")
        check_attrs(self.attrs, "fact")


@dataclass(frozen=True)
class Entity:
    id: str
    memory: tuple[tuple[str, Operand], ...] = ()
    behavior: Optional[ControlStructure] = None

    def __post_init__(self) -> None:
        check_identifier(self.id, "entity id")


@dataclass(frozen=True)
class Community:
    name: str
    members: tuple[str, ...]
    facts: tuple[tuple[str, Fact], ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "community name")

    @property
    def scope(self) -> str:
        return f"space-{self.name}"


def attrs_to_operand(attrs: AttrSet) -> Operand:
    pairs = tuple(
        Application("list", (Constant(Value.text(name)), Constant(v))) for name, v in attrs
    )
    return Application("aggregate", pairs)


def operand_to_attrs(op: Operand) -> AttrSet:
    """Inverse of attrs_to_operand for the stored record shape."""
    if not (isinstance(op, Application) and op.operator in ("aggregate", "list")):
        raise CasmasError(f"not a record operand: {op!r}")
    attrs: list[tuple[str, Value]] = []
    for pair in op.args:
        if not (
            isinstance(pair, Application)
            and pair.operator == "list"
            and len(pair.args) == 2
            and isinstance(pair.args[0], Constant)
            and pair.args[0].value.kind is ValueKind.TEXT
            and isinstance(pair.args[1], Constant)
        ):
            raise CasmasError(f"not a record operand: {op!r}")
        attrs.append((str(pair.args[0].value.raw), pair.args[1].value))
    return tuple(attrs)


@dataclass(frozen=True)
class World:
    entities: Mapping[str, Entity] = field(default_factory=dict)
    communities: Mapping[str, Community] = field(default_factory=dict)
    registry: ConstructRegistry = field(default_factory=lambda: casmas_registry())
    counters: Mapping[str, int] = field(default_factory=dict)
    memories: Mapping[str, Mapping[tuple[int, ...], tuple]] = field(default_factory=dict)
    calls: tuple = ()

    # -- membership and views ---------------------------------------------------

    def memberships(self, entity_id: str) -> tuple[str, ...]:
        return tuple(c.name for c in self.communities.values() if entity_id in c.members)

    def view(self, entity_id: str) -> State:
        """What the entity can see: its memory, then the spaces of its
        communities in declaration order."""
        entity = self.entities.get(entity_id)
        if entity is None:
            raise CasmasError(f"unknown entity {entity_id!r}")
        scopes: dict[str, dict[str, Operand]] = {"memory": dict(entity.memory)}
        for name in self.memberships(entity_id):
            comm = self.communities[name]
            scopes[comm.scope] = {fn: attrs_to_operand(f.attrs) for fn, f in comm.facts}
        return State(scopes)

    def space(self, community: str) -> tuple[tuple[str, Fact], ...]:
        comm = self.communities.get(community)
        if comm is None:
            raise CasmasError(f"unknown community {community!r}")
        return comm.facts

    def web_structure(self) -> WebStructure:
        """Spaces as layouts, hyperlinked when they share a member. Facts are
        not geometrically localized, so objects carry no coordinates."""
        layouts = []
        for comm in self.communities.values():
            objects = [TopologicalObject(Constant(Value.text(comm.name)))]
            for _, fact in comm.facts:
                objects.append(TopologicalObject(attrs_to_operand(fact.attrs)))
            layouts.append(LayoutStructure(comm.name, tuple(objects)))
        names = [c.name for c in self.communities.values()]
        links = []
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                shared = set(self.communities[a].members) & set(self.communities[b].members)
                if shared:
                    links.append((a, b))
        return WebStructure(tuple(layouts), tuple(links))

    # -- direct operations --------------------------------------------------------

    def post(self, entity_id: str, community: str, attrs: AttrSet) -> "World":
        comm = self.communities.get(community)
        if comm is None:
            raise CasmasError(f"unknown community {community!r}")
        if entity_id not in comm.members:
            raise MembershipError(f"{entity_id!r} is not a member of {community!r}")
        check_attrs(attrs, "post")
        counters = dict(self.counters)
        counters[entity_id] = counters.get(entity_id, 0) + 1
        name = f"f-{entity_id}-{counters[entity_id]}"
        fact = Fact(entity_id, attrs)
        communities = dict(self.communities)
        communities[community] = replace(comm, facts=comm.facts + ((name, fact),))
        return replace(self, communities=communities, counters=counters)


# -- reaction rounds ------------------------------------------------------------------


@dataclass(frozen=True)
class RoundReport:
    community: str
    firings: tuple[tuple[str, tuple[FiringRecord, ...]], ...]  # per entity, member order

    @property
    def quiescent(self) -> bool:
        return all(not frs for _, frs in self.firings)

    def fired(self) -> tuple[str, ...]:
        return tuple(e for e, frs in self.firings if frs)


def reaction_round(
    world: World,
    community: str,
    *,
    evaluation_order: Optional[Sequence[str]] = None,
    config: EngineConfig = EngineConfig(),
) -> tuple[World, RoundReport]:
    """One round: every member reacts to the round-start snapshot; effects
    land at the end in member declaration order. ``evaluation_order`` only
    permutes when behaviors are evaluated and never affects the outcome."""
    comm = world.communities.get(community)
    if comm is None:
        raise CasmasError(f"unknown community {community!r}")
    order = tuple(evaluation_order) if evaluation_order is not None else comm.members
    if sorted(order) != sorted(comm.members):
        raise CasmasError("evaluation order must permute the community members")

    counters = dict(world.counters)
    memories = {e: dict(m) for e, m in world.memories.items()}
    calls: list = []
    results: dict[str, tuple[FiringRecord, ...]] = {}
    for entity_id in order:
        entity = world.entities[entity_id]
        if entity.behavior is None:
            continue
        box = [counters.get(entity_id, 0)]

        def namer(ctx: ActionContext, scope: str, prefix: str, _e=entity_id, _b=box) -> str:
            _b[0] += 1
            return f"{prefix}-{_e}-{_b[0]}"

        rr = run_to_quiescence(
            entity.behavior,
            world.view(entity_id),
            world.registry,
            config,
            memory=memories.get(entity_id),
            namer=namer,
            calls=calls,
        )
        if rr.halted != "quiescent":
            raise CasmasError(
                f"behavior of {entity_id!r} did not quiesce within {config.max_iterations} firings"
            )
        counters[entity_id] = box[0]
        memories[entity_id] = dict(rr.memory)
        results[entity_id] = rr.firings()

    out = world
    for entity_id in comm.members:
        if entity_id in results:
            out = _fold(out, entity_id, results[entity_id])
    out = replace(
        out, counters=counters, memories=memories, calls=world.calls + tuple(calls)
    )
    report = RoundReport(
        community,
        tuple((e, results.get(e, ())) for e in comm.members),
    )
    return out, report


def run_rounds(
    world: World, community: str, max_rounds: int = 10, config: EngineConfig = EngineConfig()
) -> tuple[World, tuple[RoundReport, ...]]:
    """Rounds until one passes with no firing."""
    reports: list[RoundReport] = []
    current = world
    for _ in range(max_rounds):
        current, report = reaction_round(current, community, config=config)
        reports.append(report)
        if report.quiescent:
            return current, tuple(reports)
    raise CasmasError(f"community {community!r} did not settle within {max_rounds} rounds")


def _fold(world: World, entity_id: str, firings: tuple[FiringRecord, ...]) -> World:
    entities = dict(world.entities)
    communities = dict(world.communities)
    space_names = {c.scope: c.name for c in world.communities.values()}
    for fr in firings:
        for d in fr.deltas:
            if d.scope == "memory":
                entity = entities[entity_id]
                mem = [p for p in entity.memory if p[0] != d.name]
                if d.op == "set":
                    assert d.new is not None
                    mem.append((d.name, d.new))
                entities[entity_id] = replace(entity, memory=tuple(mem))
            elif d.scope in space_names:
                comm = communities[space_names[d.scope]]
                facts = [p for p in comm.facts if p[0] != d.name]
                if d.op == "set":
                    assert d.new is not None
                    facts.append((d.name, Fact(entity_id, operand_to_attrs(d.new))))
                communities[space_names[d.scope]] = replace(comm, facts=tuple(facts))
            else:
                raise CasmasError(
                    f"entity {entity_id!r} wrote outside its view: scope {d.scope!r}"
                )
    return replace(world, entities=entities, communities=communities)


# -- natives ---------------------------------------------------------------------------


def _post_effect(ctx: ActionContext, values) -> None:
    community = as_text(values[1], "post")
    scope = f"space-{community}"
    if scope not in ctx.state.scope_names():
        raise EvalError("membership", f"post: not a member of {community!r}")
    pairs = record_pairs(values[0], "post")
    attrs = []
    for name, v in pairs:
        if not isinstance(v, Value):
            raise EvalError("type-mismatch", "post: attribute values must be scalar")
        attrs.append((name, v))
    name = ctx.fresh_name(scope, "f")
    ctx.set_entry(scope, name, attrs_to_operand(tuple(attrs)))


def _retract_effect(ctx: ActionContext, values) -> None:
    name = as_text(values[0], "retract")
    community = as_text(values[1], "retract")
    scope = f"space-{community}"
    if scope not in ctx.state.scope_names():
        raise EvalError("membership", f"retract: not a member of {community!r}")
    ctx.remove_entry(scope, name)


def _remember_effect(ctx: ActionContext, values) -> None:
    from .engine.primitives import runtime_to_operand

    ctx.set_entry("memory", as_text(values[0], "remember"), runtime_to_operand(values[1]))


def _forget_effect(ctx: ActionContext, values) -> None:
    ctx.remove_entry("memory", as_text(values[0], "forget"))


_PRESENT = OperatorConstruct(
    "present",
    OperatorKind.FUNCTIONAL,
    (ParamSpec("pattern", group=True), ParamSpec("scope", ValueKind.TEXT)),
    FunctionalBody(
        Application(
            "greater-than",
            (
                Application(
                    "size",
                    (
                        Application(
                            "get",
                            (
                                Variable(TypedVariable("pattern", ValueKind.TEXT, True)),
                                Variable(TypedVariable("scope", ValueKind.TEXT)),
                            ),
                        ),
                    ),
                ),
                Constant(Value.integer(0)),
            ),
        )
    ),
    result=ValueKind.BOOLEAN,
)


def casmas_registry(base: Optional[ConstructRegistry] = None) -> ConstructRegistry:
    """The seed registry extended with space coordination verbs."""
    reg = base if base is not None else ConstructRegistry.seed()
    t = lambda n: ParamSpec(n, ValueKind.TEXT)
    reg = reg.register_native(
        "post", OperatorKind.ACTIONAL, (ParamSpec("value", group=True), t("community")),
        effect=_post_effect,
    )
    reg = reg.register_native(
        "retract", OperatorKind.ACTIONAL, (t("name"), t("community")), effect=_retract_effect
    )
    reg = reg.register_native(
        "remember", OperatorKind.ACTIONAL, (t("name"), ParamSpec("value")), effect=_remember_effect
    )
    reg = reg.register_native(
        "forget", OperatorKind.ACTIONAL, (t("name"),), effect=_forget_effect
    )
    return reg.register(_PRESENT)


def register_wrapper(world: World, name: str, params: tuple[ParamSpec, ...], fn) -> World:
    """Wrap an external callable as an actional so behaviors can invoke
    integration points. Calls are logged on the world."""

    def effect(ctx: ActionContext, values) -> None:
        ctx.call(name, tuple(values))
        fn(*values)

    return replace(
        world,
        registry=world.registry.register_native(
            name, OperatorKind.ACTIONAL, params, effect=effect, mutates=False
        ),
    )


def world_from_bundle(bundle: Bundle, base: Optional[ConstructRegistry] = None) -> World:
    """Build a runtime world from parsed declarations."""
    registry = casmas_registry(base)
    for op in bundle.operators:
        registry = registry.register(op)
    entities: dict[str, Entity] = {}
    for decl in bundle.entities:
        memory = tuple(
            (f"m{i + 1}", attrs_to_operand(attrs)) for i, attrs in enumerate(decl.memory)
        )
        behavior = decl.behavior
        if behavior is not None and not isinstance(behavior, ConnectorNode):
            raise ConstructionError(f"entity {decl.id!r} behavior must be a connector")
        entities[decl.id] = Entity(decl.id, memory, behavior)
    counters: dict[str, int] = {}
    communities: dict[str, Community] = {}
    for cdecl in bundle.communities:
        facts: list[tuple[str, Fact]] = []
        for f in cdecl.facts:
            if f.owner not in entities:
                raise CasmasError(f"fact owner {f.owner!r} is not a declared entity")
            if f.owner not in cdecl.members:
                raise MembershipError(f"{f.owner!r} is not a member of {cdecl.name!r}")
            counters[f.owner] = counters.get(f.owner, 0) + 1
            facts.append((f"f-{f.owner}-{counters[f.owner]}", Fact(f.owner, f.attrs)))
        for m in cdecl.members:
            if m not in entities:
                raise CasmasError(f"member {m!r} is not a declared entity")
        communities[cdecl.name] = Community(cdecl.name, cdecl.members, tuple(facts))
    return World(entities, communities, registry, counters)


SIGNATURES = {
    name: sig
    for name, sig in casmas_registry().signatures().items()
    if name not in ConstructRegistry.seed().signatures()
}
