"""The bundle: everything one source document declares.

A bundle is the parsed form of a ``.lob`` file. Besides the kernel constructs
it carries the profile declarations (entities and communities for the shared
space environment, workspaces for the dataflow environment) and an optional
scenario script. Bundles are plain data; profiles turn declarations into
their own runtime objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..core.annotations import Annotation
from ..core.operands import Operand
from ..core.operators import OperatorConstruct, OperatorSignature
from ..core.rules import ControlStructure, RuleNode
from ..core.state import State
from ..core.structures import WebStructure
from ..core.values import ConstructionError, Value, check_identifier

AttrSet = tuple[tuple[str, Value], ...]


def check_attrs(attrs: AttrSet, what: str) -> AttrSet:
    if not isinstance(attrs, tuple) or not attrs:
        raise ConstructionError(f"{what} needs at least one attribute")
    names = [n for n, _ in attrs]
    if len(names) != len(set(names)):
        raise ConstructionError(f"{what} repeats an attribute name")
    for n, v in attrs:
        if not isinstance(n, str) or not n:
            raise ConstructionError(f"{what} attribute names must be non-empty strings")
        if not isinstance(v, Value):
            raise ConstructionError(f"{what} attribute values must be constants")
    return attrs


@dataclass(frozen=True)
class FactDecl:
    owner: str
    attrs: AttrSet

    def __post_init__(self) -> None:
        check_identifier(self.owner, "fact owner")
        check_attrs(self.attrs, "fact")


@dataclass(frozen=True)
class EntityDecl:
    id: str
    memory: tuple[AttrSet, ...] = ()
    behavior: ControlStructure | None = None

    def __post_init__(self) -> None:
        check_identifier(self.id, "entity id")
        for attrs in self.memory:
            check_attrs(attrs, "memory fact")
        if self.behavior is not None and isinstance(self.behavior, RuleNode):
            raise ConstructionError(
                f"entity {self.id!r} behavior must group its rules under a connector"
            )


@dataclass(frozen=True)
class CommunityDecl:
    name: str
    members: tuple[str, ...] = ()
    facts: tuple[FactDecl, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "community name")
        if len(set(self.members)) != len(self.members):
            raise ConstructionError(f"community {self.name!r} repeats a member")
        for m in self.members:
            check_identifier(m, "community member")


@dataclass(frozen=True)
class ComponentDecl:
    id: str
    kind: str  # "source" | "filter" | "viewer" | "handler"
    records: tuple[AttrSet, ...] = ()
    predicate: Operand | None = None

    def __post_init__(self) -> None:
        check_identifier(self.id, "component id")
        if self.kind not in ("source", "filter", "viewer", "handler"):
            raise ConstructionError(f"unknown component kind {self.kind!r}")
        if self.kind != "source" and self.records:
            raise ConstructionError(f"component {self.id!r}: only sources carry records")
        if self.kind == "filter" and self.predicate is None:
            raise ConstructionError(f"filter {self.id!r} needs a keep predicate")
        if self.kind != "filter" and self.predicate is not None:
            raise ConstructionError(f"component {self.id!r}: only filters carry a predicate")
        for attrs in self.records:
            check_attrs(attrs, "record")


@dataclass(frozen=True)
class ArcDecl:
    source: str
    target: str
    selector: Operand | None = None  # present on alternative arcs

    def __post_init__(self) -> None:
        check_identifier(self.source, "arc source")
        check_identifier(self.target, "arc target")


@dataclass(frozen=True)
class WorkspaceDecl:
    name: str
    components: tuple[ComponentDecl, ...] = ()
    arcs: tuple[ArcDecl, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "workspace name")
        ids = [c.id for c in self.components]
        if len(ids) != len(set(ids)):
            raise ConstructionError(f"workspace {self.name!r} repeats a component id")


@dataclass(frozen=True)
class PostStep:
    entity: str
    community: str
    attrs: AttrSet

    def __post_init__(self) -> None:
        check_attrs(self.attrs, "post")


@dataclass(frozen=True)
class RoundStep:
    community: str


@dataclass(frozen=True)
class PropagateStep:
    workspace: str


@dataclass(frozen=True)
class ReplaceStep:
    workspace: str
    filter_id: str
    predicate: Operand


ScenarioStep = Union[PostStep, RoundStep, PropagateStep, ReplaceStep]


@dataclass(frozen=True)
class NamedOperand:
    name: str
    operand: Operand

    def __post_init__(self) -> None:
        check_identifier(self.name, "operand name")


@dataclass(frozen=True)
class NamedWeb:
    name: str
    web: WebStructure

    def __post_init__(self) -> None:
        check_identifier(self.name, "web name")


@dataclass(frozen=True)
class NamedControl:
    name: str
    control: ControlStructure

    def __post_init__(self) -> None:
        check_identifier(self.name, "control name")
        if isinstance(self.control, RuleNode) and self.control.rule.name != self.name:
            raise ConstructionError("a bare rule control is named by its rule")


@dataclass(frozen=True)
class Bundle:
    operators: tuple[OperatorConstruct, ...] = ()
    operands: tuple[NamedOperand, ...] = ()
    webs: tuple[NamedWeb, ...] = ()
    controls: tuple[NamedControl, ...] = ()
    annotations: tuple[Annotation, ...] = ()
    state: State | None = None
    entities: tuple[EntityDecl, ...] = ()
    communities: tuple[CommunityDecl, ...] = ()
    workspaces: tuple[WorkspaceDecl, ...] = ()
    scenario: tuple[ScenarioStep, ...] = ()

    def __post_init__(self) -> None:
        for coll, label in (
            ((o.name for o in self.operators), "operator"),
            ((o.name for o in self.operands), "operand"),
            ((w.name for w in self.webs), "web"),
            ((c.name for c in self.controls), "control"),
            ((a.id for a in self.annotations), "annotation"),
            ((e.id for e in self.entities), "entity"),
            ((c.name for c in self.communities), "community"),
            ((w.name for w in self.workspaces), "workspace"),
        ):
            names = list(coll)
            if len(names) != len(set(names)):
                raise ConstructionError(f"bundle repeats a {label} name")

    def is_empty(self) -> bool:
        return self == Bundle()


def signature_view(bundle: Bundle) -> dict[str, OperatorSignature]:
    """Known operator vocabulary for validating this bundle: the built-ins,
    the profile natives, and the bundle's own definitions."""
    from ..casmas import SIGNATURES as casmas_sigs
    from ..engine.registry import ConstructRegistry
    from ..flow import SIGNATURES as flow_sigs
    from ..woad import SIGNATURES as woad_sigs

    view = ConstructRegistry.seed().signatures()
    view.update(woad_sigs)
    view.update(casmas_sigs)
    view.update(flow_sigs)
    for op in bundle.operators:
        view[op.name] = op.signature
    return view
