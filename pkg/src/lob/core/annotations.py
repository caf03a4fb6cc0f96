"""Annotations: styles, target references, and the annotation store.

An annotation attaches a body (a style or a constant) to one or more targets.
Targets address control structures, topological objects, or other
annotations; chains of annotation-on-annotation are allowed but must stay
acyclic, which the store enforces at insertion.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

from .operands import Application
from .rules import ControlStructure, node_at
from .structures import TopologicalObject, WebStructure
from .values import ConstructionError, Value, check_identifier, is_identifier


class AnnotationCycleError(Exception):
    """A chain of annotation targets closes on itself."""


_FAMILY_TOKEN_RE = re.compile(r"^([a-z][a-z0-9-]*)\(([a-z][a-z0-9-]*)\)$")


@dataclass(frozen=True)
class StyleVocabulary:
    """Accepted style tokens: bare symbols plus parametric families.

    A family named ``color`` accepts tokens of the form ``color(red)``. The
    vocabulary is extensible; profiles add their own tokens.
    """

    tokens: frozenset[str] = frozenset()
    families: frozenset[str] = frozenset()

    def accepts(self, token: str) -> bool:
        if token in self.tokens:
            return True
        m = _FAMILY_TOKEN_RE.match(token)
        return bool(m) and m.group(1) in self.families

    def with_tokens(self, *tokens: str, families: tuple[str, ...] = ()) -> "StyleVocabulary":
        return StyleVocabulary(self.tokens | set(tokens), self.families | set(families))


DEFAULT_VOCABULARY = StyleVocabulary(
    tokens=frozenset({"highlight", "strike", "frame"}),
    families=frozenset({"color"}),
)


@dataclass(frozen=True)
class SymbolStyle:
    """One or more tokens from a style vocabulary."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.tokens, tuple) or not self.tokens:
            raise ConstructionError("symbol style needs at least one token")
        for t in self.tokens:
            if not isinstance(t, str) or not (is_identifier(t) or _FAMILY_TOKEN_RE.match(t)):
                raise ConstructionError(f"malformed style token {t!r}")


@dataclass(frozen=True)
class OperatorStyle:
    """A style computed by applying a functional operator to the target."""

    application: Application


Style = Union[SymbolStyle, OperatorStyle]


class TargetKind(str, Enum):
    CONTROL = "control-structure"
    OBJECT = "topological-object"
    ANNOTATION = "annotation"


@dataclass(frozen=True)
class TargetRef:
    """Selector plus addressed element.

    ``path`` segments depend on the kind: objects use (layout, index),
    control structures use (control-name, child-index...), annotations use
    (annotation-id,). An empty path never resolves.
    """

    kind: TargetKind
    path: tuple[str, ...]
    selector: str = "select"

    def __post_init__(self) -> None:
        if not isinstance(self.kind, TargetKind):
            raise ConstructionError(f"unknown target kind {self.kind!r}")
        check_identifier(self.selector, "target selector")
        if not isinstance(self.path, tuple):
            raise ConstructionError("target path must be a tuple of segments")
        for seg in self.path:
            if not isinstance(seg, str) or not seg:
                raise ConstructionError(f"target path segment must be a non-empty string, got {seg!r}")


@dataclass(frozen=True)
class Annotation:
    id: str
    body: Union[Style, Value]
    targets: tuple[TargetRef, ...]
    author: str = ""
    timestamp: str = ""

    def __post_init__(self) -> None:
        check_identifier(self.id, "annotation id")
        if not isinstance(self.body, (SymbolStyle, OperatorStyle, Value)):
            raise ConstructionError("annotation body must be a style or a constant")
        if not isinstance(self.targets, tuple) or not self.targets:
            raise ConstructionError(f"annotation {self.id!r} needs at least one target")
        for t in self.targets:
            if not isinstance(t, TargetRef):
                raise ConstructionError("annotation targets must be target refs")


@dataclass(frozen=True)
class AnnotationStore:
    """Insertion-ordered annotation set, acyclic by construction."""

    annotations: Mapping[str, Annotation] = field(default_factory=dict)

    def get(self, ann_id: str) -> Annotation | None:
        return self.annotations.get(ann_id)

    def ids(self) -> tuple[str, ...]:
        return tuple(self.annotations.keys())

    def add(self, annotation: Annotation) -> "AnnotationStore":
        if annotation.id in self.annotations:
            raise ConstructionError(f"duplicate annotation id {annotation.id!r}")
        tentative = dict(self.annotations)
        tentative[annotation.id] = annotation
        _check_acyclic(tentative, annotation.id)
        return AnnotationStore(tentative)

    def annotations_on(self, ref: TargetRef) -> tuple[Annotation, ...]:
        return tuple(a for a in self.annotations.values() if ref in a.targets)


def _check_acyclic(store: Mapping[str, Annotation], start: str) -> None:
    seen: set[str] = set()
    stack = [start]
    while stack:
        current = stack.pop()
        ann = store.get(current)
        if ann is None:
            continue
        for ref in ann.targets:
            if ref.kind is not TargetKind.ANNOTATION or not ref.path:
                continue
            nxt = ref.path[0]
            if nxt == start:
                raise AnnotationCycleError(f"annotation chain through {start!r} forms a cycle")
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)


@dataclass(frozen=True)
class ResolvedTarget:
    """Outcome of following a target ref to a concrete element.

    ``hops`` counts every link traversed from the first annotation to the
    anchor, the landing link included; ``anchor`` is the element a chain
    finally lands on, the element itself for direct refs.
    """

    element: Union[ControlStructure, TopologicalObject, Annotation]
    hops: int
    anchor: Union[ControlStructure, TopologicalObject, Annotation, None]


def resolve_target(
    ref: TargetRef,
    web: WebStructure | None,
    store: AnnotationStore,
    controls: Mapping[str, ControlStructure] | None = None,
) -> ResolvedTarget | None:
    """Follow a target ref to its element, chasing annotation chains.

    Returns None for dangling refs. Cycles cannot enter a store built through
    ``add``, but raw mappings are re-checked here and raise.
    """
    if not ref.path:
        return None

    if ref.kind is TargetKind.OBJECT:
        if web is None or len(ref.path) != 2 or not ref.path[1].isdigit():
            return None
        layout = web.layout(ref.path[0])
        if layout is None:
            return None
        idx = int(ref.path[1])
        if idx >= len(layout.objects):
            return None
        obj = layout.objects[idx]
        return ResolvedTarget(obj, 0, obj)

    if ref.kind is TargetKind.CONTROL:
        if controls is None or ref.path[0] not in controls:
            return None
        indices: list[int] = []
        for seg in ref.path[1:]:
            if not seg.isdigit():
                return None
            indices.append(int(seg))
        node = node_at(controls[ref.path[0]], tuple(indices))
        if node is None:
            return None
        return ResolvedTarget(node, 0, node)

    # Annotation chain: land on the first annotation, then follow its first
    # annotation-kind target until a non-annotation anchor or a dangling end.
    first = store.get(ref.path[0])
    if first is None:
        return None
    hops = 0
    anchor: Union[ControlStructure, TopologicalObject, Annotation, None] = first
    visited = {first.id}
    current = first
    while True:
        chained = next(
            (t for t in current.targets if t.kind is TargetKind.ANNOTATION and t.path), None
        )
        if chained is None:
            direct = current.targets[0]
            if direct.kind is not TargetKind.ANNOTATION:
                landed = resolve_target(direct, web, store, controls)
                anchor = landed.element if landed else None
                if landed is not None:
                    hops += 1
            break
        nxt = store.get(chained.path[0])
        if nxt is None:
            anchor = None
            break
        if nxt.id in visited:
            raise AnnotationCycleError(f"annotation chain through {first.id!r} forms a cycle")
        visited.add(nxt.id)
        hops += 1
        current = nxt
        anchor = nxt
    return ResolvedTarget(first, hops, anchor)
