"""Spatial structures: placed operands, layouts, and hyperlinked webs."""

from __future__ import annotations

from dataclasses import dataclass

from .operands import Constant, Operand, Variable, Application
from .values import ConstructionError, Coordinates, check_identifier


@dataclass(frozen=True)
class TopologicalObject:
    """An operand anchored in a layout, optionally at explicit coordinates."""

    operand: Operand
    coordinates: Coordinates | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.operand, (Constant, Variable, Application)):
            raise ConstructionError(f"topological object needs an operand, got {self.operand!r}")
        if self.coordinates is not None and not isinstance(self.coordinates, Coordinates):
            raise ConstructionError("coordinates must be a Coordinates pair")


@dataclass(frozen=True)
class LayoutStructure:
    """A named, ordered arrangement of one or more topological objects."""

    name: str
    objects: tuple[TopologicalObject, ...]

    def __post_init__(self) -> None:
        check_identifier(self.name, "layout name")
        if not isinstance(self.objects, tuple) or not self.objects:
            raise ConstructionError(f"layout {self.name!r} needs at least one object")
        for o in self.objects:
            if not isinstance(o, TopologicalObject):
                raise ConstructionError("layout contents must be topological objects")

    def variable_names(self) -> tuple[str, ...]:
        from .operands import free_variables

        out: list[str] = []
        for o in self.objects:
            for v in free_variables(o.operand):
                if v.name not in out:
                    out.append(v.name)
        return tuple(out)


@dataclass(frozen=True)
class WebStructure:
    """One or more layouts joined by directed hyperlinks between layout names."""

    layouts: tuple[LayoutStructure, ...]
    hyperlinks: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.layouts, tuple) or not self.layouts:
            raise ConstructionError("web structure needs at least one layout")
        for l in self.layouts:
            if not isinstance(l, LayoutStructure):
                raise ConstructionError("web contents must be layout structures")
        for link in self.hyperlinks:
            if (
                not isinstance(link, tuple)
                or len(link) != 2
                or not all(isinstance(end, str) for end in link)
            ):
                raise ConstructionError(f"hyperlink must be a (source, target) name pair, got {link!r}")

    def layout(self, name: str) -> LayoutStructure | None:
        for l in self.layouts:
            if l.name == name:
                return l
        return None

    def layout_names(self) -> tuple[str, ...]:
        return tuple(l.name for l in self.layouts)
