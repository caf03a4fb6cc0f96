"""Scalar values, typed variables, and layout coordinates.

These are the leaves of every construct tree: constants drawn from the five
value kinds, variables that name a typed slot, and the coordinate pairs that
anchor an operand inside a layout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum


class ConstructionError(ValueError):
    """A domain value would violate one of its local invariants."""


class ValueKind(str, Enum):
    BOOLEAN = "boolean"
    INTEGER = "integer"
    DECIMAL = "decimal"
    TEXT = "text"
    MEDIA = "media"


_IDENT_RE = re.compile(r"^[a-z][a-z0-9]*(-[a-z0-9]+)*$")


def is_identifier(name: object) -> bool:
    return isinstance(name, str) and bool(_IDENT_RE.match(name))


def check_identifier(name: object, what: str) -> str:
    if not is_identifier(name):
        raise ConstructionError(f"{what} must be a kebab-case identifier, got {name!r}")
    return name  # type: ignore[return-value]


@dataclass(frozen=True)
class Value:
    """A constant of one of the five kinds.

    ``media`` values pair an opaque reference string with a media-kind tag;
    all other kinds carry their payload in ``raw`` directly.
    """

    kind: ValueKind
    raw: bool | int | float | str
    media_kind: str | None = None

    def __post_init__(self) -> None:
        k, raw = self.kind, self.raw
        if k is ValueKind.BOOLEAN:
            if not isinstance(raw, bool):
                raise ConstructionError(f"boolean value needs a bool, got {raw!r}")
        elif k is ValueKind.INTEGER:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConstructionError(f"integer value needs an int, got {raw!r}")
        elif k is ValueKind.DECIMAL:
            if not isinstance(raw, float):
                raise ConstructionError(f"decimal value needs a float, got {raw!r}")
            if not math.isfinite(raw):
                raise ConstructionError(f"decimal value must be finite, got {raw!r}")
        elif k is ValueKind.TEXT:
            if not isinstance(raw, str):
                raise ConstructionError(f"text value needs a str, got {raw!r}")
        elif k is ValueKind.MEDIA:
            if not isinstance(raw, str) or not raw:
                raise ConstructionError("media reference must be a non-empty string")
            if not isinstance(self.media_kind, str) or not self.media_kind:
                raise ConstructionError("media value needs a media-kind tag")
        if k is not ValueKind.MEDIA and self.media_kind is not None:
            raise ConstructionError("media_kind is only meaningful for media values")

    @staticmethod
    def boolean(raw: bool) -> "Value":
        return Value(ValueKind.BOOLEAN, raw)

    @staticmethod
    def integer(raw: int) -> "Value":
        return Value(ValueKind.INTEGER, raw)

    @staticmethod
    def decimal(raw: float) -> "Value":
        return Value(ValueKind.DECIMAL, raw)

    @staticmethod
    def text(raw: str) -> "Value":
        return Value(ValueKind.TEXT, raw)

    @staticmethod
    def media(reference: str, media_kind: str) -> "Value":
        return Value(ValueKind.MEDIA, reference, media_kind)


TRUE = Value.boolean(True)
FALSE = Value.boolean(False)


@dataclass(frozen=True)
class TypedVariable:
    """A named slot with a declared value kind.

    ``group`` marks variables bound to collections built with ``aggregate``
    or ``list`` rather than to a single scalar.
    """

    name: str
    kind: ValueKind
    group: bool = False

    def __post_init__(self) -> None:
        check_identifier(self.name, "variable name")
        if not isinstance(self.kind, ValueKind):
            raise ConstructionError(f"unknown value kind {self.kind!r}")


@dataclass(frozen=True)
class Coordinates:
    """Cartesian pair in abstract layout units, relative to the layout origin."""

    x: float
    y: float

    def __post_init__(self) -> None:
        for label, v in (("x", self.x), ("y", self.y)):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConstructionError(f"coordinate {label} must be numeric, got {v!r}")
            if not math.isfinite(float(v)):
                raise ConstructionError(f"coordinate {label} must be finite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
