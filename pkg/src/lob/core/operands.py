"""Operand trees: constants, typed variables, and operator applications."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .values import ConstructionError, TypedVariable, Value, check_identifier


@dataclass(frozen=True)
class Constant:
    value: Value


@dataclass(frozen=True)
class Variable:
    var: TypedVariable


@dataclass(frozen=True)
class Application:
    """A functional operator applied to one or more operand arguments."""

    operator: str
    args: "tuple[Operand, ...]"

    def __post_init__(self) -> None:
        check_identifier(self.operator, "operator name")
        if not isinstance(self.args, tuple) or not self.args:
            raise ConstructionError(f"application of {self.operator!r} needs at least one argument")
        for a in self.args:
            if not isinstance(a, (Constant, Variable, Application)):
                raise ConstructionError(f"application argument must be an operand, got {a!r}")


Operand = Union[Constant, Variable, Application]


def is_ground(op: Operand) -> bool:
    """True when the tree contains no variables."""
    if isinstance(op, Constant):
        return True
    if isinstance(op, Variable):
        return False
    return all(is_ground(a) for a in op.args)


def free_variables(op: Operand) -> tuple[TypedVariable, ...]:
    """All variables in the tree, depth first, first occurrence kept."""
    seen: dict[str, TypedVariable] = {}

    def walk(node: Operand) -> None:
        if isinstance(node, Variable):
            seen.setdefault(node.var.name, node.var)
        elif isinstance(node, Application):
            for a in node.args:
                walk(a)

    walk(op)
    return tuple(seen.values())


def subtrees(op: Operand) -> Iterator[Operand]:
    """The tree's nodes in pre-order, root first."""
    yield op
    if isinstance(op, Application):
        for a in op.args:
            yield from subtrees(a)


def depth(op: Operand) -> int:
    if isinstance(op, Application):
        return 1 + max(depth(a) for a in op.args)
    return 1
