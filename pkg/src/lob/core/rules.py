"""Rewriting rules and the control structures that group them.

A rule pairs zero or more conditions with one or more actions. Control
structures arrange rules into trees whose inner nodes are connectors: a
connector names a boolean operator that gates its children's enabledness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .operands import Application, Constant, Operand, Variable
from .values import ConstructionError, check_identifier


def _check_args(args: object, owner: str) -> None:
    if not isinstance(args, tuple):
        raise ConstructionError(f"{owner} arguments must be a tuple")
    for a in args:  # type: ignore[union-attr]
        if not isinstance(a, (Constant, Variable, Application)):
            raise ConstructionError(f"{owner} argument must be an operand, got {a!r}")


@dataclass(frozen=True)
class Condition:
    """A functional operator applied to state selectors; holds iff it yields true."""

    operator: str
    args: tuple[Operand, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.operator, "condition operator")
        _check_args(self.args, "condition")


@dataclass(frozen=True)
class Action:
    """An actional operator applied to state selectors."""

    operator: str
    args: tuple[Operand, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.operator, "action operator")
        _check_args(self.args, "action")


@dataclass(frozen=True)
class RewritingRule:
    name: str
    conditions: tuple[Condition, ...] = ()
    actions: tuple[Action, ...] = ()

    def __post_init__(self) -> None:
        check_identifier(self.name, "rule name")
        if not isinstance(self.actions, tuple) or not self.actions:
            raise ConstructionError(f"rule {self.name!r} needs at least one action")
        for c in self.conditions:
            if not isinstance(c, Condition):
                raise ConstructionError("rule conditions must be Condition values")
        for a in self.actions:
            if not isinstance(a, Action):
                raise ConstructionError("rule actions must be Action values")


@dataclass(frozen=True)
class RuleNode:
    rule: RewritingRule

    def __post_init__(self) -> None:
        if not isinstance(self.rule, RewritingRule):
            raise ConstructionError("rule node needs a rewriting rule")


@dataclass(frozen=True)
class ConnectorNode:
    """A boolean operator over the enabledness of one or more children."""

    operator: str
    children: "tuple[ControlStructure, ...]"

    def __post_init__(self) -> None:
        check_identifier(self.operator, "connector operator")
        if not isinstance(self.children, tuple) or not self.children:
            raise ConstructionError("connector needs at least one child")
        for c in self.children:
            if not isinstance(c, (RuleNode, ConnectorNode)):
                raise ConstructionError("connector children must be control structures")


ControlStructure = Union[RuleNode, ConnectorNode]


def iter_rules(cs: ControlStructure) -> tuple[RewritingRule, ...]:
    """All rules in the tree, declaration order."""
    if isinstance(cs, RuleNode):
        return (cs.rule,)
    out: list[RewritingRule] = []
    for c in cs.children:
        out.extend(iter_rules(c))
    return tuple(out)


def node_at(cs: ControlStructure, path: tuple[int, ...]) -> ControlStructure | None:
    """Child lookup by index path; the empty path is the root."""
    node: ControlStructure = cs
    for idx in path:
        if not isinstance(node, ConnectorNode) or not 0 <= idx < len(node.children):
            return None
        node = node.children[idx]
    return node
