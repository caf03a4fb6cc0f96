"""Operator constructs: signatures, bodies, and user definitions.

An operator is either functional (computes a value, no state effect) or
actional (performs state effects, returns nothing). A user definition carries
a body over its declared parameters; built-in operators are described by a
bare signature and implemented natively.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

from .operands import Application, Operand, free_variables
from .values import ConstructionError, ValueKind, check_identifier


class OperatorKind(str, Enum):
    FUNCTIONAL = "functional"
    ACTIONAL = "actional"


@dataclass(frozen=True)
class ParamSpec:
    """One declared parameter. ``kind`` of None accepts any value kind."""

    name: str
    kind: ValueKind | None = None
    group: bool = False

    def __post_init__(self) -> None:
        check_identifier(self.name, "parameter name")
        if self.kind is not None and not isinstance(self.kind, ValueKind):
            raise ConstructionError(f"unknown value kind {self.kind!r}")


@dataclass(frozen=True)
class OperatorSignature:
    """Callable shape of an operator: kind, parameters, and result.

    ``variadic`` lets the final parameter repeat one or more times. Result
    fields only apply to functional operators; ``result=None`` leaves the
    result kind unconstrained.
    """

    name: str
    kind: OperatorKind
    params: tuple[ParamSpec, ...] = ()
    result: ValueKind | None = None
    result_group: bool = False
    variadic: bool = False

    def __post_init__(self) -> None:
        check_identifier(self.name, "operator name")
        if not isinstance(self.kind, OperatorKind):
            raise ConstructionError(f"operator kind must be functional or actional, got {self.kind!r}")
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise ConstructionError(f"operator {self.name!r} repeats a parameter name")
        if self.variadic and not self.params:
            raise ConstructionError(f"variadic operator {self.name!r} needs at least one parameter")
        if self.kind is OperatorKind.ACTIONAL and (self.result is not None or self.result_group):
            raise ConstructionError(f"actional operator {self.name!r} cannot declare a result")

    def arity_accepts(self, count: int) -> bool:
        if self.variadic:
            return count >= len(self.params)
        return count == len(self.params)


@dataclass(frozen=True)
class FunctionalBody:
    """Body of a functional definition: one expression over the parameters."""

    expr: Operand


@dataclass(frozen=True)
class ActionalBody:
    """Body of an actional definition: an ordered sequence of invocations."""

    steps: tuple[Application, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.steps, tuple) or not self.steps:
            raise ConstructionError("actional body needs at least one step")
        for s in self.steps:
            if not isinstance(s, Application):
                raise ConstructionError(f"actional step must be an invocation, got {s!r}")


OperatorBody = Union[FunctionalBody, ActionalBody]


@dataclass(frozen=True)
class OperatorConstruct:
    """A user-authored operator definition.

    Locally checkable shape invariants are enforced here: the body's form
    must match the declared kind and every variable in the body must name a
    declared parameter. Reference checks against other operators happen at
    registration.
    """

    name: str
    kind: OperatorKind
    params: tuple[ParamSpec, ...]
    body: OperatorBody
    result: ValueKind | None = None
    result_group: bool = False
    variadic: bool = False

    def __post_init__(self) -> None:
        sig = self.signature  # reuses the signature invariants
        if self.kind is OperatorKind.FUNCTIONAL:
            if not isinstance(self.body, FunctionalBody):
                raise ConstructionError(f"functional operator {self.name!r} needs an expression body")
            used = free_variables(self.body.expr)
        else:
            if not isinstance(self.body, ActionalBody):
                raise ConstructionError(f"actional operator {self.name!r} needs an invocation body")
            used = tuple(v for step in self.body.steps for v in free_variables(step))
        declared = {p.name for p in sig.params}
        for v in used:
            if v.name not in declared:
                raise ConstructionError(
                    f"operator {self.name!r} body uses undeclared parameter {v.name!r}"
                )

    @property
    def signature(self) -> OperatorSignature:
        return OperatorSignature(
            name=self.name,
            kind=self.kind,
            params=self.params,
            result=self.result,
            result_group=self.result_group,
            variadic=self.variadic,
        )


SignatureView = Mapping[str, OperatorSignature]
