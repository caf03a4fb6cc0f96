"""The construct registry: primitives plus registered operators.

Registration is functional: ``register`` returns a new registry and never
mutates the receiver. User definitions are normalized at registration by
inlining every reference to an earlier user definition, so a registered body
only mentions primitives and natives. Redefinition is refused; specialization
means registering a new name built from existing ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

from ..core.operands import Application, Constant, Operand, Variable
from ..core.operators import (
    ActionalBody,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    OperatorSignature,
    ParamSpec,
)
from ..core.validate import infer_type, validate_operand
from ..core.values import ValueKind
from .primitives import PRIMITIVES, Primitive


class RegistryError(Exception):
    """Registration failure with a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RegisteredOperator:
    signature: OperatorSignature
    construct: Optional[OperatorConstruct] = None
    normalized: Union[FunctionalBody, ActionalBody, None] = None
    fn: Optional[Callable] = None
    effect: Optional[Callable] = None
    mutates: bool = False

    @property
    def derived(self) -> bool:
        return self.construct is not None


RegistryEntry = Union[Primitive, RegisteredOperator]


@dataclass(frozen=True)
class ConstructRegistry:
    entries: Mapping[str, RegistryEntry]
    order: tuple[str, ...] = ()  # user registrations, definition order

    @classmethod
    def seed(cls) -> "ConstructRegistry":
        return cls(dict(PRIMITIVES))

    # -- lookups ----------------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def resolve(self, name: str) -> RegistryEntry | None:
        return self.entries.get(name)

    def signature(self, name: str) -> OperatorSignature | None:
        entry = self.entries.get(name)
        return entry.signature if entry is not None else None

    def signatures(self) -> dict[str, OperatorSignature]:
        return {name: entry.signature for name, entry in self.entries.items()}

    def primitive_names(self) -> tuple[str, ...]:
        return tuple(n for n, e in self.entries.items() if isinstance(e, Primitive))

    def constructs(self) -> tuple[OperatorConstruct, ...]:
        out = []
        for name in self.order:
            entry = self.entries[name]
            if isinstance(entry, RegisteredOperator) and entry.construct is not None:
                out.append(entry.construct)
        return tuple(out)

    # -- registration -----------------------------------------------------------

    def register(self, construct: OperatorConstruct) -> "ConstructRegistry":
        name = construct.name
        if name in self.entries:
            raise RegistryError("duplicate-name", f"operator {name!r} is already registered")
        if construct.variadic:
            raise RegistryError("kind-mismatch", f"user definition {name!r} cannot be variadic")

        view = self.signatures()
        locals_ = {p.name: (p.kind, p.group) for p in construct.params}

        if isinstance(construct.body, FunctionalBody):
            self._check_expr(construct.body.expr, view, locals_, name)
            inferred = infer_type(construct.body.expr, view, locals_)
            if not _result_conforms(inferred, construct.result, construct.result_group):
                raise RegistryError(
                    "kind-mismatch",
                    f"body of {name!r} yields {inferred}, declared "
                    f"{(construct.result, construct.result_group)}",
                )
            normalized: Union[FunctionalBody, ActionalBody] = FunctionalBody(
                self._normalize_expr(construct.body.expr, name)
            )
        else:
            steps: list[Application] = []
            for step in construct.body.steps:
                steps.extend(self._normalize_step(step, view, locals_, name))
            if not any(self._step_mutates(s) for s in steps):
                raise RegistryError(
                    "no-mutation", f"actional {name!r} never names a state-mutating primitive"
                )
            normalized = ActionalBody(tuple(steps))

        entries = dict(self.entries)
        entries[name] = RegisteredOperator(construct.signature, construct, normalized)
        return ConstructRegistry(entries, self.order + (name,))

    def register_native(
        self,
        name: str,
        kind: OperatorKind,
        params: tuple[ParamSpec, ...] = (),
        *,
        result: ValueKind | None = None,
        result_group: bool = False,
        variadic: bool = False,
        fn: Optional[Callable] = None,
        effect: Optional[Callable] = None,
        mutates: bool | None = None,
    ) -> "ConstructRegistry":
        if name in self.entries:
            raise RegistryError("duplicate-name", f"operator {name!r} is already registered")
        sig = OperatorSignature(name, kind, params, result, result_group, variadic)
        if kind is OperatorKind.FUNCTIONAL and fn is None:
            raise RegistryError("kind-mismatch", f"functional native {name!r} needs fn")
        if kind is OperatorKind.ACTIONAL and effect is None:
            raise RegistryError("kind-mismatch", f"actional native {name!r} needs effect")
        entries = dict(self.entries)
        entries[name] = RegisteredOperator(
            sig,
            fn=fn,
            effect=effect,
            mutates=(kind is OperatorKind.ACTIONAL) if mutates is None else mutates,
        )
        return ConstructRegistry(entries, self.order + (name,))

    # -- internals ---------------------------------------------------------------

    def _check_expr(self, expr: Operand, view, locals_, owner: str) -> None:
        for v in validate_operand(expr, view, owner, locals_):
            code = "unknown-reference" if "unknown operator" in v.message else "kind-mismatch"
            raise RegistryError(code, f"in body of {owner!r}: {v.message}")

    def _normalize_expr(self, expr: Operand, owner: str) -> Operand:
        if isinstance(expr, (Constant, Variable)):
            return expr
        args = tuple(self._normalize_expr(a, owner) for a in expr.args)
        entry = self.entries.get(expr.operator)
        if entry is None:
            raise RegistryError("unknown-reference", f"{owner!r} references unknown {expr.operator!r}")
        if isinstance(entry, RegisteredOperator) and isinstance(entry.normalized, FunctionalBody):
            binding = {p.name: a for p, a in zip(entry.signature.params, args)}
            return _substitute(entry.normalized.expr, binding)
        return Application(expr.operator, args)

    def _normalize_step(self, step: Application, view, locals_, owner: str) -> list[Application]:
        entry = self.entries.get(step.operator)
        if entry is None:
            raise RegistryError("unknown-reference", f"{owner!r} references unknown {step.operator!r}")
        if entry.signature.kind is not OperatorKind.ACTIONAL:
            raise RegistryError(
                "kind-mismatch", f"step {step.operator!r} in {owner!r} is not actional"
            )
        if not entry.signature.arity_accepts(len(step.args)):
            raise RegistryError(
                "kind-mismatch",
                f"step {step.operator!r} in {owner!r} has arity {len(step.args)}",
            )
        for arg in step.args:
            self._check_expr(arg, view, locals_, owner)
        args = tuple(self._normalize_expr(a, owner) for a in step.args)
        if isinstance(entry, RegisteredOperator) and isinstance(entry.normalized, ActionalBody):
            binding = {p.name: a for p, a in zip(entry.signature.params, args)}
            return [_substitute_app(s, binding) for s in entry.normalized.steps]
        return [Application(step.operator, args)]

    def _step_mutates(self, step: Application) -> bool:
        entry = self.entries.get(step.operator)
        if isinstance(entry, Primitive):
            return entry.mutates
        if isinstance(entry, RegisteredOperator):
            return entry.mutates or isinstance(entry.normalized, ActionalBody)
        return False


def _substitute(expr: Operand, binding: Mapping[str, Operand]) -> Operand:
    if isinstance(expr, Constant):
        return expr
    if isinstance(expr, Variable):
        return binding.get(expr.var.name, expr)
    return Application(expr.operator, tuple(_substitute(a, binding) for a in expr.args))


def _substitute_app(app: Application, binding: Mapping[str, Operand]) -> Application:
    return Application(app.operator, tuple(_substitute(a, binding) for a in app.args))


def _result_conforms(inferred, kind: ValueKind | None, group: bool) -> bool:
    i_kind, i_group = inferred
    if i_kind is None and not i_group:
        return True  # unknown, trust declaration
    if i_group != group:
        return False
    if kind is None or i_kind is None:
        return True
    return i_kind is kind or (i_kind is ValueKind.INTEGER and kind is ValueKind.DECIMAL)


def register_operator(construct: OperatorConstruct, registry: ConstructRegistry) -> ConstructRegistry:
    """Register a user definition, returning the extended registry."""
    return registry.register(construct)
