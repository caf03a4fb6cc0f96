"""Strict evaluation of operand trees against a state and a registry.

Arguments evaluate before application, depth first, left to right. Variables
resolve against local frames first (parameter bindings of an enclosing
definition), then against state scopes in declaration order; every state read
is recorded in the read log when one is attached, which is what refraction
and firing records are built from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..core.operands import Application, Constant, Operand, Variable
from ..core.operators import OperatorKind, OperatorSignature
from ..core.state import State
from ..core.values import Value, ValueKind
from .primitives import (
    ABSENT,
    EvalError,
    Primitive,
    RuntimeValue,
    describe,
)
from .registry import ConstructRegistry, RegisteredOperator


@dataclass
class ReadLog:
    """Insertion-ordered record of state reads made during one evaluation."""

    records: dict[tuple, object] = field(default_factory=dict)

    def record(self, key: tuple, fingerprint: object) -> None:
        self.records.setdefault(key, fingerprint)

    def fingerprint(self) -> tuple:
        """Order-independent canonical form of the whole read set."""
        return tuple(sorted(self.records.items(), key=lambda kv: repr(kv[0])))

    def entry_reads(self) -> tuple[tuple[str, str, object], ...]:
        out = []
        for key, fp in self.records.items():
            if key[0] == "entry":
                out.append((key[1], key[2], None if fp is ABSENT else fp))
        return tuple(out)


def value_conforms(val: RuntimeValue, kind: ValueKind | None, group: bool) -> bool:
    if group:
        return isinstance(val, tuple)
    if kind is None:
        return True  # untyped scalar slot: anything goes, groups included
    if not isinstance(val, Value):
        return False
    if val.kind is kind:
        return True
    return val.kind is ValueKind.INTEGER and kind is ValueKind.DECIMAL


def result_conforms(val: RuntimeValue, kind: ValueKind | None, group: bool) -> bool:
    """Like value_conforms, but an unconstrained result admits groups too."""
    if group:
        return isinstance(val, tuple)
    if kind is None:
        return True
    return value_conforms(val, kind, False)


@dataclass
class EvalEnv:
    state: State
    registry: ConstructRegistry
    frames: tuple[Mapping[str, RuntimeValue], ...] = ()
    reads: "ReadLog | None" = None

    def evaluate(self, op: Operand) -> RuntimeValue:
        if isinstance(op, Constant):
            return op.value
        if isinstance(op, Variable):
            return self._resolve_variable(op)
        values = [self.evaluate(a) for a in op.args]
        return self.apply(op.operator, values)

    def evaluate_ground(self, op: Operand) -> RuntimeValue:
        """Evaluate a stored entry operand. Shares this environment so nested
        state access inside stored data is still recorded."""
        return self.evaluate(op)

    def _resolve_variable(self, op: Variable) -> RuntimeValue:
        name = op.var.name
        for frame in self.frames:
            if name in frame:
                return frame[name]
        found = self.state.lookup(name)
        if self.reads is not None:
            self.reads.record(
                ("entry", found[0] if found else "", name),
                found[1] if found else ABSENT,
            )
        if found is None:
            raise EvalError("unbound-variable", f"variable {name!r} names no state entry")
        val = self.evaluate(found[1])
        if not value_conforms(val, op.var.kind, op.var.group):
            raise EvalError(
                "type-mismatch",
                f"entry {name!r} holds {describe(val)}, variable declares "
                f"{op.var.kind.value}{'*' if op.var.group else ''}",
            )
        return val

    def apply(self, name: str, values: Sequence[RuntimeValue]) -> RuntimeValue:
        entry = self.registry.resolve(name)
        if entry is None:
            raise EvalError("unknown-operator", f"operator {name!r} is not registered")
        sig = entry.signature
        if sig.kind is not OperatorKind.FUNCTIONAL:
            raise EvalError("kind-mismatch", f"operator {name!r} is actional")
        _check_arguments(sig, values)
        if isinstance(entry, Primitive):
            result = entry.fn(self, values)
        elif entry.fn is not None:
            result = entry.fn(self, values)
        else:
            assert isinstance(entry, RegisteredOperator) and entry.normalized is not None
            frame = {p.name: v for p, v in zip(sig.params, values)}
            inner = EvalEnv(self.state, self.registry, (frame,) + self.frames, self.reads)
            result = inner.evaluate(entry.normalized.expr)  # type: ignore[union-attr]
        if not result_conforms(result, sig.result, sig.result_group):
            raise EvalError(
                "type-mismatch",
                f"operator {name!r} produced {describe(result)}, declared "
                f"{sig.result.value if sig.result else 'any'}{'*' if sig.result_group else ''}",
            )
        return result


def _check_arguments(sig: OperatorSignature, values: Sequence[RuntimeValue]) -> None:
    if not sig.arity_accepts(len(values)):
        wanted = f"{len(sig.params)}+" if sig.variadic else str(len(sig.params))
        raise EvalError(
            "arity-mismatch", f"operator {sig.name!r} expects {wanted} arguments, got {len(values)}"
        )
    for i, v in enumerate(values):
        p = sig.params[min(i, len(sig.params) - 1)]
        if not value_conforms(v, p.kind, p.group):
            raise EvalError(
                "type-mismatch",
                f"argument {i} of {sig.name!r} is {describe(v)}, parameter {p.name!r} wants "
                f"{p.kind.value if p.kind else 'any'}{'*' if p.group else ''}",
            )


def evaluate(
    op: Operand,
    state: State,
    registry: ConstructRegistry,
    *,
    reads: ReadLog | None = None,
    frames: tuple[Mapping[str, RuntimeValue], ...] = (),
) -> RuntimeValue:
    return EvalEnv(state, registry, frames, reads).evaluate(op)


def apply_operator(
    name: str,
    args: Sequence[Operand],
    state: State,
    registry: ConstructRegistry,
    *,
    reads: ReadLog | None = None,
    frames: tuple[Mapping[str, RuntimeValue], ...] = (),
) -> RuntimeValue:
    """Evaluate the arguments then apply the named functional operator.
    Unlike an ``Application`` node this allows an empty argument list."""
    env = EvalEnv(state, registry, frames, reads)
    values = [env.evaluate(a) for a in args]
    return env.apply(name, values)
