"""Scoped fact state.

State maps scope names to ordered entry maps of name to ground operand. It is
immutable: updates return fresh states, and ``seq`` ticks once per committed
change so histories can be ordered without a clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .operands import Operand, is_ground
from .values import ConstructionError, check_identifier


@dataclass(frozen=True)
class State:
    scopes: Mapping[str, Mapping[str, Operand]] = field(default_factory=dict)
    seq: int = 0

    def __post_init__(self) -> None:
        for scope, entries in self.scopes.items():
            check_identifier(scope, "scope name")
            for name, op in entries.items():
                check_identifier(name, "entry name")
                if not is_ground(op):
                    raise ConstructionError(f"state entry {scope}/{name} must be ground")
        if not isinstance(self.seq, int) or self.seq < 0:
            raise ConstructionError("state seq must be a non-negative integer")

    # -- reads ---------------------------------------------------------------

    def get(self, scope: str, name: str) -> Operand | None:
        return self.scopes.get(scope, {}).get(name)

    def has(self, scope: str, name: str) -> bool:
        return name in self.scopes.get(scope, {})

    def entries(self, scope: str) -> tuple[tuple[str, Operand], ...]:
        return tuple(self.scopes.get(scope, {}).items())

    def scope_names(self) -> tuple[str, ...]:
        return tuple(self.scopes.keys())

    def lookup(self, name: str) -> tuple[str, Operand] | None:
        """First entry with this name, scanning scopes in declaration order."""
        for scope, entries in self.scopes.items():
            if name in entries:
                return scope, entries[name]
        return None

    # -- functional updates ----------------------------------------------------

    def with_entry(self, scope: str, name: str, operand: Operand) -> "State":
        check_identifier(scope, "scope name")
        check_identifier(name, "entry name")
        if not is_ground(operand):
            raise ConstructionError(f"state entry {scope}/{name} must be ground")
        scopes = {s: dict(e) for s, e in self.scopes.items()}
        scopes.setdefault(scope, {})[name] = operand
        return State(scopes, self.seq + 1)

    def without_entry(self, scope: str, name: str) -> "State":
        if not self.has(scope, name):
            return self
        scopes = {s: dict(e) for s, e in self.scopes.items()}
        del scopes[scope][name]
        return State(scopes, self.seq + 1)

    def with_seq(self, seq: int) -> "State":
        return State(self.scopes, seq)


def state_of(entries: Mapping[str, Mapping[str, Operand]], seq: int = 0) -> State:
    """Convenience constructor from plain nested dicts."""
    return State({s: dict(e) for s, e in entries.items()}, seq)
