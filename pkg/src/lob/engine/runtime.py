"""Forward-chaining execution over control structures.

Each iteration evaluates the whole enabledness tree against the entry state:
a rule is enabled when every condition yields true, and a connector applies
its boolean operator to the enabledness of its children. The first rule in
declaration order that is enabled, whose ancestor gates are all true, and
that passes refraction fires; its actions run in order and commit atomically.
Refraction remembers the read set a rule fired on and keeps it from firing
again until some read would see a different result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from ..core.operands import Operand
from ..core.operators import OperatorKind
from ..core.rules import ConnectorNode, ControlStructure, RewritingRule, RuleNode
from ..core.state import State
from ..core.values import Value, ValueKind
from .evaluate import EvalEnv, ReadLog, _check_arguments, apply_operator
from .primitives import EvalError, Primitive, RuntimeValue
from .registry import ConstructRegistry, RegisteredOperator


@dataclass(frozen=True)
class EngineConfig:
    max_iterations: int = 1000
    refraction: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")


@dataclass(frozen=True)
class StateDelta:
    op: str  # "set" | "remove"
    scope: str
    name: str
    old: Optional[Operand]
    new: Optional[Operand]


@dataclass(frozen=True)
class FiringRecord:
    rule: str
    path: tuple[int, ...]
    iteration: int
    bindings: tuple[tuple[str, str, Optional[Operand]], ...]  # (scope, name, read value)
    deltas: tuple[StateDelta, ...]
    seq_before: int
    seq_after: int


@dataclass(frozen=True)
class ConnectorRecord:
    iteration: int
    path: tuple[int, ...]
    operator: str
    inputs: tuple[bool, ...]
    value: bool


TraceRecord = Union[FiringRecord, ConnectorRecord]


class ActionFailure(Exception):
    """An action raised during firing; the entry state stands unchanged."""

    def __init__(self, rule: str, action_index: int, operator: str, cause: EvalError):
        super().__init__(
            f"rule {rule!r} action {action_index} ({operator!r}) failed: {cause} [{cause.code}]"
        )
        self.rule = rule
        self.action_index = action_index
        self.operator = operator
        self.cause = cause


class ActionContext:
    """Mutable working copy of the state threaded through one firing.

    Each action sees the effects of the actions before it; the context also
    collects deltas, annotation notes, and wrapper calls so the firing can be
    recorded and replayed.
    """

    def __init__(
        self,
        state: State,
        registry: ConstructRegistry,
        *,
        rule_name: str = "",
        clock: Optional[Callable[[], str]] = None,
        namer: Optional[Callable[["ActionContext", str, str], str]] = None,
        notes: Optional[list] = None,
        calls: Optional[list] = None,
    ):
        self.state = state
        self.registry = registry
        self.rule_name = rule_name
        self.clock = clock or (lambda: "")
        self._namer = namer
        self.deltas: list[StateDelta] = []
        self.notes = notes if notes is not None else []
        self.calls = calls if calls is not None else []

    def get_entry(self, scope: str, name: str) -> Optional[Operand]:
        return self.state.get(scope, name)

    def set_entry(self, scope: str, name: str, operand: Operand) -> None:
        old = self.state.get(scope, name)
        self.state = self.state.with_entry(scope, name, operand)
        self.deltas.append(StateDelta("set", scope, name, old, operand))

    def remove_entry(self, scope: str, name: str) -> None:
        old = self.state.get(scope, name)
        if old is None:
            return
        self.state = self.state.without_entry(scope, name)
        self.deltas.append(StateDelta("remove", scope, name, old, None))

    def fresh_name(self, scope: str, prefix: str) -> str:
        if self._namer is not None:
            return self._namer(self, scope, prefix)
        taken = {name for name, _ in self.state.entries(scope)}
        n = 1
        while f"{prefix}{n}" in taken:
            n += 1
        return f"{prefix}{n}"

    def note(self, target: str, body: RuntimeValue) -> None:
        self.notes.append((target, body))

    def call(self, name: str, values: tuple) -> None:
        self.calls.append((name, values))


def invoke_actional(
    name: str,
    args: tuple[Operand, ...],
    ctx: ActionContext,
    frames: tuple[Mapping[str, RuntimeValue], ...] = (),
) -> None:
    entry = ctx.registry.resolve(name)
    if entry is None:
        raise EvalError("unknown-operator", f"operator {name!r} is not registered")
    sig = entry.signature
    if sig.kind is not OperatorKind.ACTIONAL:
        raise EvalError("kind-mismatch", f"operator {name!r} is functional, not actional")
    env = EvalEnv(ctx.state, ctx.registry, frames, reads=None)
    values = [env.evaluate(a) for a in args]
    _check_arguments(sig, values)
    if isinstance(entry, Primitive):
        entry.effect(ctx, values)
        return
    assert isinstance(entry, RegisteredOperator)
    if entry.effect is not None:
        entry.effect(ctx, values)
        return
    frame = {p.name: v for p, v in zip(sig.params, values)}
    for step in entry.normalized.steps:  # type: ignore[union-attr]
        invoke_actional(step.operator, step.args, ctx, (frame,) + frames)


def fire(
    rule: RewritingRule,
    state: State,
    registry: ConstructRegistry,
    *,
    iteration: int = 0,
    path: tuple[int, ...] = (),
    bindings: tuple[tuple[str, str, Optional[Operand]], ...] = (),
    clock: Optional[Callable[[], str]] = None,
    namer: Optional[Callable[[ActionContext, str, str], str]] = None,
    notes: Optional[list] = None,
    calls: Optional[list] = None,
) -> tuple[State, FiringRecord]:
    """Run the rule's actions in order against a working copy of the state.

    Raises ActionFailure if any action fails; the input state is immutable,
    so a failed firing leaves no partial effects behind.
    """
    ctx = ActionContext(
        state, registry, rule_name=rule.name, clock=clock, namer=namer, notes=notes, calls=calls
    )
    for idx, action in enumerate(rule.actions):
        try:
            invoke_actional(action.operator, action.args, ctx)
        except EvalError as e:
            raise ActionFailure(rule.name, idx, action.operator, e) from e
    record = FiringRecord(
        rule=rule.name,
        path=path,
        iteration=iteration,
        bindings=bindings,
        deltas=tuple(ctx.deltas),
        seq_before=state.seq,
        seq_after=ctx.state.seq,
    )
    return ctx.state, record


# -- enabledness ------------------------------------------------------------------


@dataclass(frozen=True)
class NodeEval:
    """Enabledness of one control-structure node on a given state."""

    path: tuple[int, ...]
    enabled: bool
    rule: Optional[RewritingRule] = None
    fingerprint: Optional[tuple] = None
    bindings: tuple[tuple[str, str, Optional[Operand]], ...] = ()
    operator: Optional[str] = None
    inputs: tuple[bool, ...] = ()
    children: "tuple[NodeEval, ...]" = ()
    error: Optional[str] = None

    @property
    def is_rule(self) -> bool:
        return self.rule is not None


def rule_enabled(
    rule: RewritingRule, state: State, registry: ConstructRegistry
) -> tuple[bool, ReadLog, Optional[str]]:
    """A rule is enabled iff every condition evaluates to boolean true.
    Evaluation failure in a condition counts as not holding."""
    reads = ReadLog()
    for cond in rule.conditions:
        try:
            val = apply_operator(cond.operator, cond.args, state, registry, reads=reads)
        except EvalError as e:
            return False, reads, f"{e} [{e.code}]"
        if not (isinstance(val, Value) and val.kind is ValueKind.BOOLEAN):
            return False, reads, f"condition {cond.operator!r} yielded a non-boolean"
        if not val.raw:
            return False, reads, None
    return True, reads, None


def evaluate_control(
    cs: ControlStructure, state: State, registry: ConstructRegistry, path: tuple[int, ...] = ()
) -> NodeEval:
    if isinstance(cs, RuleNode):
        enabled, reads, error = rule_enabled(cs.rule, state, registry)
        return NodeEval(
            path=path,
            enabled=enabled,
            rule=cs.rule,
            fingerprint=reads.fingerprint(),
            bindings=reads.entry_reads(),
            error=error,
        )
    children = tuple(
        evaluate_control(child, state, registry, path + (i,)) for i, child in enumerate(cs.children)
    )
    inputs = tuple(c.enabled for c in children)
    try:
        env = EvalEnv(state, registry)
        val = env.apply(cs.operator, [Value.boolean(b) for b in inputs])
        gate = bool(val.raw) if isinstance(val, Value) and val.kind is ValueKind.BOOLEAN else False
        error = None if isinstance(val, Value) and val.kind is ValueKind.BOOLEAN else "non-boolean gate"
    except EvalError as e:
        gate, error = False, f"{e} [{e.code}]"
    return NodeEval(
        path=path, enabled=gate, operator=cs.operator, inputs=inputs, children=children, error=error
    )


def _connector_evals(tree: NodeEval) -> list[NodeEval]:
    if tree.is_rule:
        return []
    out = [tree]
    for child in tree.children:
        out.extend(_connector_evals(child))
    return out


def _eligible_rules(
    tree: NodeEval, memory: Optional[Mapping[tuple[int, ...], tuple]], gates_ok: bool = True
) -> list[NodeEval]:
    """Rules that may fire, declaration order: enabled, all ancestor gates
    true, and not refracted."""
    if tree.is_rule:
        if not (gates_ok and tree.enabled):
            return []
        if memory is not None and memory.get(tree.path) == tree.fingerprint:
            return []
        return [tree]
    ok = gates_ok and tree.enabled
    out: list[NodeEval] = []
    for child in tree.children:
        out.extend(_eligible_rules(child, memory, ok))
    return out


# -- stepping ---------------------------------------------------------------------


@dataclass(frozen=True)
class StepOutcome:
    state: State
    firing: Optional[FiringRecord]
    connectors: tuple[ConnectorRecord, ...]
    memory: Mapping[tuple[int, ...], tuple]


@dataclass(frozen=True)
class RunResult:
    state: State
    records: tuple[TraceRecord, ...]
    halted: str  # "quiescent" | "cap-reached"
    memory: Mapping[tuple[int, ...], tuple]
    iterations: int

    def firings(self) -> tuple[FiringRecord, ...]:
        return tuple(r for r in self.records if isinstance(r, FiringRecord))


def step(
    cs: ControlStructure,
    state: State,
    registry: ConstructRegistry,
    config: EngineConfig = EngineConfig(),
    *,
    memory: Optional[Mapping[tuple[int, ...], tuple]] = None,
    iteration: int = 0,
    clock: Optional[Callable[[], str]] = None,
    namer: Optional[Callable[[ActionContext, str, str], str]] = None,
    notes: Optional[list] = None,
    calls: Optional[list] = None,
) -> StepOutcome:
    """One iteration: evaluate the tree, fire the first eligible rule."""
    mem = dict(memory or {}) if config.refraction else None
    tree = evaluate_control(cs, state, registry)
    connectors = tuple(
        ConnectorRecord(iteration, c.path, c.operator or "", c.inputs, c.enabled)
        for c in _connector_evals(tree)
    )
    candidates = _eligible_rules(tree, mem)
    if not candidates:
        return StepOutcome(state, None, connectors, mem or {})
    chosen = candidates[0]
    assert chosen.rule is not None
    new_state, record = fire(
        chosen.rule,
        state,
        registry,
        iteration=iteration,
        path=chosen.path,
        bindings=chosen.bindings,
        clock=clock,
        namer=namer,
        notes=notes,
        calls=calls,
    )
    if mem is not None:
        mem[chosen.path] = chosen.fingerprint
    return StepOutcome(new_state, record, connectors, mem or {})


def run_to_quiescence(
    cs: ControlStructure,
    state: State,
    registry: ConstructRegistry,
    config: EngineConfig = EngineConfig(),
    *,
    memory: Optional[Mapping[tuple[int, ...], tuple]] = None,
    clock: Optional[Callable[[], str]] = None,
    namer: Optional[Callable[[ActionContext, str, str], str]] = None,
    notes: Optional[list] = None,
    calls: Optional[list] = None,
) -> RunResult:
    """Iterate until no rule may fire or the iteration cap is reached.

    Connector evaluations are recorded when their value first appears or
    changes; firings are recorded always. The returned memory lets a caller
    carry refraction across runs that share a state lineage.
    """
    mem = dict(memory or {}) if config.refraction else None
    records: list[TraceRecord] = []
    gate_seen: dict[tuple[int, ...], bool] = {}
    current = state
    fired = 0
    for iteration in range(config.max_iterations):
        outcome = step(
            cs,
            current,
            registry,
            config,
            memory=mem,
            iteration=iteration,
            clock=clock,
            namer=namer,
            notes=notes,
            calls=calls,
        )
        for c in outcome.connectors:
            if gate_seen.get(c.path) != c.value:
                records.append(c)
                gate_seen[c.path] = c.value
        if outcome.firing is None:
            return RunResult(current, tuple(records), "quiescent", dict(outcome.memory), fired)
        records.append(outcome.firing)
        current = outcome.state
        mem = dict(outcome.memory) if config.refraction else None
        fired += 1
    # cap consumed; a final look decides between exact-fit quiescence and overrun
    tree = evaluate_control(cs, current, registry)
    if not _eligible_rules(tree, mem):
        return RunResult(current, tuple(records), "quiescent", dict(mem or {}), fired)
    return RunResult(current, tuple(records), "cap-reached", dict(mem or {}), fired)


def replay(state: State, records: tuple[TraceRecord, ...]) -> State:
    """Reapply recorded firing deltas to a state; the replayed run lands on
    the same entries and seq as the original."""
    current = state
    for r in records:
        if not isinstance(r, FiringRecord):
            continue
        for d in r.deltas:
            if d.op == "set":
                assert d.new is not None
                current = current.with_entry(d.scope, d.name, d.new)
            else:
                current = current.without_entry(d.scope, d.name)
        current = current.with_seq(r.seq_after)
    return current
