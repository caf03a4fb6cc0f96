"""Evaluation and forward-chaining execution over registered constructs."""

from .evaluate import (
    EvalEnv,
    ReadLog,
    apply_operator,
    evaluate,
    result_conforms,
    value_conforms,
)
from .primitives import (
    ABSENT,
    EvalError,
    PRIMITIVES,
    Primitive,
    RuntimeValue,
    record_pairs,
    record_subsumes,
    runtime_equal,
    runtime_to_operand,
    value_fingerprint,
)
from .registry import ConstructRegistry, RegisteredOperator, RegistryError, register_operator
from .runtime import (
    ActionContext,
    ActionFailure,
    ConnectorRecord,
    EngineConfig,
    FiringRecord,
    NodeEval,
    RunResult,
    StateDelta,
    StepOutcome,
    TraceRecord,
    evaluate_control,
    fire,
    invoke_actional,
    replay,
    rule_enabled,
    run_to_quiescence,
    step,
)

__all__ = [
    "ABSENT",
    "ActionContext",
    "ActionFailure",
    "ConnectorRecord",
    "ConstructRegistry",
    "EngineConfig",
    "EvalEnv",
    "EvalError",
    "FiringRecord",
    "NodeEval",
    "PRIMITIVES",
    "Primitive",
    "ReadLog",
    "RegisteredOperator",
    "RegistryError",
    "RunResult",
    "RuntimeValue",
    "StateDelta",
    "StepOutcome",
    "TraceRecord",
    "apply_operator",
    "evaluate",
    "evaluate_control",
    "fire",
    "invoke_actional",
    "record_pairs",
    "record_subsumes",
    "register_operator",
    "replay",
    "result_conforms",
    "rule_enabled",
    "run_to_quiescence",
    "runtime_equal",
    "runtime_to_operand",
    "step",
    "value_conforms",
    "value_fingerprint",
]
