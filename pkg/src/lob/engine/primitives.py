"""Built-in operators: the seed verbs plus the evaluation kernels.

Runtime values are either a ``Value`` or a tuple of runtime values (a group).
Functional primitives receive the evaluation environment and the already
evaluated argument values; actional primitives receive the action context.

The seed verbs cover collection building (``aggregate``, ``list``), behaviour
composition (``compose``), placement and commentary side effects
(``localize``, ``annotate``), and shared-state exchange (``put``, ``get``).
The kernels supply arithmetic, boolean algebra, comparison, and state access
so that user operators can be defined by composition instead of new code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from ..core.operands import Application, Constant, Operand
from ..core.operators import OperatorKind, OperatorSignature, ParamSpec
from ..core.values import Value, ValueKind

RuntimeValue = Union[Value, tuple]


class _Absent:
    """Marker for a read that found no entry."""

    def __repr__(self) -> str:  # pragma: no cover
        return "ABSENT"


ABSENT = _Absent()


def value_fingerprint(val: RuntimeValue) -> tuple:
    """Hashable canonical form of a runtime value, for read logs."""
    if isinstance(val, Value):
        return ("v", val.kind.value, val.raw, val.media_kind)
    return ("g",) + tuple(value_fingerprint(v) for v in val)


def runtime_to_operand(val: RuntimeValue) -> Operand:
    """Ground operand denoting a runtime value. Empty groups have no
    operand form and are rejected."""
    if isinstance(val, Value):
        return Constant(val)
    if not val:
        raise EvalError("empty-group", "an empty group cannot be stored or serialized")
    return Application("list", tuple(runtime_to_operand(v) for v in val))


class EvalError(Exception):
    """Evaluation failure with a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- numeric helpers ----------------------------------------------------------


def as_number(val: RuntimeValue, op: str) -> Union[int, float]:
    if isinstance(val, Value):
        if val.kind is ValueKind.INTEGER:
            return int(val.raw)  # type: ignore[arg-type]
        if val.kind is ValueKind.DECIMAL:
            return float(val.raw)  # type: ignore[arg-type]
    raise EvalError("type-mismatch", f"{op} needs numeric arguments, got {describe(val)}")


def as_bool(val: RuntimeValue, op: str) -> bool:
    if isinstance(val, Value) and val.kind is ValueKind.BOOLEAN:
        return bool(val.raw)
    raise EvalError("type-mismatch", f"{op} needs boolean arguments, got {describe(val)}")


def as_text(val: RuntimeValue, op: str) -> str:
    if isinstance(val, Value) and val.kind is ValueKind.TEXT:
        return str(val.raw)
    raise EvalError("type-mismatch", f"{op} needs text arguments, got {describe(val)}")


def as_group(val: RuntimeValue, op: str) -> tuple:
    if isinstance(val, tuple):
        return val
    raise EvalError("type-mismatch", f"{op} needs a group argument, got {describe(val)}")


def number_value(n: Union[int, float]) -> Value:
    return Value.integer(n) if isinstance(n, int) else Value.decimal(float(n))


def describe(val: RuntimeValue) -> str:
    if isinstance(val, Value):
        return val.kind.value
    return f"group[{len(val)}]"


def runtime_equal(a: RuntimeValue, b: RuntimeValue) -> bool:
    """Structural equality; integers and decimals compare numerically."""
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(runtime_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, Value) and isinstance(b, Value):
        numeric = (ValueKind.INTEGER, ValueKind.DECIMAL)
        if a.kind in numeric and b.kind in numeric:
            return float(a.raw) == float(b.raw)  # type: ignore[arg-type]
        return a == b
    return False


# -- declaration --------------------------------------------------------------


@dataclass(frozen=True)
class Primitive:
    signature: OperatorSignature
    family: str
    fn: Optional[Callable] = None  # functional: fn(env, values) -> RuntimeValue
    effect: Optional[Callable] = None  # actional: effect(ctx, values) -> None
    mutates: bool = False


def _p(name: str, kind: str | None = None, group: bool = False) -> ParamSpec:
    return ParamSpec(name, ValueKind(kind) if kind else None, group)


def _functional(
    name: str,
    family: str,
    params: tuple[ParamSpec, ...],
    fn: Callable,
    result: str | None = None,
    result_group: bool = False,
    variadic: bool = False,
) -> Primitive:
    sig = OperatorSignature(
        name,
        OperatorKind.FUNCTIONAL,
        params,
        ValueKind(result) if result else None,
        result_group,
        variadic,
    )
    return Primitive(sig, family, fn=fn)


def _actional(
    name: str,
    family: str,
    params: tuple[ParamSpec, ...],
    effect: Callable,
    variadic: bool = False,
    mutates: bool = True,
) -> Primitive:
    sig = OperatorSignature(name, OperatorKind.ACTIONAL, params, None, False, variadic)
    return Primitive(sig, family, effect=effect, mutates=mutates)


# -- seed verbs ----------------------------------------------------------------


def _aggregate(env, values):
    return tuple(values)


def _compose(env, values):
    f = as_text(values[0], "compose")
    g = as_text(values[1], "compose")
    inner = env.apply(g, [values[2]])
    return env.apply(f, [inner])


def _localize(ctx, values):
    x = as_number(values[1], "localize")
    y = as_number(values[2], "localize")
    name = ctx.fresh_name("presentation", "loc")
    ctx.set_entry(
        "presentation",
        name,
        runtime_to_operand((values[0], number_value(float(x)), number_value(float(y)))),
    )


def _annotate(ctx, values):
    target = as_text(values[0], "annotate")
    body = values[1]
    name = ctx.fresh_name("meta", "note")
    ctx.set_entry("meta", name, runtime_to_operand((Value.text(target), body)))
    ctx.note(target, body)


def _put(ctx, values):
    scope = as_text(values[1], "put")
    name = ctx.fresh_name(scope, "e")
    ctx.set_entry(scope, name, runtime_to_operand(values[0]))


def record_pairs(val: RuntimeValue, op: str) -> tuple[tuple[str, RuntimeValue], ...]:
    """Interpret a group-of-pairs runtime value as attribute pairs."""
    group = as_group(val, op)
    pairs: list[tuple[str, RuntimeValue]] = []
    for item in group:
        if not (isinstance(item, tuple) and len(item) == 2):
            raise EvalError("type-mismatch", f"{op} pattern items must be (name, value) pairs")
        pairs.append((as_text(item[0], op), item[1]))
    return tuple(pairs)


def record_subsumes(record: RuntimeValue, pattern: tuple[tuple[str, RuntimeValue], ...]) -> bool:
    """True when every pattern attribute appears in the record with an equal
    value; record attributes without a pattern counterpart are free."""
    if not isinstance(record, tuple):
        return False
    try:
        rec_pairs = record_pairs(record, "get")
    except EvalError:
        return False
    have = dict(rec_pairs)
    return all(k in have and runtime_equal(have[k], v) for k, v in pattern)


def _get(env, values):
    pattern = record_pairs(values[0], "get")
    scope = as_text(values[1], "get")
    matched: list[tuple[str, Operand]] = []
    out: list[RuntimeValue] = []
    for name, operand in env.state.entries(scope):
        candidate = env.evaluate_ground(operand)
        if record_subsumes(candidate, pattern):
            matched.append((name, operand))
            out.append(candidate)
    if env.reads is not None:
        key = ("query", scope, value_fingerprint(values[0]))
        env.reads.record(key, tuple(matched))
    return tuple(out)


# -- arithmetic kernels ---------------------------------------------------------


def _fold_numeric(op: str, values, combine):
    nums = [as_number(v, op) for v in values]
    acc = nums[0]
    for n in nums[1:]:
        acc = combine(acc, n)
    return number_value(acc)


def _add(env, values):
    return _fold_numeric("add", values, lambda a, b: a + b)


def _subtract(env, values):
    return _fold_numeric("subtract", values, lambda a, b: a - b)


def _multiply(env, values):
    return _fold_numeric("multiply", values, lambda a, b: a * b)


def _divide(env, values):
    a = as_number(values[0], "divide")
    b = as_number(values[1], "divide")
    if b == 0:
        raise EvalError("division-by-zero", "divide by zero")
    if isinstance(a, int) and isinstance(b, int) and a % b == 0:
        return Value.integer(a // b)
    return Value.decimal(a / b)


def _modulo(env, values):
    a = as_number(values[0], "modulo")
    b = as_number(values[1], "modulo")
    if not isinstance(a, int) or not isinstance(b, int):
        raise EvalError("type-mismatch", "modulo needs integer arguments")
    if b == 0:
        raise EvalError("division-by-zero", "modulo by zero")
    return Value.integer(a % b)


def _negate(env, values):
    n = as_number(values[0], "negate")
    return number_value(-n)


def _total(env, values):
    group = as_group(values[0], "total")
    if not group:
        return Value.integer(0)
    nums = [as_number(v, "total") for v in group]
    acc: Union[int, float] = 0
    for n in nums:
        acc = acc + n
    return number_value(acc)


def _size(env, values):
    return Value.integer(len(as_group(values[0], "size")))


# -- boolean kernels -------------------------------------------------------------


def _and(env, values):
    return Value.boolean(all(as_bool(v, "and") for v in values))


def _or(env, values):
    return Value.boolean(any(as_bool(v, "or") for v in values))


def _not(env, values):
    return Value.boolean(not as_bool(values[0], "not"))


def _nand(env, values):
    return Value.boolean(not all(as_bool(v, "nand") for v in values))


def _nor(env, values):
    return Value.boolean(not any(as_bool(v, "nor") for v in values))


def _xor(env, values):
    bits = [as_bool(v, "xor") for v in values]
    return Value.boolean(sum(bits) % 2 == 1)


# -- comparison kernels -----------------------------------------------------------


def _equals(env, values):
    return Value.boolean(runtime_equal(values[0], values[1]))


def _not_equals(env, values):
    return Value.boolean(not runtime_equal(values[0], values[1]))


def _ordered(op: str, values, cmp) -> Value:
    a, b = values
    if (
        isinstance(a, Value)
        and isinstance(b, Value)
        and a.kind is ValueKind.TEXT
        and b.kind is ValueKind.TEXT
    ):
        return Value.boolean(cmp(str(a.raw), str(b.raw)))
    return Value.boolean(cmp(as_number(a, op), as_number(b, op)))


def _less_than(env, values):
    return _ordered("less-than", values, lambda a, b: a < b)


def _less_or_equal(env, values):
    return _ordered("less-or-equal", values, lambda a, b: a <= b)


def _greater_than(env, values):
    return _ordered("greater-than", values, lambda a, b: a > b)


def _greater_or_equal(env, values):
    return _ordered("greater-or-equal", values, lambda a, b: a >= b)


def _is_in(env, values):
    needle = values[0]
    return Value.boolean(any(runtime_equal(needle, v) for v in values[1:]))


# -- state access kernels ----------------------------------------------------------


def _entry_or(env, values):
    name = as_text(values[0], "entry-or")
    scope = as_text(values[1], "entry-or")
    operand = env.state.get(scope, name)
    if env.reads is not None:
        env.reads.record(("entry", scope, name), operand if operand is not None else ABSENT)
    if operand is None:
        return values[2]
    return env.evaluate_ground(operand)


def _scope_entries(env, values):
    scope = as_text(values[0], "scope-entries")
    entries = env.state.entries(scope)
    if env.reads is not None:
        env.reads.record(("scope", scope), entries)
    return tuple((Value.text(name), env.evaluate_ground(op)) for name, op in entries)


def _select(env, values):
    return values[0]


PRIMITIVES: dict[str, Primitive] = {
    p.signature.name: p
    for p in (
        # seed verbs
        _functional("aggregate", "seed", (_p("item"),), _aggregate, result_group=True, variadic=True),
        _functional("list", "seed", (_p("item"),), _aggregate, result_group=True, variadic=True),
        _functional(
            "compose", "seed", (_p("f", "text"), _p("g", "text"), _p("x")), _compose
        ),
        _functional(
            "get", "seed", (_p("pattern", group=True), _p("scope", "text")), _get, result_group=True
        ),
        _actional(
            "localize", "seed", (_p("target"), _p("x", "decimal"), _p("y", "decimal")), _localize
        ),
        _actional("annotate", "seed", (_p("target", "text"), _p("body")), _annotate),
        _actional("put", "seed", (_p("value"), _p("scope", "text")), _put),
        # arithmetic
        _functional("add", "arithmetic", (_p("x", "decimal"), _p("y", "decimal")), _add, "decimal", variadic=True),
        _functional("subtract", "arithmetic", (_p("x", "decimal"), _p("y", "decimal")), _subtract, "decimal"),
        _functional("multiply", "arithmetic", (_p("x", "decimal"), _p("y", "decimal")), _multiply, "decimal", variadic=True),
        _functional("divide", "arithmetic", (_p("x", "decimal"), _p("y", "decimal")), _divide, "decimal"),
        _functional("modulo", "arithmetic", (_p("x", "integer"), _p("y", "integer")), _modulo, "integer"),
        _functional("negate", "arithmetic", (_p("x", "decimal"),), _negate, "decimal"),
        _functional("total", "arithmetic", (_p("items", group=True),), _total, "decimal"),
        _functional("size", "arithmetic", (_p("items", group=True),), _size, "integer"),
        # boolean
        _functional("and", "boolean", (_p("x", "boolean"),), _and, "boolean", variadic=True),
        _functional("or", "boolean", (_p("x", "boolean"),), _or, "boolean", variadic=True),
        _functional("not", "boolean", (_p("x", "boolean"),), _not, "boolean"),
        _functional("nand", "boolean", (_p("x", "boolean"),), _nand, "boolean", variadic=True),
        _functional("nor", "boolean", (_p("x", "boolean"),), _nor, "boolean", variadic=True),
        _functional("xor", "boolean", (_p("x", "boolean"),), _xor, "boolean", variadic=True),
        # comparison
        _functional("equals", "comparison", (_p("a"), _p("b")), _equals, "boolean"),
        _functional("not-equals", "comparison", (_p("a"), _p("b")), _not_equals, "boolean"),
        _functional("less-than", "comparison", (_p("a"), _p("b")), _less_than, "boolean"),
        _functional("less-or-equal", "comparison", (_p("a"), _p("b")), _less_or_equal, "boolean"),
        _functional("greater-than", "comparison", (_p("a"), _p("b")), _greater_than, "boolean"),
        _functional("greater-or-equal", "comparison", (_p("a"), _p("b")), _greater_or_equal, "boolean"),
        _functional("is-in", "comparison", (_p("x"), _p("item")), _is_in, "boolean", variadic=True),
        # state access
        _functional("entry-or", "state-access", (_p("name", "text"), _p("scope", "text"), _p("default")), _entry_or),
        _functional("scope-entries", "state-access", (_p("scope", "text"),), _scope_entries, result_group=True),
        _functional("select", "state-access", (_p("x"),), _select),
    )
}
