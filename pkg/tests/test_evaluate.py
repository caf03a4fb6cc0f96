import pytest
from hypothesis import given, strategies as st

from lob.core import (
    Application,
    Constant,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
    TRUE,
    FALSE,
    TypedVariable,
    Value,
    ValueKind,
    Variable,
    state_of,
)
from lob.engine import (
    ABSENT,
    ActionContext,
    ConstructRegistry,
    EvalError,
    ReadLog,
    apply_operator,
    evaluate,
    invoke_actional,
    record_subsumes,
    runtime_to_operand,
    value_conforms,
)
from oracles import naive_subsumes

REG = ConstructRegistry.seed()


def I(n):
    return Constant(Value.integer(n))


def D(x):
    return Constant(Value.decimal(x))


def T(s):
    return Constant(Value.text(s))


def B(b):
    return Constant(TRUE if b else FALSE)


@pytest.fixture
def state():
    return state_of({"facts": {"flag": Constant(TRUE), "count": I(4)}})


def ev(name, *args, state=None, reads=None):
    return apply_operator(name, args, state or state_of({}), REG, reads=reads)


class TestArithmetic:
    def test_integer_results_stay_integers(self):
        assert ev("add", I(2), I(3)) == Value.integer(5)
        assert ev("multiply", I(2), I(3), I(4)) == Value.integer(24)

    def test_integers_coerce_next_to_decimals(self):
        assert ev("add", I(2), D(0.5)) == Value.decimal(2.5)
        assert ev("subtract", I(5), D(0.5)) == Value.decimal(4.5)

    def test_divide_always_yields_decimal(self):
        assert ev("divide", I(9), I(2)) == Value.decimal(4.5)

    def test_division_by_zero(self):
        with pytest.raises(EvalError) as e:
            ev("divide", D(1.0), D(0.0))
        assert e.value.code == "division-by-zero"
        with pytest.raises(EvalError) as e:
            ev("modulo", I(7), I(0))
        assert e.value.code == "division-by-zero"

    def test_modulo_and_negate(self):
        assert ev("modulo", I(7), I(3)) == Value.integer(1)
        assert ev("negate", I(3)) == Value.integer(-3)
        assert ev("negate", D(2.5)) == Value.decimal(-2.5)


class TestComparisonAndGates:
    def test_numeric_equality_crosses_kinds(self):
        assert ev("equals", I(2), D(2.0)) == TRUE
        assert ev("not-equals", I(2), D(2.5)) == TRUE

    def test_booleans_are_not_numbers(self):
        assert ev("equals", B(True), I(1)) == FALSE

    def test_ordering(self):
        assert ev("greater-than", I(3), I(2)) == TRUE
        assert ev("less-or-equal", I(2), I(2)) == TRUE
        with pytest.raises(EvalError):
            ev("greater-than", T("a"), I(1))

    def test_gates_take_one_or_more_inputs(self):
        assert ev("and", B(True)) == TRUE
        assert ev("and", B(True), B(True), B(False)) == FALSE
        assert ev("or", B(False), B(True)) == TRUE
        assert ev("nand", B(True), B(True)) == FALSE
        assert ev("nor", B(False), B(False)) == TRUE
        assert ev("xor", B(True), B(True), B(True)) == TRUE
        assert ev("not", B(False)) == TRUE

    def test_gate_arity_and_kinds(self):
        with pytest.raises(EvalError):
            ev("and")
        with pytest.raises(EvalError) as e:
            ev("and", I(1))
        assert e.value.code == "type-mismatch"


class TestGroups:
    def test_list_and_aggregate_build_groups(self):
        assert ev("list", I(1), I(2)) == (Value.integer(1), Value.integer(2))
        nested = ev("aggregate", Application("list", (T("kind"), T("alert"))))
        assert nested == ((Value.text("kind"), Value.text("alert")),)

    def test_size_total_is_in(self):
        group = Application("list", (I(1), D(2.5)))
        assert ev("size", group) == Value.integer(2)
        assert ev("total", group) == Value.decimal(3.5)
        assert ev("is-in", I(1), I(1), I(9)) == TRUE
        assert ev("is-in", I(7), I(1), I(9)) == FALSE

    def test_group_where_scalar_expected(self):
        with pytest.raises(EvalError) as e:
            ev("size", I(1))
        assert e.value.code == "type-mismatch"

    def test_empty_groups_cannot_become_operands(self):
        with pytest.raises(EvalError) as e:
            runtime_to_operand(())
        assert e.value.code == "empty-group"


class TestStateReads:
    def test_entry_or_returns_entry_or_default(self, state):
        assert ev("entry-or", T("flag"), T("facts"), B(False), state=state) == TRUE
        assert ev("entry-or", T("nope"), T("facts"), B(False), state=state) == FALSE

    def test_entry_or_records_absent_reads(self, state):
        reads = ReadLog()
        ev("entry-or", T("nope"), T("facts"), B(False), state=state, reads=reads)
        ev("entry-or", T("flag"), T("facts"), B(False), state=state, reads=reads)
        logged = dict(reads.records)
        assert logged[("entry", "facts", "nope")] is ABSENT
        assert logged[("entry", "facts", "flag")] == Constant(TRUE)
        # absent and present-false must fingerprint differently
        other = ReadLog()
        ev("entry-or", T("nope"), T("facts"), B(False),
           state=state.with_entry("facts", "nope", Constant(FALSE)), reads=other)
        assert reads.records[("entry", "facts", "nope")] != other.records[("entry", "facts", "nope")]

    def test_scope_entries_lists_pairs_in_order(self, state):
        pairs = ev("scope-entries", T("facts"), state=state)
        assert pairs == (
            (Value.text("flag"), Value(ValueKind.BOOLEAN, True)),
            (Value.text("count"), Value.integer(4)),
        )

    def test_get_matches_by_subsumption(self, state):
        record = Application(
            "aggregate",
            (
                Application("list", (T("kind"), T("alert"))),
                Application("list", (T("level"), I(3))),
            ),
        )
        st2 = state.with_entry("space", "f-1", record)
        pattern = Application("aggregate", (Application("list", (T("kind"), T("alert"))),))
        got = ev("get", pattern, T("space"), state=st2)
        assert len(got) == 1 and (Value.text("level"), Value.integer(3)) in got[0]
        missed = ev("get", Application("aggregate", (Application("list", (T("kind"), T("nope"))),)),
                    T("space"), state=st2)
        assert missed == ()


class TestErrorsAndCompose:
    def test_error_codes(self, state):
        with pytest.raises(EvalError) as e:
            ev("ghost", I(1))
        assert e.value.code == "unknown-operator"
        with pytest.raises(EvalError) as e:
            evaluate(Variable(TypedVariable("q", ValueKind.INTEGER)), state, REG)
        assert e.value.code == "unbound-variable"
        with pytest.raises(EvalError) as e:
            ev("add", T("a"), I(1))
        assert e.value.code == "type-mismatch"
        with pytest.raises(EvalError) as e:
            ev("put", I(1), T("work"))
        assert e.value.code == "kind-mismatch"  # actional in operand position

    def test_compose_chains_two_functionals(self):
        assert ev("compose", T("negate"), T("negate"), D(3.5)) == Value.decimal(3.5)
        with pytest.raises(EvalError):
            ev("compose", T("put"), T("negate"), D(1.0))

    def test_select_is_identity(self):
        assert ev("select", T("x")) == Value.text("x")


class TestUserOperators:
    def test_functional_body_evaluates_with_frames(self, state):
        x = Variable(TypedVariable("x", ValueKind.DECIMAL))
        reg = REG.register(
            OperatorConstruct(
                "doubled",
                OperatorKind.FUNCTIONAL,
                (ParamSpec("x", ValueKind.DECIMAL),),
                FunctionalBody(Application("multiply", (x, D(2.0)))),
                result=ValueKind.DECIMAL,
            )
        )
        out = apply_operator("doubled", (D(4.0),), state, reg)
        assert out == Value.decimal(8.0)
        out = apply_operator("doubled", (I(4),), state, reg)
        assert out == Value.decimal(8.0)


class TestActionals:
    def test_put_allocates_fresh_names(self, state):
        ctx = ActionContext(state, REG)
        invoke_actional("put", (I(7), T("work")), ctx)
        invoke_actional("put", (I(8), T("work")), ctx)
        assert ctx.state.get("work", "e1") == I(7)
        assert ctx.state.get("work", "e2") == I(8)
        assert [d.op for d in ctx.deltas] == ["set", "set"]
        assert state.get("work", "e1") is None  # input state untouched

    def test_annotate_and_localize_record_intents(self, state):
        ctx = ActionContext(state, REG)
        invoke_actional("annotate", (T("count"), T("check me")), ctx)
        assert ctx.notes == [("count", Value.text("check me"))]
        invoke_actional("localize", (T("count"), D(40.0), D(60.0)), ctx)

    def test_functional_cannot_be_invoked_as_action(self, state):
        ctx = ActionContext(state, REG)
        with pytest.raises(EvalError) as e:
            invoke_actional("add", (I(1), I(2)), ctx)
        assert e.value.code == "kind-mismatch"


def test_value_conforms_untyped_slots_admit_anything():
    assert value_conforms(Value.integer(1), None, False)
    assert value_conforms((Value.integer(1),), None, False)
    assert value_conforms((Value.integer(1),), ValueKind.INTEGER, True)
    assert not value_conforms(Value.integer(1), ValueKind.INTEGER, True)
    assert value_conforms(Value.integer(1), ValueKind.DECIMAL, False)
    assert not value_conforms(Value.decimal(1.5), ValueKind.INTEGER, False)
    assert not value_conforms(Value(ValueKind.BOOLEAN, True), ValueKind.INTEGER, False)


_scalar = st.one_of(
    st.booleans().map(lambda b: Value(ValueKind.BOOLEAN, b)),
    st.integers(-3, 3).map(Value.integer),
    st.sampled_from([0.0, 1.0, 2.0, 2.5]).map(Value.decimal),
    st.sampled_from(["a", "b"]).map(Value.text),
)
_pairs = st.lists(st.tuples(st.sampled_from(["k", "l", "m"]), _scalar), max_size=4).map(tuple)


@given(record=_pairs, pattern=_pairs)
def test_record_subsumes_matches_oracle(record, pattern):
    runtime_record = tuple((Value.text(k), v) for k, v in record)
    got = record_subsumes(runtime_record, pattern)
    # oracle keeps the last duplicate, record_pairs does too via dict()
    assert got == naive_subsumes(pattern, record)
