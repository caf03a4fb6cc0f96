import pytest

from lob.core import (
    ActionalBody,
    Application,
    Constant,
    ConstructionError,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
    TypedVariable,
    Value,
    ValueKind,
    Variable,
)

P = lambda n, k=None, g=False: ParamSpec(n, k, g)
DEC = ValueKind.DECIMAL


def functional(name="double", params=(P("x", DEC),), body=None, **kw):
    body = body or FunctionalBody(
        Application("multiply", (Variable(TypedVariable("x", DEC)), Constant(Value.decimal(2.0))))
    )
    kw.setdefault("result", DEC)
    return OperatorConstruct(name, OperatorKind.FUNCTIONAL, tuple(params), body, **kw)


def test_well_formed_functional():
    op = functional()
    sig = op.signature
    assert sig.name == "double" and sig.result is DEC and not sig.variadic


def test_duplicate_parameter_names_rejected():
    with pytest.raises(ConstructionError):
        functional(params=(P("x", DEC), P("x", DEC)))


def test_variadic_needs_a_parameter():
    with pytest.raises(ConstructionError):
        OperatorConstruct(
            "spread",
            OperatorKind.FUNCTIONAL,
            (),
            FunctionalBody(Constant(Value.integer(1))),
            result=ValueKind.INTEGER,
            variadic=True,
        )


def test_body_shape_must_match_kind():
    step = Application("put", (Constant(Value.integer(1)), Constant(Value.text("work"))))
    with pytest.raises(ConstructionError):
        functional(body=ActionalBody((step,)))
    with pytest.raises(ConstructionError):
        OperatorConstruct(
            "stash", OperatorKind.ACTIONAL, (P("v"),), FunctionalBody(Constant(Value.integer(1)))
        )


def test_actional_cannot_declare_result():
    step = Application("put", (Constant(Value.integer(1)), Constant(Value.text("work"))))
    with pytest.raises(ConstructionError):
        OperatorConstruct(
            "stash", OperatorKind.ACTIONAL, (P("v"),), ActionalBody((step,)), result=DEC
        )
    ok = OperatorConstruct("stash", OperatorKind.ACTIONAL, (P("v"),), ActionalBody((step,)))
    assert ok.signature.result is None


def test_actional_body_needs_steps():
    with pytest.raises(ConstructionError):
        ActionalBody(())
    with pytest.raises(ConstructionError):
        ActionalBody((Constant(Value.integer(1)),))
