import pytest

from lob.core import (
    ActionalBody,
    Application,
    Constant,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
    TypedVariable,
    Value,
    ValueKind,
    Variable,
)
from lob.engine import ConstructRegistry, RegistryError


def doubled():
    x = Variable(TypedVariable("x", ValueKind.DECIMAL))
    return OperatorConstruct(
        "doubled",
        OperatorKind.FUNCTIONAL,
        (ParamSpec("x", ValueKind.DECIMAL),),
        FunctionalBody(Application("multiply", (x, Constant(Value.decimal(2.0))))),
        result=ValueKind.DECIMAL,
    )


def test_seed_holds_the_primitive_set():
    reg = ConstructRegistry.seed()
    names = reg.primitive_names()
    for expected in ("add", "and", "equals", "get", "put", "not", "size", "entry-or"):
        assert expected in names
    assert "doubled" not in reg
    assert reg.resolve("nope") is None
    assert reg.signature("add").variadic
    assert reg.signature("put").kind is OperatorKind.ACTIONAL


def test_register_and_resolve():
    reg = ConstructRegistry.seed().register(doubled())
    assert "doubled" in reg
    sig = reg.signature("doubled")
    assert sig.result is ValueKind.DECIMAL and sig.kind is OperatorKind.FUNCTIONAL
    assert reg.constructs() == (doubled(),)
    assert reg.order == ("doubled",)


def test_duplicate_names_rejected():
    reg = ConstructRegistry.seed().register(doubled())
    with pytest.raises(RegistryError) as e:
        reg.register(doubled())
    assert e.value.code == "duplicate-name"
    with pytest.raises(RegistryError):
        reg.register_native("add", OperatorKind.FUNCTIONAL, fn=lambda: 0)


def test_user_definitions_cannot_be_variadic():
    x = Variable(TypedVariable("x", ValueKind.DECIMAL))
    varargs = OperatorConstruct(
        "pile",
        OperatorKind.FUNCTIONAL,
        (ParamSpec("x", ValueKind.DECIMAL),),
        FunctionalBody(x),
        result=ValueKind.DECIMAL,
        variadic=True,
    )
    with pytest.raises(RegistryError) as e:
        ConstructRegistry.seed().register(varargs)
    assert e.value.code == "kind-mismatch"


def test_body_must_match_declared_result():
    x = Variable(TypedVariable("x", ValueKind.DECIMAL))
    lying = OperatorConstruct(
        "lying",
        OperatorKind.FUNCTIONAL,
        (ParamSpec("x", ValueKind.DECIMAL),),
        FunctionalBody(Application("equals", (x, x))),
        result=ValueKind.DECIMAL,
    )
    with pytest.raises(RegistryError) as e:
        ConstructRegistry.seed().register(lying)
    assert e.value.code == "kind-mismatch"


def test_body_references_must_resolve():
    x = Variable(TypedVariable("x", ValueKind.DECIMAL))
    broken = OperatorConstruct(
        "broken",
        OperatorKind.FUNCTIONAL,
        (ParamSpec("x", ValueKind.DECIMAL),),
        FunctionalBody(Application("no-such-op", (x,))),
        result=ValueKind.DECIMAL,
    )
    with pytest.raises(RegistryError):
        ConstructRegistry.seed().register(broken)


def test_steps_must_invoke_actionals():
    inert = OperatorConstruct(
        "inert",
        OperatorKind.ACTIONAL,
        (ParamSpec("x", ValueKind.TEXT),),
        ActionalBody((Application("select", (Variable(TypedVariable("x", ValueKind.TEXT)),)),)),
    )
    with pytest.raises(RegistryError) as e:
        ConstructRegistry.seed().register(inert)
    assert e.value.code == "kind-mismatch"


def test_actional_must_reach_a_mutating_primitive():
    reg = ConstructRegistry.seed().register_native(
        "ping",
        OperatorKind.ACTIONAL,
        (ParamSpec("x", ValueKind.TEXT),),
        effect=lambda ctx, x: None,
        mutates=False,
    )
    inert = OperatorConstruct(
        "inert",
        OperatorKind.ACTIONAL,
        (ParamSpec("x", ValueKind.TEXT),),
        ActionalBody((Application("ping", (Variable(TypedVariable("x", ValueKind.TEXT)),)),)),
    )
    with pytest.raises(RegistryError) as e:
        reg.register(inert)
    assert e.value.code == "no-mutation"


def test_native_registration_needs_an_implementation():
    reg = ConstructRegistry.seed()
    with pytest.raises(RegistryError):
        reg.register_native("pure", OperatorKind.FUNCTIONAL, result=ValueKind.INTEGER)
    with pytest.raises(RegistryError):
        reg.register_native("impure", OperatorKind.ACTIONAL)
    widened = reg.register_native(
        "answer", OperatorKind.FUNCTIONAL, result=ValueKind.INTEGER, fn=lambda: 42
    )
    assert widened.signature("answer").result is ValueKind.INTEGER
    assert "answer" not in widened.primitive_names()
