import pytest

from lob.core import (
    Action,
    Annotation,
    AnnotationStore,
    Application,
    Condition,
    ConnectorNode,
    Constant,
    DEFAULT_VOCABULARY,
    FALSE,
    LayoutStructure,
    RewritingRule,
    RuleNode,
    SymbolStyle,
    TRUE,
    TargetKind,
    TargetRef,
    TopologicalObject,
    TypedVariable,
    Value,
    ValueKind,
    Variable,
    WebStructure,
    infer_type,
    validate_annotation,
    validate_annotations,
    validate_control_structure,
    validate_operand,
    validate_web_structure,
)
from lob.engine import ConstructRegistry

VIEW = ConstructRegistry.seed().signatures()


def messages(violations):
    return [v.message for v in violations]


def int_c(n):
    return Constant(Value.integer(n))


class TestOperands:
    def test_kind_mismatch_names_the_argument(self):
        bad = Application("add", (Constant(Value.text("x")), Constant(Value.decimal(1.0))))
        (v,) = validate_operand(bad, VIEW, "op")
        assert v.construct == "operand-construct"
        assert v.path == "op/0"
        assert "does not conform" in v.message

    def test_integers_feed_decimal_slots(self):
        op = Application("add", (int_c(1), Constant(Value.decimal(2.5))))
        assert validate_operand(op, VIEW, "op") == ()

    def test_untyped_parameter_admits_groups(self):
        grouped = Application("select", (Application("list", (int_c(1), int_c(2))),))
        assert validate_operand(grouped, VIEW, "op") == ()

    def test_group_rejected_in_scalar_slot(self):
        op = Application("add", (Application("list", (int_c(1),)), int_c(2)))
        assert any("does not conform" in m for m in messages(validate_operand(op, VIEW, "op")))

    def test_unknown_operator(self):
        op = Application("warble", (int_c(1),))
        assert messages(validate_operand(op, VIEW, "op")) == ["unknown operator 'warble'"]

    def test_arity_checks(self):
        too_many = Application("not", (Constant(TRUE), Constant(FALSE)))
        assert "expects 1 arguments, got 2" in messages(validate_operand(too_many, VIEW, "op"))[0]
        too_few = Application("add", (int_c(1),))
        assert "expects 2+" in messages(validate_operand(too_few, VIEW, "op"))[0]

    def test_infer_type(self):
        nested = Application("size", (Application("list", (int_c(1),)),))
        assert infer_type(nested, VIEW) == (ValueKind.INTEGER, False)
        mixed = Application("add", (int_c(1), Constant(Value.decimal(2.0))))
        assert infer_type(mixed, VIEW) == (ValueKind.DECIMAL, False)
        var = Variable(TypedVariable("x", ValueKind.INTEGER, group=True))
        assert infer_type(var, VIEW) == (ValueKind.INTEGER, True)


class TestWebs:
    def test_variable_placed_once(self):
        x = Variable(TypedVariable("x", ValueKind.INTEGER))
        web = WebStructure((LayoutStructure("a", (TopologicalObject(x), TopologicalObject(x))),))
        report = validate_web_structure(web, VIEW)
        assert not report.ok
        (v,) = report.violations
        assert v.path == "web/a/1"
        assert "already placed" in v.message

    def test_hyperlink_endpoints_must_exist(self):
        web = WebStructure(
            (LayoutStructure("a", (TopologicalObject(Constant(Value.text("t"))),)),),
            hyperlinks=(("a", "ghost"),),
        )
        (v,) = validate_web_structure(web, VIEW).violations
        assert v.path == "web/link-0"
        assert "unknown layout 'ghost'" in v.message

    def test_clean_web(self):
        web = WebStructure(
            (
                LayoutStructure("a", (TopologicalObject(Constant(Value.text("t"))),)),
                LayoutStructure("b", (TopologicalObject(int_c(7)),)),
            ),
            hyperlinks=(("a", "b"),),
        )
        assert validate_web_structure(web, VIEW).ok


class TestControls:
    def test_rule_and_gate_violations(self):
        rule = RewritingRule(
            "r",
            (Condition("add", (int_c(1), int_c(2))),),
            (Action("size", (Application("list", (int_c(1),)),)),),
        )
        cs = ConnectorNode("not", (RuleNode(rule), RuleNode(rule)))
        msgs = messages(validate_control_structure(cs, VIEW).violations)
        assert "gate 'not' expects 1 inputs, got 2" in msgs
        assert "operator 'add' does not yield a boolean" in msgs
        assert "operator 'size' is not actional" in msgs
        assert "rule name 'r' repeats in one control structure" in msgs

    def test_clean_rule(self):
        rule = RewritingRule(
            "flag",
            (Condition("equals", (int_c(1), int_c(1))),),
            (Action("put", (int_c(9), Constant(Value.text("work")))),),
        )
        assert validate_control_structure(RuleNode(rule), VIEW).ok


class TestAnnotations:
    def test_style_token_and_selector_checks(self):
        ann = Annotation(
            "a0",
            SymbolStyle(("sparkle",)),
            (TargetRef(TargetKind.OBJECT, ("a", "0"), selector="mystery"),),
            "ada",
            "t0",
        )
        msgs = messages(validate_annotation(ann, VIEW, DEFAULT_VOCABULARY, "ann"))
        assert "style token 'sparkle' is not in the vocabulary" in msgs
        assert "unknown selector 'mystery'" in msgs

    def test_selector_must_be_functional(self):
        ann = Annotation(
            "a0",
            SymbolStyle(("highlight",)),
            (TargetRef(TargetKind.OBJECT, ("a", "0"), selector="put"),),
            "ada",
            "t0",
        )
        assert validate_annotation(ann, VIEW, DEFAULT_VOCABULARY, "ann")

    def test_store_report_clean(self):
        store = AnnotationStore().add(
            Annotation(
                "a0",
                SymbolStyle(("highlight", "color(red)")),
                (TargetRef(TargetKind.OBJECT, ("a", "0")),),
                "ada",
                "t0",
            )
        )
        assert validate_annotations(store, VIEW, DEFAULT_VOCABULARY).ok
