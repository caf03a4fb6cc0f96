import string

import pytest
from hypothesis import given, settings, strategies as st

from lob.core import Application, Constant, TypedVariable, Value, ValueKind, Variable
from lob.dsl import (
    LineError,
    PRODUCTIONS,
    SerializeError,
    parse_bytes,
    parse_document,
    parse_operand_text,
    render_operand,
    serialize,
)
from gen import gen_bundle, productions_covered

HAND_WRITTEN = """\
operator doubled functional(x: decimal) -> decimal:
  multiply(x: decimal, 2)

operand threshold = 50

web board:
  layout feed:
    object "hello" at (40, 60)
    object n: integer
  layout mirror:
    object 1.5
  link feed -> mirror

rule flag:
  when greater-than(n: integer, 50)
  then put(n: integer, "work")

annotation a0 by "ada" at "2026-05-01T12:00:00Z":
  body style highlight color(red)
  target object feed/0

state:
  document reviewed = false
"""


class TestHandWritten:
    def test_parses_clean(self):
        r = parse_document(HAND_WRITTEN)
        assert r.diagnostics == ()
        b = r.bundle
        assert b.operators[0].name == "doubled"
        assert b.operands[0].name == "threshold"
        assert b.webs[0].web.hyperlinks == (("feed", "mirror"),)
        assert b.controls[0].name == "flag"
        assert b.annotations[0].id == "a0"
        assert b.state.get("document", "reviewed") == Constant(Value(ValueKind.BOOLEAN, False))

    def test_round_trips_through_fmt(self):
        r = parse_document(HAND_WRITTEN)
        text = serialize(r.bundle)
        again = parse_document(text)
        assert again.bundle == r.bundle
        assert serialize(again.bundle) == text


class TestOperandText:
    def test_literals(self):
        assert parse_operand_text("42") == Constant(Value.integer(42))
        assert parse_operand_text("-1.5") == Constant(Value.decimal(-1.5))
        assert parse_operand_text('"hi"') == Constant(Value.text("hi"))
        assert parse_operand_text("true") == Constant(Value(ValueKind.BOOLEAN, True))
        assert parse_operand_text("x: integer") == Variable(TypedVariable("x", ValueKind.INTEGER))
        assert parse_operand_text("xs: text*") == Variable(
            TypedVariable("xs", ValueKind.TEXT, group=True)
        )

    def test_applications_nest(self):
        op = parse_operand_text("add(1, multiply(2, 3))")
        assert isinstance(op, Application) and op.operator == "add"
        assert render_operand(op) == "add(1, multiply(2, 3))"

    def test_escapes_survive(self):
        for raw in ['line\nbreak', 'quote " mark', 'tab\there', 'back\\slash', '\x01ctl']:
            rendered = render_operand(Constant(Value.text(raw)))
            assert parse_operand_text(rendered) == Constant(Value.text(raw))

    def test_errors_raise_line_errors(self):
        for bad in ("add(1,", "", "3..5", '"unterminated', "Add(1)", "x:"):
            with pytest.raises(LineError):
                parse_operand_text(bad)


class TestDiagnostics:
    def test_line_numbers_point_at_the_problem(self):
        r = parse_document("operand ok = 1\noperand broken = add(1,\n")
        assert r.bundle is not None
        (d,) = [d for d in r.diagnostics if d.severity == "error"]
        assert d.line == 2

    def test_unknown_section_reports_not_raises(self):
        r = parse_document("mystery block:\n  stuff\n")
        assert any(d.severity == "error" for d in r.diagnostics)

    def test_parse_bytes_rejects_bad_utf8(self):
        r = parse_bytes(b"\xff\xfe nope")
        assert any("UTF-8" in d.message for d in r.diagnostics)
        assert r.bundle.operators == ()

    def test_production_names_are_complete(self):
        assert len(PRODUCTIONS) == 16


class TestSerializer:
    def test_validation_is_on_by_default(self):
        r = parse_document(HAND_WRITTEN)
        ann = r.bundle.annotations[0]
        bent = ann.targets[0].__class__(ann.targets[0].kind, ann.targets[0].path, selector="ghost")
        from dataclasses import replace

        bad = replace(r.bundle, annotations=(replace(ann, targets=(bent,)),))
        with pytest.raises(SerializeError):
            serialize(bad)
        assert isinstance(serialize(bad, validate=False), str)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_generated_bundles_round_trip(seed):
    b = gen_bundle(seed)
    text = serialize(b)
    r = parse_document(text)
    assert r.bundle == b
    assert serialize(r.bundle) == text


def test_generator_reaches_every_production():
    seen = set()
    for seed in range(120):
        seen |= productions_covered(gen_bundle(seed))
    assert seen == set(PRODUCTIONS)


_junk_alphabet = string.ascii_lowercase + string.digits + ' :;()[]{}"\'\\\n\t-=_>*.,#'


@settings(max_examples=150, deadline=None)
@given(text=st.text(alphabet=_junk_alphabet, max_size=300))
def test_parser_is_total_on_garbage(text):
    r = parse_document(text)
    assert r.bundle is not None
    for d in r.diagnostics:
        assert d.severity in ("error", "warning")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), cut=st.integers(0, 400))
def test_parser_is_total_on_truncated_documents(seed, cut):
    text = serialize(gen_bundle(seed))
    r = parse_document(text[: min(cut, len(text))])
    assert r.bundle is not None
