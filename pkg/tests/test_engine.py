import pytest

from lob.core import (
    Action,
    Application,
    Condition,
    ConnectorNode,
    Constant,
    FALSE,
    RewritingRule,
    RuleNode,
    TRUE,
    Value,
    state_of,
)
from lob.engine import (
    ActionFailure,
    ConnectorRecord,
    ConstructRegistry,
    EngineConfig,
    EvalError,
    FiringRecord,
    evaluate_control,
    fire,
    replay,
    rule_enabled,
    run_to_quiescence,
    step,
)
from lob.woad import DatomRegistry, woad_registry

REG = ConstructRegistry.seed()


def I(n):
    return Constant(Value.integer(n))


def T(s):
    return Constant(Value.text(s))


def B(b):
    return Constant(TRUE if b else FALSE)


def probe(name, want=True):
    """flag check against the document scope; absent reads as false."""
    return Condition(
        "equals",
        (Application("entry-or", (T(name), T("document"), B(False))), B(want)),
    )


def setter(name, value=True):
    return Action("write", (T(name), B(value)))


def rule(name, conditions, actions):
    return RewritingRule(name, tuple(conditions), tuple(actions))


@pytest.fixture
def wreg():
    return woad_registry(DatomRegistry())


class TestEnablement:
    def test_conditions_and_fold(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        r = rule("r", [probe("a"), probe("b", False)], [setter("c")])
        enabled, reads, err = rule_enabled(r, st, wreg)
        assert enabled and err is None
        assert ("entry", "document", "a") in reads.records

    def test_zero_conditions_always_enabled(self, wreg):
        r = rule("r", [], [setter("c")])
        enabled, reads, err = rule_enabled(r, state_of({}), wreg)
        assert enabled and reads.records == {}

    def test_condition_error_disables(self, wreg):
        broken = rule("r", [Condition("divide", (I(1), I(0)))], [setter("c")])
        enabled, _, err = rule_enabled(broken, state_of({}), wreg)
        assert not enabled
        assert "divide" in err or "boolean" in err

    def test_non_boolean_condition_disables(self, wreg):
        odd = rule("r", [Condition("add", (I(1), I(2)))], [setter("c")])
        enabled, _, err = rule_enabled(odd, state_of({}), wreg)
        assert not enabled and err is not None


class TestConnectors:
    def test_nested_gating(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        on = RuleNode(rule("on", [probe("a")], [setter("x")]))
        off = RuleNode(rule("off", [probe("b")], [setter("y")]))
        tree = ConnectorNode("and", (on, ConnectorNode("not", (off,))))
        ne = evaluate_control(tree, st, wreg)
        assert ne.operator == "and" and ne.enabled
        assert ne.children[0].enabled and not ne.children[1].children[0].enabled
        assert ne.children[1].enabled  # not(off)

    def test_false_gate_blocks_enabled_rule(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        on = RuleNode(rule("on", [probe("a")], [setter("x")]))
        off = RuleNode(rule("off", [probe("b")], [setter("y")]))
        gated = ConnectorNode("and", (off, on))
        out = run_to_quiescence(gated, st, wreg)
        assert out.firings() == () and out.halted == "quiescent"


class TestStepAndRun:
    def test_one_firing_per_iteration_in_declaration_order(self, wreg):
        st = state_of({"document": {"go": Constant(TRUE)}})
        first = rule("first", [probe("go")], [setter("a")])
        second = rule("second", [probe("go")], [setter("b")])
        cs = ConnectorNode("or", (RuleNode(first), RuleNode(second)))
        out = step(cs, st, wreg)
        assert out.firing.rule == "first"
        assert out.state.get("document", "b") is None
        out2 = step(cs, out.state, wreg, memory=out.memory, iteration=1)
        assert out2.firing.rule == "second"

    def test_refraction_stops_refiring_until_reads_change(self, wreg):
        st = state_of({"document": {"go": Constant(TRUE)}})
        r = rule("r", [probe("go")], [setter("done")])
        out = run_to_quiescence(RuleNode(r), st, wreg)
        assert [f.rule for f in out.firings()] == ["r"]
        assert out.halted == "quiescent"
        # flip the read value: the rule may fire again
        st2 = out.state.without_entry("document", "go").with_entry(
            "document", "go", Constant(TRUE)
        )
        nxt = step(RuleNode(r), st2, wreg, memory=out.memory, iteration=9)
        assert nxt.firing is None  # same read fingerprint, still refracted
        st3 = out.state.with_entry("document", "go", Constant(FALSE)).with_entry(
            "document", "go", Constant(TRUE)
        )
        assert st3.get("document", "go") == Constant(TRUE)

    def test_refraction_off_hits_the_cap(self, wreg):
        st = state_of({"document": {"go": Constant(TRUE)}})
        r = rule("r", [probe("go")], [setter("go", True)])
        out = run_to_quiescence(
            RuleNode(r), st, wreg, EngineConfig(max_iterations=5, refraction=False)
        )
        assert out.halted == "cap-reached"
        assert len(out.firings()) == 5

    def test_progressive_actions_within_one_firing(self, wreg):
        st = state_of({"document": {"go": Constant(TRUE)}})
        r = rule(
            "r",
            [probe("go")],
            [setter("a"), Action("delete", (T("a"),)), setter("b")],
        )
        out = run_to_quiescence(RuleNode(r), st, wreg)
        assert out.state.get("document", "a") is None
        assert out.state.get("document", "b") == Constant(TRUE)
        (firing,) = out.firings()
        assert [d.op for d in firing.deltas] == ["set", "remove", "set"]

    def test_chained_rules_quiesce(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        ab = rule("ab", [probe("a")], [setter("b")])
        bc = rule("bc", [probe("b")], [setter("c")])
        cs = ConnectorNode("or", (RuleNode(bc), RuleNode(ab)))
        out = run_to_quiescence(cs, st, wreg)
        assert [f.rule for f in out.firings()] == ["ab", "bc"]
        assert out.state.get("document", "c") == Constant(TRUE)
        assert out.iterations >= 2

    def test_replay_reproduces_the_final_state(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        ab = rule("ab", [probe("a")], [setter("b"), Action("delete", (T("a"),))])
        bc = rule("bc", [probe("b")], [setter("c")])
        cs = ConnectorNode("or", (RuleNode(ab), RuleNode(bc)))
        out = run_to_quiescence(cs, st, wreg)
        assert replay(st, out.records) == out.state

    def test_records_interleave_connector_snapshots(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        cs = ConnectorNode("or", (RuleNode(rule("r", [probe("a")], [setter("b")])),))
        out = run_to_quiescence(cs, st, wreg)
        kinds = {type(r) for r in out.records}
        assert FiringRecord in kinds and ConnectorRecord in kinds
        gate = next(r for r in out.records if isinstance(r, ConnectorRecord))
        assert gate.operator == "or" and gate.value is True

    def test_firing_records_carry_bindings_and_seq(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        out = run_to_quiescence(RuleNode(rule("r", [probe("a")], [setter("b")])), st, wreg)
        (f,) = out.firings()
        assert f.seq_after > f.seq_before
        assert ("document", "a", Constant(TRUE)) in f.bindings


class TestFailures:
    def test_action_failure_leaves_state_unchanged(self, wreg):
        st = state_of({"document": {"a": Constant(TRUE)}})
        bad = rule("bad", [probe("a")], [setter("b"), Action("write", (I(3), B(True)))])
        with pytest.raises(ActionFailure) as e:
            fire(bad, st, wreg)
        assert e.value.rule == "bad" and e.value.action_index == 1
        assert isinstance(e.value.cause, EvalError)
        assert st.get("document", "b") is None

    def test_cap_must_be_positive(self):
        with pytest.raises(ValueError):
            EngineConfig(max_iterations=0)


def test_fresh_names_and_wrapper_calls(wreg=None):
    reg = ConstructRegistry.seed()
    st = state_of({"document": {"a": Constant(TRUE)}})
    r = rule(
        "r",
        [probe("a")],
        [Action("put", (I(7), T("work"))), Action("put", (I(8), T("work")))],
    )
    calls = []
    out = run_to_quiescence(RuleNode(r), st, reg, calls=calls)
    assert out.state.get("work", "e1") == I(7)
    assert out.state.get("work", "e2") == I(8)
