import pytest

from lob.core import (
    Action,
    Application,
    Condition,
    ConnectorNode,
    Constant,
    RewritingRule,
    RuleNode,
    Value,
)
from lob.casmas import (
    CasmasError,
    Community,
    Entity,
    Fact,
    MembershipError,
    World,
    attrs_to_operand,
    casmas_registry,
    operand_to_attrs,
    reaction_round,
    register_wrapper,
    run_rounds,
    world_from_bundle,
)
from lob.dsl import Bundle, CommunityDecl, EntityDecl, FactDecl


def T(s):
    return Constant(Value.text(s))


def kind_is(token):
    """present(aggregate(list("kind", token)), "space-team")"""
    pattern = Application(
        "aggregate", (Application("list", (T("kind"), T(token))),)
    )
    return Condition("present", (pattern, T("space-team")))


def post_kind(token):
    record = Application(
        "aggregate", (Application("list", (T("kind"), T(token))),)
    )
    return Action("post", (record, T("team")))


def behavior(*rules):
    return ConnectorNode("or", tuple(RuleNode(r) for r in rules))


def team_world(*entities, members=None):
    ids = tuple(e.id for e in entities)
    return World(
        {e.id: e for e in entities},
        {"team": Community("team", members if members is not None else ids)},
    )


@pytest.fixture
def chained():
    """b answers alerts with acks, c closes acks; a only posts."""
    b = Entity("b", behavior=behavior(RewritingRule("ack", (kind_is("alert"),), (post_kind("ack"),))))
    c = Entity("c", behavior=behavior(RewritingRule("close", (kind_is("ack"),), (post_kind("done"),))))
    a = Entity("a")
    return team_world(a, b, c)


class TestViewsAndPosts:
    def test_view_scopes(self, chained):
        w = chained.post("a", "team", (("kind", Value.text("alert")),))
        view = w.view("a")
        assert view.scope_names() == ("memory", "space-team")
        assert view.entries("space-team")[0][0] == "f-a-1"
        with pytest.raises(CasmasError):
            w.view("nobody")

    def test_fact_names_count_per_owner(self, chained):
        w = chained.post("a", "team", (("n", Value.integer(1)),))
        w = w.post("b", "team", (("n", Value.integer(2)),))
        w = w.post("a", "team", (("n", Value.integer(3)),))
        assert [n for n, _ in w.space("team")] == ["f-a-1", "f-b-1", "f-a-2"]
        assert w.space("team")[2][1].owner == "a"

    def test_membership_gate(self, chained):
        with pytest.raises(MembershipError):
            chained.post("intruder", "team", (("n", Value.integer(1)),))
        with pytest.raises(CasmasError):
            chained.post("a", "void", (("n", Value.integer(1)),))

    def test_attr_record_round_trip(self):
        attrs = (("kind", Value.text("alert")), ("level", Value.integer(3)))
        assert operand_to_attrs(attrs_to_operand(attrs)) == attrs
        with pytest.raises(CasmasError):
            operand_to_attrs(T("scalar"))


class TestRounds:
    def test_chain_settles_in_member_order(self, chained):
        w = chained.post("a", "team", (("kind", Value.text("alert")),))
        w, reports = run_rounds(w, "team", max_rounds=3)
        assert [r.fired() for r in reports] == [("b",), ("c",), ()]
        kinds = [dict(f.attrs)["kind"].raw for _, f in w.space("team")]
        assert kinds == ["alert", "ack", "done"]
        owners = [f.owner for _, f in w.space("team")]
        assert owners == ["a", "b", "c"]

    def test_round_snapshot_means_simultaneous_reaction(self):
        """Two watchers of the same fact both fire in the round it appears."""
        w1 = Entity("w1", behavior=behavior(RewritingRule("see1", (kind_is("alert"),), (post_kind("seen-1"),))))
        w2 = Entity("w2", behavior=behavior(RewritingRule("see2", (kind_is("alert"),), (post_kind("seen-2"),))))
        w = team_world(w1, w2).post("w1", "team", (("kind", Value.text("alert")),))
        w, report = reaction_round(w, "team")
        assert report.fired() == ("w1", "w2")

    def test_evaluation_order_never_changes_the_outcome(self):
        w1 = Entity("w1", behavior=behavior(RewritingRule("see1", (kind_is("alert"),), (post_kind("seen-1"),))))
        w2 = Entity("w2", behavior=behavior(RewritingRule("see2", (kind_is("alert"),), (post_kind("seen-2"),))))
        base = team_world(w1, w2).post("w1", "team", (("kind", Value.text("alert")),))
        wa, _ = reaction_round(base, "team", evaluation_order=("w1", "w2"))
        wb, _ = reaction_round(base, "team", evaluation_order=("w2", "w1"))
        assert wa.space("team") == wb.space("team")
        with pytest.raises(CasmasError):
            reaction_round(base, "team", evaluation_order=("w1",))

    def test_self_feeding_behavior_fails_its_round(self):
        # each ping it posts matches its own watched pattern again
        noisy = Entity(
            "noisy",
            behavior=behavior(
                RewritingRule("echo", (kind_is("ping"),), (post_kind("ping"),))
            ),
        )
        w = team_world(noisy).post("noisy", "team", (("kind", Value.text("ping")),))
        from lob.engine import EngineConfig

        with pytest.raises(CasmasError, match="did not quiesce"):
            reaction_round(w, "team", config=EngineConfig(max_iterations=8))

    def test_cross_round_ping_pong_never_settles(self):
        pinger = Entity("pinger", behavior=behavior(
            RewritingRule("pong", (kind_is("ping"),), (post_kind("pong"),))))
        ponger = Entity("ponger", behavior=behavior(
            RewritingRule("ping", (kind_is("pong"),), (post_kind("ping"),))))
        w = team_world(pinger, ponger).post("pinger", "team", (("kind", Value.text("pong")),))
        with pytest.raises(CasmasError, match="did not settle"):
            run_rounds(w, "team", max_rounds=3)

    def test_memory_written_back_to_the_entity(self):
        keeper = Entity(
            "keeper",
            behavior=behavior(
                RewritingRule(
                    "note",
                    (kind_is("alert"),),
                    (Action("remember", (T("latest"), T("alert"))),),
                )
            ),
        )
        w = team_world(keeper).post("keeper", "team", (("kind", Value.text("alert")),))
        w, report = reaction_round(w, "team")
        assert report.fired() == ("keeper",)
        assert w.entities["keeper"].memory == (("latest", T("alert")),)

    def test_forget_clears_memory(self):
        amnesiac = Entity(
            "amnesiac",
            memory=(("latest", T("stale")),),
            behavior=behavior(
                RewritingRule(
                    "wipe", (kind_is("alert"),), (Action("forget", (T("latest"),)),)
                )
            ),
        )
        w = team_world(amnesiac).post("amnesiac", "team", (("kind", Value.text("alert")),))
        w, _ = reaction_round(w, "team")
        assert w.entities["amnesiac"].memory == ()

    def test_writes_outside_the_view_fail_the_round(self):
        sneaky = Entity(
            "sneaky",
            behavior=behavior(
                RewritingRule(
                    "leak",
                    (kind_is("alert"),),
                    (Action("put", (T("x"), T("elsewhere"))),),
                )
            ),
        )
        w = team_world(sneaky).post("sneaky", "team", (("kind", Value.text("alert")),))
        with pytest.raises(CasmasError, match="wrote outside its view"):
            reaction_round(w, "team")

    def test_posting_to_a_foreign_space_is_a_membership_error(self):
        gossip = Entity(
            "gossip",
            behavior=behavior(
                RewritingRule("spread", (kind_is("alert"),), (
                    Action("post", (Application("aggregate", (Application("list", (T("kind"), T("rumor"))),)), T("others"))),
                )),
            ),
        )
        w = World(
            {"gossip": Entity("gossip"), "g2": gossip.__class__("g2", (), gossip.behavior)},
            {
                "team": Community("team", ("g2",)),
                "others": Community("others", ("gossip",)),
            },
        )
        w = w.post("g2", "team", (("kind", Value.text("alert")),))
        from lob.engine import ActionFailure

        with pytest.raises(ActionFailure) as e:
            reaction_round(w, "team")
        assert e.value.cause.code == "membership"


class TestWorldFromBundle:
    def bundle(self, facts=(), members=("a", "b")):
        return Bundle(
            entities=(
                EntityDecl("a", ((("color", Value.text("red")),),), None),
                EntityDecl("b", (), None),
            ),
            communities=(CommunityDecl("team", members, tuple(facts)),),
        )

    def test_memory_names_and_fact_names(self):
        decl_fact = FactDecl("a", (("kind", Value.text("alert")),))
        w = world_from_bundle(self.bundle(facts=(decl_fact, decl_fact)))
        assert w.entities["a"].memory[0][0] == "m1"
        assert [n for n, _ in w.space("team")] == ["f-a-1", "f-a-2"]

    def test_fact_owner_checks(self):
        ghost = FactDecl("ghost", (("k", Value.integer(1)),))
        with pytest.raises(CasmasError, match="not a declared entity"):
            world_from_bundle(self.bundle(facts=(ghost,)))
        outsider = FactDecl("b", (("k", Value.integer(1)),))
        with pytest.raises(MembershipError):
            world_from_bundle(self.bundle(facts=(outsider,), members=("a",)))

    def test_member_checks(self):
        with pytest.raises(CasmasError, match="not a declared entity"):
            world_from_bundle(self.bundle(members=("a", "b", "ghost")))


class TestStructureAndWrappers:
    def test_web_structure_links_shared_members(self):
        w = World(
            {"a": Entity("a"), "b": Entity("b")},
            {
                "team": Community("team", ("a", "b")),
                "club": Community("club", ("b",)),
                "span": Community("span", ()),
            },
        )
        web = w.web_structure()
        assert [l.name for l in web.layouts] == ["team", "club", "span"]
        assert web.hyperlinks == (("team", "club"),)

    def test_wrapper_calls_are_logged(self):
        seen = []
        caller = Entity(
            "caller",
            behavior=behavior(
                RewritingRule(
                    "ring", (kind_is("alert"),), (Action("bell", (T("ding"),)),)
                )
            ),
        )
        w = team_world(caller)
        from lob.core import ParamSpec, ValueKind

        w = register_wrapper(w, "bell", (ParamSpec("tone", ValueKind.TEXT),), lambda tone: seen.append(tone))
        w = w.post("caller", "team", (("kind", Value.text("alert")),))
        w, _ = reaction_round(w, "team")
        assert seen == [Value.text("ding")]
        assert ("bell", (Value.text("ding"),)) in w.calls
