import pytest

from lob.core import (
    Annotation,
    AnnotationCycleError,
    AnnotationStore,
    Application,
    Constant,
    ConstructionError,
    DEFAULT_VOCABULARY,
    LayoutStructure,
    OperatorStyle,
    RewritingRule,
    Action,
    RuleNode,
    ConnectorNode,
    SymbolStyle,
    TargetKind,
    TargetRef,
    TopologicalObject,
    Value,
    WebStructure,
    node_at,
    resolve_target,
)

OBJ_REF = TargetRef(TargetKind.OBJECT, ("form", "0"))


def note(ann_id, targets, body=None):
    return Annotation(ann_id, body or SymbolStyle(("highlight",)), targets, "ada", "t0")


@pytest.fixture
def web():
    objects = (
        TopologicalObject(Constant(Value.text("first"))),
        TopologicalObject(Constant(Value.text("second"))),
    )
    return WebStructure((LayoutStructure("form", objects),))


def test_vocabulary_accepts_tokens_and_families():
    assert DEFAULT_VOCABULARY.accepts("highlight")
    assert DEFAULT_VOCABULARY.accepts("color(red)")
    assert not DEFAULT_VOCABULARY.accepts("color")
    assert not DEFAULT_VOCABULARY.accepts("shape(round)")
    wider = DEFAULT_VOCABULARY.with_tokens("blink", families=("shape",))
    assert wider.accepts("blink") and wider.accepts("shape(round)")


def test_annotation_body_shapes():
    assert isinstance(note("a1", (OBJ_REF,)).body, SymbolStyle)
    computed = OperatorStyle(Application("select", (Constant(Value.text("frame")),)))
    assert note("a2", (OBJ_REF,), computed).body is computed
    plain = note("a3", (OBJ_REF,), Value.text("double-check this"))
    assert plain.body == Value.text("double-check this")
    with pytest.raises(ConstructionError):
        note("a4", (OBJ_REF,), body="bare string")
    with pytest.raises(ConstructionError):
        note("a5", ())  # no targets


def test_store_rejects_duplicates_and_cycles():
    store = AnnotationStore().add(note("a0", (OBJ_REF,)))
    with pytest.raises(ConstructionError):
        store.add(note("a0", (OBJ_REF,)))
    store = store.add(note("a1", (TargetRef(TargetKind.ANNOTATION, ("a0",)),)))
    # a0 -> a1 would close the loop a1 -> a0 -> a1
    looped = Annotation(
        "a2",
        SymbolStyle(("strike",)),
        (TargetRef(TargetKind.ANNOTATION, ("a2",)),),
        "ada",
        "t1",
    )
    with pytest.raises(AnnotationCycleError):
        store.add(looped)


def test_resolve_object_and_bounds(web):
    store = AnnotationStore()
    hit = resolve_target(OBJ_REF, web, store)
    assert hit.hops == 0 and hit.element is web.layouts[0].objects[0]
    assert resolve_target(TargetRef(TargetKind.OBJECT, ("form", "9")), web, store) is None
    assert resolve_target(TargetRef(TargetKind.OBJECT, ("nowhere", "0")), web, store) is None
    assert resolve_target(TargetRef(TargetKind.OBJECT, ("form", "x")), web, store) is None


def test_resolve_control_paths():
    rule = RewritingRule("flag", (), (Action("put", (Constant(Value.integer(1)), Constant(Value.text("work")))),))
    control = ConnectorNode("or", (RuleNode(rule), RuleNode(rule)))
    controls = {"guard": control}
    ref = TargetRef(TargetKind.CONTROL, ("guard", "1"))
    hit = resolve_target(ref, None, AnnotationStore(), controls)
    assert hit.element is node_at(control, (1,))
    assert resolve_target(TargetRef(TargetKind.CONTROL, ("guard", "7")), None, AnnotationStore(), controls) is None
    assert resolve_target(TargetRef(TargetKind.CONTROL, ("other",)), None, AnnotationStore(), controls) is None


def test_chain_hops_count_every_link(web):
    # a1 -> a0 -> object: two links, anchored on the object
    store = AnnotationStore().add(note("a0", (OBJ_REF,)))
    store = store.add(note("a1", (TargetRef(TargetKind.ANNOTATION, ("a0",)),)))
    hit = resolve_target(TargetRef(TargetKind.ANNOTATION, ("a1",)), web, store)
    assert hit.element.id == "a1"
    assert hit.hops == 2
    assert isinstance(hit.anchor, TopologicalObject)

    dangling = AnnotationStore().add(
        note("lone", (TargetRef(TargetKind.ANNOTATION, ("ghost",)),))
    )
    hit = resolve_target(TargetRef(TargetKind.ANNOTATION, ("lone",)), web, dangling)
    assert hit.anchor is None


def test_annotations_on_matches_exact_ref(web):
    a = note("a0", (OBJ_REF,))
    store = AnnotationStore().add(a)
    assert store.annotations_on(OBJ_REF) == (a,)
    assert store.annotations_on(TargetRef(TargetKind.OBJECT, ("form", "1"))) == ()
