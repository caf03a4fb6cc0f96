"""Total parser for the textual bundle form.

Line oriented: a block is a header line plus its more-indented children.
Malformed blocks produce diagnostics and are skipped; the parser always
returns a (possibly partial) bundle, never raises. After the structural pass
it validates names, kinds, and arities against the known operator vocabulary
and appends those findings to the same diagnostics list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core.annotations import (
    Annotation,
    AnnotationCycleError,
    AnnotationStore,
    DEFAULT_VOCABULARY,
    OperatorStyle,
    SymbolStyle,
    TargetKind,
    TargetRef,
)
from ..core.operands import Application, Constant, Operand, Variable, is_ground
from ..core.operators import (
    ActionalBody,
    FunctionalBody,
    OperatorConstruct,
    OperatorKind,
    ParamSpec,
)
from ..core.rules import (
    Action,
    Condition,
    ConnectorNode,
    ControlStructure,
    RewritingRule,
    RuleNode,
)
from ..core.state import State
from ..core.structures import LayoutStructure, TopologicalObject, WebStructure
from ..core.validate import (
    validate_annotation,
    validate_control_structure,
    validate_operand,
    validate_web_structure,
)
from ..core.values import ConstructionError, Coordinates, TypedVariable, Value, ValueKind
from .bundle import (
    ArcDecl,
    AttrSet,
    Bundle,
    CommunityDecl,
    ComponentDecl,
    EntityDecl,
    FactDecl,
    NamedControl,
    NamedOperand,
    NamedWeb,
    PostStep,
    PropagateStep,
    ReplaceStep,
    RoundStep,
    ScenarioStep,
    WorkspaceDecl,
    signature_view,
)
from .diagnostics import Diagnostic, error

_KINDS = {k.value: k for k in ValueKind}


class LineError(Exception):
    def __init__(self, production: str, message: str, col: int = 0):
        super().__init__(message)
        self.production = production
        self.col = col


# -- scanning -----------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    number: int
    indent: int
    text: str


def _scan_lines(text: str, diags: list[Diagnostic]) -> list[Line]:
    out: list[Line] = []
    for i, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        body = raw.lstrip(" ")
        indent = len(raw) - len(body)
        if body and body[0] == "\t" or "\t" in raw[:indent]:
            diags.append(error("document", "tabs are not allowed in indentation", i))
            continue
        out.append(Line(i, indent, raw.rstrip()))
    return out


@dataclass
class Node:
    line: Line
    children: list["Node"] = field(default_factory=list)


def _build_tree(lines: list[Line]) -> list[Node]:
    roots: list[Node] = []
    stack: list[tuple[int, Node]] = []
    for line in lines:
        node = Node(line)
        while stack and line.indent <= stack[-1][0]:
            stack.pop()
        if stack:
            stack[-1][1].children.append(node)
        else:
            roots.append(node)
        stack.append((line.indent, node))
    return roots


# -- tokens --------------------------------------------------------------------


_TOKEN_RE = re.compile(
    r"""(?P<ws>[ ]+)
      | (?P<string>"(?:\\.|[^"\\])*")
      | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
      | (?P<ident>[a-z][a-z0-9]*(?:-[a-z0-9]+)*)
      | (?P<arrow>->)
      | (?P<punct>[(),:*{}=/])
    """,
    re.X,
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def _unescape(raw: str, col: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise LineError("constant", "dangling escape in text literal", col)
        nxt = raw[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt == "u":
            if i + 6 > len(raw):
                raise LineError("constant", "truncated unicode escape", col)
            try:
                out.append(chr(int(raw[i + 2 : i + 6], 16)))
            except ValueError:
                raise LineError("constant", "malformed unicode escape", col)
            i += 6
        else:
            raise LineError("constant", f"unknown escape \\{nxt}", col)
    return "".join(out)


@dataclass(frozen=True)
class Tok:
    kind: str  # "string" | "int" | "dec" | "ident" | "punct"
    value: object
    col: int
    text: str


def _tokenize(content: str, start_col: int) -> list[Tok]:
    toks: list[Tok] = []
    pos = 0
    while pos < len(content):
        m = _TOKEN_RE.match(content, pos)
        if m is None:
            raise LineError("document", f"unexpected character {content[pos]!r}", start_col + pos)
        col = start_col + pos
        if m.lastgroup == "string":
            toks.append(Tok("string", _unescape(m.group()[1:-1], col), col, m.group()))
        elif m.lastgroup == "number":
            text = m.group()
            if "." in text or "e" in text or "E" in text:
                toks.append(Tok("dec", float(text), col, text))
            else:
                toks.append(Tok("int", int(text), col, text))
        elif m.lastgroup == "ident":
            toks.append(Tok("ident", m.group(), col, m.group()))
        elif m.lastgroup == "arrow":
            toks.append(Tok("punct", "->", col, "->"))
        elif m.lastgroup == "punct":
            toks.append(Tok("punct", m.group(), col, m.group()))
        pos = m.end()
    return toks


class Cursor:
    def __init__(self, toks: list[Tok], line: Line):
        self.toks = toks
        self.i = 0
        self.line = line

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def peek(self) -> Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, production: str = "document") -> Tok:
        if self.at_end():
            raise LineError(production, "unexpected end of line")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, kind: str, value: object = None) -> Tok | None:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            return None
        if value is not None and tok.value != value:
            return None
        self.i += 1
        return tok

    def expect(self, kind: str, value: object, production: str) -> Tok:
        tok = self.peek()
        if tok is None:
            raise LineError(production, f"expected {value!r} at end of line")
        if tok.kind != kind or (value is not None and tok.value != value):
            raise LineError(production, f"expected {value!r}, got {tok.text!r}", tok.col)
        self.i += 1
        return tok

    def expect_ident(self, production: str, what: str) -> str:
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            raise LineError(production, f"expected {what}", tok.col if tok else 0)
        self.i += 1
        return str(tok.value)

    def expect_end(self, production: str) -> None:
        tok = self.peek()
        if tok is not None:
            raise LineError(production, f"trailing input {tok.text!r}", tok.col)


# -- expression parsing -------------------------------------------------------------


def _parse_kind_tag(cur: Cursor, production: str, allow_any: bool) -> tuple[ValueKind | None, bool]:
    word = cur.expect_ident(production, "a value kind")
    if word == "any":
        if not allow_any:
            raise LineError(production, "variables need a concrete kind, not any")
        kind = None
    elif word in _KINDS:
        kind = _KINDS[word]
    else:
        raise LineError(production, f"unknown value kind {word!r}")
    group = cur.accept("punct", "*") is not None
    return kind, group


def parse_operand(cur: Cursor) -> Operand:
    tok = cur.peek()
    if tok is None:
        raise LineError("operand-construct", "expected an operand")
    if tok.kind == "string":
        cur.next()
        return Constant(Value.text(str(tok.value)))
    if tok.kind == "int":
        cur.next()
        return Constant(Value.integer(int(tok.value)))  # type: ignore[arg-type]
    if tok.kind == "dec":
        cur.next()
        return Constant(Value.decimal(float(tok.value)))  # type: ignore[arg-type]
    if tok.kind == "punct" and tok.value == "{":
        attrs = parse_attrs(cur)
        return _attrs_to_operand(attrs)
    if tok.kind != "ident":
        raise LineError("operand-construct", f"unexpected {tok.text!r}", tok.col)
    word = str(tok.value)
    if word in ("true", "false"):
        cur.next()
        return Constant(Value.boolean(word == "true"))
    if word == "media":
        return Constant(_parse_media(cur))
    cur.next()
    after = cur.peek()
    if after is not None and after.kind == "punct" and after.value == "(":
        cur.next()
        args = [parse_operand(cur)]
        while cur.accept("punct", ","):
            args.append(parse_operand(cur))
        cur.expect("punct", ")", "operand-construct")
        return Application(word, tuple(args))
    if after is not None and after.kind == "punct" and after.value == ":":
        cur.next()
        kind, group = _parse_kind_tag(cur, "operand-construct", allow_any=False)
        assert kind is not None
        return Variable(TypedVariable(word, kind, group))
    raise LineError(
        "operand-construct", f"{word!r} needs arguments or a declared kind", tok.col
    )


def _parse_media(cur: Cursor) -> Value:
    tok = cur.next("constant")
    cur.expect("punct", "(", "constant")
    ref = cur.next("constant")
    if ref.kind != "string":
        raise LineError("constant", "media reference must be a text literal", ref.col)
    cur.expect("punct", ",", "constant")
    mk = cur.next("constant")
    if mk.kind != "string":
        raise LineError("constant", "media kind must be a text literal", mk.col)
    cur.expect("punct", ")", "constant")
    return Value.media(str(ref.value), str(mk.value))


def parse_constant(cur: Cursor) -> Value:
    tok = cur.peek()
    if tok is None:
        raise LineError("constant", "expected a constant")
    if tok.kind == "string":
        cur.next()
        return Value.text(str(tok.value))
    if tok.kind == "int":
        cur.next()
        return Value.integer(int(tok.value))  # type: ignore[arg-type]
    if tok.kind == "dec":
        cur.next()
        return Value.decimal(float(tok.value))  # type: ignore[arg-type]
    if tok.kind == "ident" and tok.value in ("true", "false"):
        cur.next()
        return Value.boolean(tok.value == "true")
    if tok.kind == "ident" and tok.value == "media":
        return _parse_media(cur)
    raise LineError("constant", f"expected a constant, got {tok.text!r}", tok.col)


def parse_attrs(cur: Cursor) -> AttrSet:
    opener = cur.expect("punct", "{", "constant")
    attrs: list[tuple[str, Value]] = []
    if cur.accept("punct", "}"):
        raise LineError("constant", "a record literal needs at least one attribute", opener.col)
    while True:
        key = cur.next("constant")
        if key.kind != "string":
            raise LineError("constant", "attribute names must be text literals", key.col)
        cur.expect("punct", "=", "constant")
        attrs.append((str(key.value), parse_constant(cur)))
        if cur.accept("punct", "}"):
            break
        cur.expect("punct", ",", "constant")
    return tuple(attrs)


def _attrs_to_operand(attrs: AttrSet) -> Operand:
    pairs = tuple(
        Application("list", (Constant(Value.text(name)), Constant(v))) for name, v in attrs
    )
    return Application("aggregate", pairs)


def _parse_invocation(cur: Cursor, production: str) -> tuple[str, tuple[Operand, ...]]:
    name = cur.expect_ident(production, "an operator name")
    cur.expect("punct", "(", production)
    args: list[Operand] = []
    if not cur.accept("punct", ")"):
        args.append(parse_operand(cur))
        while cur.accept("punct", ","):
            args.append(parse_operand(cur))
        cur.expect("punct", ")", production)
    return name, tuple(args)


# -- parse result ---------------------------------------------------------------------


@dataclass(frozen=True)
class ParseResult:
    bundle: Bundle
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


# -- the parser ------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.diags: list[Diagnostic] = []
        self.operators: list[OperatorConstruct] = []
        self.operands: list[NamedOperand] = []
        self.webs: list[NamedWeb] = []
        self.controls: list[NamedControl] = []
        self.annotations: list[Annotation] = []
        self.state: State | None = None
        self.entities: list[EntityDecl] = []
        self.communities: list[CommunityDecl] = []
        self.workspaces: list[WorkspaceDecl] = []
        self.scenario: tuple[ScenarioStep, ...] = ()

    # helpers

    def _error(self, node: Node, exc: Exception) -> None:
        if isinstance(exc, LineError):
            self.diags.append(error(exc.production, str(exc), node.line.number, exc.col))
        else:
            self.diags.append(error("document", str(exc), node.line.number))

    def _cursor(self, node: Node) -> Cursor:
        return Cursor(_tokenize(node.line.text.strip(), node.line.indent), node.line)

    def _first_word(self, node: Node) -> str:
        m = re.match(r"[a-z][a-z0-9-]*", node.line.text.strip())
        return m.group() if m else ""

    def _no_children(self, node: Node, production: str) -> None:
        for child in node.children:
            self.diags.append(
                error(production, "this line does not take an indented block", child.line.number)
            )

    def _taken(self, name: str, names: set[str], label: str, node: Node) -> bool:
        if name in names:
            self.diags.append(
                error("document", f"duplicate {label} name {name!r}", node.line.number)
            )
            return True
        names.add(name)
        return False

    # top level

    def parse(self) -> ParseResult:
        lines = _scan_lines(self.text, self.diags)
        roots = _build_tree(lines)
        names: dict[str, set[str]] = {k: set() for k in (
            "operator", "operand", "web", "control", "annotation", "entity",
            "community", "workspace")}
        handlers = {
            "operator": lambda n: self._operator(n, names["operator"]),
            "operand": lambda n: self._named_operand(n, names["operand"]),
            "web": lambda n: self._web(n, names["web"]),
            "rule": lambda n: self._top_rule(n, names["control"]),
            "connector": lambda n: self._top_connector(n, names["control"]),
            "annotation": lambda n: self._annotation(n, names["annotation"]),
            "state": self._state,
            "entity": lambda n: self._entity(n, names["entity"]),
            "community": lambda n: self._community(n, names["community"]),
            "workspace": lambda n: self._workspace(n, names["workspace"]),
            "scenario": self._scenario,
        }
        for node in roots:
            word = self._first_word(node)
            handler = handlers.get(word)
            if handler is None:
                self.diags.append(
                    error("document", f"unknown block {word or node.line.text.strip()!r}", node.line.number)
                )
                continue
            try:
                handler(node)
            except (LineError, ConstructionError) as e:
                self._error(node, e)
        bundle = Bundle(
            operators=tuple(self.operators),
            operands=tuple(self.operands),
            webs=tuple(self.webs),
            controls=tuple(self.controls),
            annotations=tuple(self.annotations),
            state=self.state,
            entities=tuple(self.entities),
            communities=tuple(self.communities),
            workspaces=tuple(self.workspaces),
            scenario=self.scenario,
        )
        self._validate(bundle, roots)
        return ParseResult(bundle, tuple(self.diags))

    # blocks

    def _operator(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "operator", "operator-construct")
        name = cur.expect_ident("operator-construct", "an operator name")
        kind_word = cur.expect_ident("operator-construct", "functional or actional")
        if kind_word not in ("functional", "actional"):
            raise LineError("operator-construct", f"expected functional or actional, got {kind_word!r}")
        kind = OperatorKind(kind_word)
        cur.expect("punct", "(", "operator-construct")
        params: list[ParamSpec] = []
        if not cur.accept("punct", ")"):
            while True:
                pname = cur.expect_ident("operator-construct", "a parameter name")
                cur.expect("punct", ":", "operator-construct")
                pkind, pgroup = _parse_kind_tag(cur, "operator-construct", allow_any=True)
                params.append(ParamSpec(pname, pkind, pgroup))
                if cur.accept("punct", ")"):
                    break
                cur.expect("punct", ",", "operator-construct")
        result: ValueKind | None = None
        result_group = False
        if kind is OperatorKind.FUNCTIONAL:
            cur.expect("punct", "->", "operator-construct")
            result, result_group = _parse_kind_tag(cur, "operator-construct", allow_any=True)
        cur.expect("punct", ":", "operator-construct")
        cur.expect_end("operator-construct")
        if self._taken(name, names, "operator", node):
            return
        if kind is OperatorKind.FUNCTIONAL:
            if len(node.children) != 1:
                raise LineError("operator-construct", "a functional body is exactly one expression")
            child = node.children[0]
            self._no_children(child, "operator-construct")
            ccur = self._cursor(child)
            expr = parse_operand(ccur)
            ccur.expect_end("operand-construct")
            body: FunctionalBody | ActionalBody = FunctionalBody(expr)
        else:
            if not node.children:
                raise LineError("operator-construct", "an actional body needs at least one step")
            steps: list[Application] = []
            for child in node.children:
                self._no_children(child, "operator-construct")
                ccur = self._cursor(child)
                step = parse_operand(ccur)
                ccur.expect_end("operand-construct")
                if not isinstance(step, Application):
                    raise LineError("operator-construct", "each step must be an operator invocation")
                steps.append(step)
            body = ActionalBody(tuple(steps))
        self.operators.append(
            OperatorConstruct(name, kind, tuple(params), body, result, result_group)
        )

    def _named_operand(self, node: Node, names: set[str]) -> None:
        self._no_children(node, "operand-construct")
        cur = self._cursor(node)
        cur.expect("ident", "operand", "operand-construct")
        name = cur.expect_ident("operand-construct", "an operand name")
        cur.expect("punct", "=", "operand-construct")
        op = parse_operand(cur)
        cur.expect_end("operand-construct")
        if not self._taken(name, names, "operand", node):
            self.operands.append(NamedOperand(name, op))

    def _web(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "web", "web-structure")
        name = cur.expect_ident("web-structure", "a web name")
        cur.expect("punct", ":", "web-structure")
        cur.expect_end("web-structure")
        layouts: list[LayoutStructure] = []
        links: list[tuple[str, str]] = []
        for child in node.children:
            word = self._first_word(child)
            try:
                if word == "layout":
                    layouts.append(self._layout(child))
                elif word == "link":
                    self._no_children(child, "web-structure")
                    ccur = self._cursor(child)
                    ccur.expect("ident", "link", "web-structure")
                    src = ccur.expect_ident("web-structure", "a layout name")
                    ccur.expect("punct", "->", "web-structure")
                    dst = ccur.expect_ident("web-structure", "a layout name")
                    ccur.expect_end("web-structure")
                    links.append((src, dst))
                else:
                    raise LineError("web-structure", f"expected layout or link, got {word!r}")
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        if not layouts:
            raise LineError("web-structure", f"web {name!r} needs at least one layout")
        if not self._taken(name, names, "web", node):
            self.webs.append(NamedWeb(name, WebStructure(tuple(layouts), tuple(links))))

    def _layout(self, node: Node) -> LayoutStructure:
        cur = self._cursor(node)
        cur.expect("ident", "layout", "layout-structure")
        name = cur.expect_ident("layout-structure", "a layout name")
        cur.expect("punct", ":", "layout-structure")
        cur.expect_end("layout-structure")
        objects: list[TopologicalObject] = []
        for child in node.children:
            self._no_children(child, "topological-object")
            ccur = self._cursor(child)
            ccur.expect("ident", "object", "topological-object")
            operand = parse_operand(ccur)
            coords = None
            if ccur.accept("ident", "at"):
                ccur.expect("punct", "(", "topological-object")
                x = ccur.next("topological-object")
                if x.kind not in ("int", "dec"):
                    raise LineError("topological-object", "coordinates must be numbers", x.col)
                ccur.expect("punct", ",", "topological-object")
                y = ccur.next("topological-object")
                if y.kind not in ("int", "dec"):
                    raise LineError("topological-object", "coordinates must be numbers", y.col)
                ccur.expect("punct", ")", "topological-object")
                coords = Coordinates(float(x.value), float(y.value))  # type: ignore[arg-type]
            ccur.expect_end("topological-object")
            objects.append(TopologicalObject(operand, coords))
        if not objects:
            raise LineError("layout-structure", f"layout {name!r} needs at least one object")
        return LayoutStructure(name, tuple(objects))

    def _rule(self, node: Node) -> RewritingRule:
        cur = self._cursor(node)
        cur.expect("ident", "rule", "rewriting-rule")
        name = cur.expect_ident("rewriting-rule", "a rule name")
        cur.expect("punct", ":", "rewriting-rule")
        cur.expect_end("rewriting-rule")
        conditions: list[Condition] = []
        actions: list[Action] = []
        for child in node.children:
            self._no_children(child, "rewriting-rule")
            ccur = self._cursor(child)
            word = ccur.expect_ident("rewriting-rule", "when or then")
            if word == "when":
                op, args = _parse_invocation(ccur, "condition")
                ccur.expect_end("condition")
                conditions.append(Condition(op, args))
            elif word == "then":
                op, args = _parse_invocation(ccur, "action")
                ccur.expect_end("action")
                actions.append(Action(op, args))
            else:
                raise LineError("rewriting-rule", f"expected when or then, got {word!r}")
        if not actions:
            raise LineError("rewriting-rule", f"rule {name!r} needs at least one action")
        return RewritingRule(name, tuple(conditions), tuple(actions))

    def _control_child(self, node: Node) -> ControlStructure:
        word = self._first_word(node)
        if word == "rule":
            return RuleNode(self._rule(node))
        if word == "connector":
            cur = self._cursor(node)
            cur.expect("ident", "connector", "connector")
            op = cur.expect_ident("connector", "a gate operator")
            cur.expect("punct", ":", "connector")
            cur.expect_end("connector")
            children = self._control_children(node)
            return ConnectorNode(op, children)
        raise LineError("control-structure", f"expected rule or connector, got {word!r}")

    def _control_children(self, node: Node) -> tuple[ControlStructure, ...]:
        children: list[ControlStructure] = []
        for child in node.children:
            children.append(self._control_child(child))
        if not children:
            raise LineError("connector", "a connector needs at least one child")
        return tuple(children)

    def _top_rule(self, node: Node, names: set[str]) -> None:
        rule = self._rule(node)
        if not self._taken(rule.name, names, "control", node):
            self.controls.append(NamedControl(rule.name, RuleNode(rule)))

    def _top_connector(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "connector", "connector")
        name = cur.expect_ident("connector", "a connector name")
        op = cur.expect_ident("connector", "a gate operator")
        cur.expect("punct", ":", "connector")
        cur.expect_end("connector")
        children = self._control_children(node)
        if not self._taken(name, names, "control", node):
            self.controls.append(NamedControl(name, ConnectorNode(op, children)))

    def _annotation(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "annotation", "annotation")
        ann_id = cur.expect_ident("annotation", "an annotation id")
        cur.expect("ident", "by", "annotation")
        author = cur.next("annotation")
        if author.kind != "string":
            raise LineError("annotation", "author must be a text literal", author.col)
        cur.expect("ident", "at", "annotation")
        ts = cur.next("annotation")
        if ts.kind != "string":
            raise LineError("annotation", "timestamp must be a text literal", ts.col)
        cur.expect("punct", ":", "annotation")
        cur.expect_end("annotation")
        body = None
        targets: list[TargetRef] = []
        for child in node.children:
            self._no_children(child, "annotation")
            ccur = self._cursor(child)
            word = ccur.expect_ident("annotation", "body or target")
            if word == "body":
                if body is not None:
                    raise LineError("annotation", "an annotation has exactly one body")
                body = self._annotation_body(ccur)
            elif word == "target":
                targets.append(self._target_ref(ccur))
            else:
                raise LineError("annotation", f"expected body or target, got {word!r}")
        if body is None:
            raise LineError("annotation", f"annotation {ann_id!r} needs a body")
        if not targets:
            raise LineError("annotation", f"annotation {ann_id!r} needs at least one target")
        if not self._taken(ann_id, names, "annotation", node):
            self.annotations.append(
                Annotation(ann_id, body, tuple(targets), str(author.value), str(ts.value))
            )

    def _annotation_body(self, cur: Cursor):
        tok = cur.peek()
        if tok is not None and tok.kind == "ident" and tok.value == "style":
            cur.next()
            tokens: list[str] = []
            while not cur.at_end():
                t = cur.expect_ident("style", "a style token")
                if cur.accept("punct", "("):
                    arg = cur.expect_ident("style", "a token argument")
                    cur.expect("punct", ")", "style")
                    tokens.append(f"{t}({arg})")
                else:
                    tokens.append(t)
            if not tokens:
                raise LineError("style", "a symbol style needs at least one token")
            return SymbolStyle(tuple(tokens))
        if tok is not None and tok.kind == "ident" and tok.value == "apply":
            cur.next()
            op = parse_operand(cur)
            cur.expect_end("style")
            if not isinstance(op, Application):
                raise LineError("style", "an operator style must be an application")
            return OperatorStyle(op)
        value = parse_constant(cur)
        cur.expect_end("constant")
        return value

    def _target_ref(self, cur: Cursor) -> TargetRef:
        word = cur.expect_ident("target", "rule, object, or annotation")
        kinds = {
            "rule": TargetKind.CONTROL,
            "object": TargetKind.OBJECT,
            "annotation": TargetKind.ANNOTATION,
        }
        if word not in kinds:
            raise LineError("target", f"unknown target kind {word!r}")
        segments: list[str] = []
        seg = cur.next("target-ref")
        if seg.kind not in ("ident", "int"):
            raise LineError("target-ref", "a target path starts with a name", seg.col)
        segments.append(seg.text)
        while cur.accept("punct", "/"):
            seg = cur.next("target-ref")
            if seg.kind not in ("ident", "int"):
                raise LineError("target-ref", "path segments are names or indexes", seg.col)
            segments.append(seg.text)
        selector = "select"
        if cur.accept("ident", "via"):
            selector = cur.expect_ident("target-ref", "a selector operator")
        cur.expect_end("target-ref")
        return TargetRef(kinds[word], tuple(segments), selector)

    def _state(self, node: Node) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "state", "state")
        cur.expect("punct", ":", "state")
        cur.expect_end("state")
        if self.state is not None:
            raise LineError("state", "a bundle has at most one state block")
        scopes: dict[str, dict[str, Operand]] = {}
        for child in node.children:
            self._no_children(child, "state")
            try:
                ccur = self._cursor(child)
                scope = ccur.expect_ident("state", "a scope name")
                name = ccur.expect_ident("state", "an entry name")
                ccur.expect("punct", "=", "state")
                op = parse_operand(ccur)
                ccur.expect_end("state")
                if not is_ground(op):
                    raise LineError("state", f"entry {scope}/{name} must be ground")
                if name in scopes.get(scope, {}):
                    raise LineError("state", f"duplicate entry {scope}/{name}")
                scopes.setdefault(scope, {})[name] = op
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        self.state = State(scopes)

    def _entity(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "entity", "document")
        ent_id = cur.expect_ident("document", "an entity id")
        cur.expect("punct", ":", "document")
        cur.expect_end("document")
        memory: list[AttrSet] = []
        behavior: ControlStructure | None = None
        for child in node.children:
            word = self._first_word(child)
            try:
                if word == "memory":
                    self._no_children(child, "document")
                    ccur = self._cursor(child)
                    ccur.expect("ident", "memory", "constant")
                    memory.append(parse_attrs(ccur))
                    ccur.expect_end("constant")
                elif word == "behavior":
                    if behavior is not None:
                        raise LineError("control-structure", "an entity has at most one behavior")
                    ccur = self._cursor(child)
                    ccur.expect("ident", "behavior", "control-structure")
                    gate = ccur.expect_ident("control-structure", "a gate operator")
                    ccur.expect("punct", ":", "control-structure")
                    ccur.expect_end("control-structure")
                    behavior = ConnectorNode(gate, self._control_children(child))
                else:
                    raise LineError("document", f"expected memory or behavior, got {word!r}")
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        if not self._taken(ent_id, names, "entity", node):
            self.entities.append(EntityDecl(ent_id, tuple(memory), behavior))

    def _community(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "community", "document")
        name = cur.expect_ident("document", "a community name")
        cur.expect("punct", ":", "document")
        cur.expect_end("document")
        members: list[str] = []
        facts: list[FactDecl] = []
        for child in node.children:
            self._no_children(child, "document")
            word = self._first_word(child)
            try:
                ccur = self._cursor(child)
                if word == "member":
                    ccur.expect("ident", "member", "document")
                    members.append(ccur.expect_ident("document", "an entity id"))
                    ccur.expect_end("document")
                elif word == "fact":
                    ccur.expect("ident", "fact", "document")
                    owner = ccur.expect_ident("document", "an owner entity id")
                    attrs = parse_attrs(ccur)
                    ccur.expect_end("constant")
                    facts.append(FactDecl(owner, attrs))
                else:
                    raise LineError("document", f"expected member or fact, got {word!r}")
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        if not self._taken(name, names, "community", node):
            self.communities.append(CommunityDecl(name, tuple(members), tuple(facts)))

    def _workspace(self, node: Node, names: set[str]) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "workspace", "document")
        name = cur.expect_ident("document", "a workspace name")
        cur.expect("punct", ":", "document")
        cur.expect_end("document")
        components: list[ComponentDecl] = []
        arcs: list[ArcDecl] = []
        for child in node.children:
            word = self._first_word(child)
            try:
                if word == "source":
                    ccur = self._cursor(child)
                    ccur.expect("ident", "source", "document")
                    cid = ccur.expect_ident("document", "a component id")
                    ccur.expect("punct", ":", "document")
                    ccur.expect_end("document")
                    records: list[AttrSet] = []
                    for rec in child.children:
                        self._no_children(rec, "document")
                        rcur = self._cursor(rec)
                        rcur.expect("ident", "record", "constant")
                        records.append(parse_attrs(rcur))
                        rcur.expect_end("constant")
                    components.append(ComponentDecl(cid, "source", tuple(records)))
                elif word == "filter":
                    ccur = self._cursor(child)
                    ccur.expect("ident", "filter", "document")
                    cid = ccur.expect_ident("document", "a component id")
                    ccur.expect("punct", ":", "document")
                    ccur.expect_end("document")
                    components.append(ComponentDecl(cid, "filter", predicate=self._keep(child)))
                elif word in ("viewer", "handler"):
                    self._no_children(child, "document")
                    ccur = self._cursor(child)
                    ccur.expect("ident", word, "document")
                    cid = ccur.expect_ident("document", "a component id")
                    ccur.expect_end("document")
                    components.append(ComponentDecl(cid, word))
                elif word == "wire":
                    self._no_children(child, "document")
                    ccur = self._cursor(child)
                    ccur.expect("ident", "wire", "document")
                    src = ccur.expect_ident("document", "a component id")
                    ccur.expect("punct", "->", "document")
                    dst = ccur.expect_ident("document", "a component id")
                    selector = None
                    if ccur.accept("ident", "when"):
                        selector = parse_operand(ccur)
                    ccur.expect_end("document")
                    arcs.append(ArcDecl(src, dst, selector))
                else:
                    raise LineError(
                        "document", f"expected a component or wire, got {word!r}"
                    )
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        if not self._taken(name, names, "workspace", node):
            self.workspaces.append(WorkspaceDecl(name, tuple(components), tuple(arcs)))

    def _keep(self, node: Node) -> Operand:
        if len(node.children) != 1:
            raise LineError("document", "a filter takes exactly one keep line")
        child = node.children[0]
        self._no_children(child, "document")
        ccur = self._cursor(child)
        ccur.expect("ident", "keep", "document")
        predicate = parse_operand(ccur)
        ccur.expect_end("document")
        return predicate

    def _scenario(self, node: Node) -> None:
        cur = self._cursor(node)
        cur.expect("ident", "scenario", "document")
        cur.expect("punct", ":", "document")
        cur.expect_end("document")
        if self.scenario:
            raise LineError("document", "a bundle has at most one scenario block")
        steps: list[ScenarioStep] = []
        for child in node.children:
            word = self._first_word(child)
            try:
                ccur = self._cursor(child)
                if word == "post":
                    self._no_children(child, "document")
                    ccur.expect("ident", "post", "document")
                    entity = ccur.expect_ident("document", "an entity id")
                    community = ccur.expect_ident("document", "a community name")
                    attrs = parse_attrs(ccur)
                    ccur.expect_end("constant")
                    steps.append(PostStep(entity, community, attrs))
                elif word == "round":
                    self._no_children(child, "document")
                    ccur.expect("ident", "round", "document")
                    steps.append(RoundStep(ccur.expect_ident("document", "a community name")))
                    ccur.expect_end("document")
                elif word == "propagate":
                    self._no_children(child, "document")
                    ccur.expect("ident", "propagate", "document")
                    steps.append(PropagateStep(ccur.expect_ident("document", "a workspace name")))
                    ccur.expect_end("document")
                elif word == "replace":
                    ccur.expect("ident", "replace", "document")
                    ws = ccur.expect_ident("document", "a workspace name")
                    fid = ccur.expect_ident("document", "a filter id")
                    ccur.expect("punct", ":", "document")
                    ccur.expect_end("document")
                    steps.append(ReplaceStep(ws, fid, self._keep(child)))
                else:
                    raise LineError("document", f"unknown scenario step {word!r}")
            except (LineError, ConstructionError) as e:
                self._error(child, e)
        self.scenario = tuple(steps)

    # semantic validation

    def _validate(self, bundle: Bundle, roots: list[Node]) -> None:
        lines = {self._first_word(n) + ":" + self._block_name(n): n.line.number for n in roots}

        def line_of(kind: str, name: str) -> int:
            return lines.get(f"{kind}:{name}", 0)

        view = signature_view(bundle)
        progressive = {k: v for k, v in view.items() if not any(o.name == k for o in bundle.operators)}
        for op in bundle.operators:
            locals_ = {p.name: (p.kind, p.group) for p in op.params}
            where = line_of("operator", op.name)
            if isinstance(op.body, FunctionalBody):
                exprs = [op.body.expr]
            else:
                exprs = [arg for step in op.body.steps for arg in step.args]
                for step in op.body.steps:
                    sig = progressive.get(step.operator)
                    if sig is None:
                        self.diags.append(error(
                            "operator-construct",
                            f"step {step.operator!r} in {op.name!r} is not defined yet",
                            where,
                        ))
                    elif sig.kind is not OperatorKind.ACTIONAL:
                        self.diags.append(error(
                            "operator-construct",
                            f"step {step.operator!r} in {op.name!r} is not actional",
                            where,
                        ))
            for expr in exprs:
                for v in validate_operand(expr, progressive, op.name, locals_):
                    self.diags.append(error(v.construct, v.message, where))
            progressive[op.name] = op.signature
        for named in bundle.operands:
            for v in validate_operand(named.operand, view, named.name):
                self.diags.append(error(v.construct, v.message, line_of("operand", named.name)))
        for nw in bundle.webs:
            for v in validate_web_structure(nw.web, view, nw.name).violations:
                self.diags.append(error(v.construct, v.message, line_of("web", nw.name)))
        for nc in bundle.controls:
            for v in validate_control_structure(nc.control, view, nc.name).violations:
                where = line_of("rule", nc.name) or line_of("connector", nc.name)
                self.diags.append(error(v.construct, v.message, where))
        store = AnnotationStore()
        for ann in bundle.annotations:
            where = line_of("annotation", ann.id)
            for v in validate_annotation(ann, view):
                self.diags.append(error(v.construct, v.message, where))
            try:
                store = store.add(ann)
            except AnnotationCycleError as e:
                self.diags.append(error("annotation", str(e), where))
        entity_ids = {e.id for e in bundle.entities}
        for e in bundle.entities:
            if e.behavior is not None:
                for v in validate_control_structure(e.behavior, view, e.id).violations:
                    self.diags.append(error(v.construct, v.message, line_of("entity", e.id)))
        for c in bundle.communities:
            where = line_of("community", c.name)
            for m in c.members:
                if m not in entity_ids:
                    self.diags.append(error("document", f"member {m!r} is not a declared entity", where))
            for f in c.facts:
                if f.owner not in entity_ids:
                    self.diags.append(error("document", f"fact owner {f.owner!r} is not a declared entity", where))
        for w in bundle.workspaces:
            where = line_of("workspace", w.name)
            ids = {c.id for c in w.components}
            for arc in w.arcs:
                for end in (arc.source, arc.target):
                    if end not in ids:
                        self.diags.append(
                            error("document", f"wire names unknown component {end!r}", where)
                        )
                if arc.selector is not None:
                    for v in validate_operand(arc.selector, view, w.name):
                        self.diags.append(error(v.construct, v.message, where))
            for comp in w.components:
                if comp.predicate is not None:
                    for v in validate_operand(comp.predicate, view, comp.id):
                        self.diags.append(error(v.construct, v.message, where))
        community_names = {c.name for c in bundle.communities}
        workspace_names = {w.name for w in bundle.workspaces}
        for s in bundle.scenario:
            if isinstance(s, PostStep):
                if s.entity not in entity_ids:
                    self.diags.append(error("document", f"post names unknown entity {s.entity!r}", 0))
                if s.community not in community_names:
                    self.diags.append(error("document", f"post names unknown community {s.community!r}", 0))
            elif isinstance(s, RoundStep) and s.community not in community_names:
                self.diags.append(error("document", f"round names unknown community {s.community!r}", 0))
            elif isinstance(s, PropagateStep) and s.workspace not in workspace_names:
                self.diags.append(error("document", f"propagate names unknown workspace {s.workspace!r}", 0))
            elif isinstance(s, ReplaceStep):
                if s.workspace not in workspace_names:
                    self.diags.append(error("document", f"replace names unknown workspace {s.workspace!r}", 0))
                else:
                    ws = next(w for w in bundle.workspaces if w.name == s.workspace)
                    if not any(c.id == s.filter_id and c.kind == "filter" for c in ws.components):
                        self.diags.append(
                            error("document", f"replace names unknown filter {s.filter_id!r}", 0)
                        )
                for v in validate_operand(s.predicate, view, "replace"):
                    self.diags.append(error(v.construct, v.message, 0))

    def _block_name(self, node: Node) -> str:
        m = re.match(r"[a-z][a-z0-9-]*\s+([a-z][a-z0-9-]*)", node.line.text.strip())
        return m.group(1) if m else ""


def parse_document(text: str) -> ParseResult:
    """Parse source text into a bundle plus diagnostics. Total: any input,
    including garbage, yields a result."""
    try:
        return _Parser(text).parse()
    except Exception as e:  # pragma: no cover - the parser should not raise
        return ParseResult(Bundle(), (error("document", f"internal parse failure: {e}", 0),))


def parse_bytes(data: bytes) -> ParseResult:
    """Decode UTF-8 then parse; undecodable input is a document diagnostic."""
    try:
        return parse_document(data.decode("utf-8"))
    except UnicodeDecodeError as e:
        return ParseResult(Bundle(), (error("document", f"not valid UTF-8: {e}", 0),))


def parse_operand_text(text: str) -> Operand:
    """One expression on one line. Raises LineError on anything else."""
    line = Line(1, 0, text)
    cur = Cursor(_tokenize(text.strip(), 0), line)
    op = parse_operand(cur)
    cur.expect_end("operand-construct")
    return op
