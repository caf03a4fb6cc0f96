"""Structural validators.

Constructors only enforce local shape; these walkers check the cross-cutting
invariants that need a whole structure or an operator signature view: name
references, kind discipline, arity and static type conformance, and layout
or web level uniqueness. Each violation names the grammar construct it
breaks so diagnostics can point at the right production.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .annotations import Annotation, AnnotationStore, OperatorStyle
from .operands import Application, Constant, Operand, Variable
from .operators import OperatorKind, SignatureView
from .rules import ControlStructure, RewritingRule, RuleNode
from .structures import LayoutStructure, WebStructure
from .values import ValueKind


@dataclass(frozen=True)
class Violation:
    construct: str  # grammar construct the element fails to satisfy
    path: str  # element address, slash separated
    message: str

    def __str__(self) -> str:
        return f"{self.construct} at {self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


# -- static typing ------------------------------------------------------------

#: inferred type: (kind or None for unknown/any, is-group)
InferredType = tuple["ValueKind | None", bool]


def _conforms(actual: InferredType, kind: ValueKind | None, group: bool) -> bool:
    a_kind, a_group = actual
    if a_kind is None and not a_group:
        return True  # statically unknown, checked at evaluation
    if kind is None and not group:
        return True  # an untyped slot admits scalars and groups alike
    if a_group != group:
        return False
    if kind is None or a_kind is None:
        return True
    if a_kind is kind:
        return True
    # integers conform to decimal slots
    return a_kind is ValueKind.INTEGER and kind is ValueKind.DECIMAL


def infer_type(
    op: Operand,
    view: SignatureView,
    locals_: Mapping[str, InferredType] | None = None,
) -> InferredType:
    """Best-effort static type of an operand tree; unknown parts are None."""
    if isinstance(op, Constant):
        return op.value.kind, False
    if isinstance(op, Variable):
        if locals_ is not None and op.var.name in locals_:
            return locals_[op.var.name]
        return op.var.kind, op.var.group
    sig = view.get(op.operator)
    if sig is None or sig.kind is not OperatorKind.FUNCTIONAL:
        return None, False
    return sig.result, sig.result_group


def validate_operand(
    op: Operand,
    view: SignatureView,
    path: str,
    locals_: Mapping[str, InferredType] | None = None,
) -> tuple[Violation, ...]:
    out: list[Violation] = []

    def walk(node: Operand, where: str) -> None:
        if not isinstance(node, Application):
            return
        sig = view.get(node.operator)
        if sig is None:
            out.append(Violation("operand-construct", where, f"unknown operator {node.operator!r}"))
        elif sig.kind is not OperatorKind.FUNCTIONAL:
            out.append(
                Violation(
                    "operand-construct",
                    where,
                    f"operator {node.operator!r} is actional and cannot appear in an operand",
                )
            )
        elif not sig.arity_accepts(len(node.args)):
            expected = f"{len(sig.params)}+" if sig.variadic else str(len(sig.params))
            out.append(
                Violation(
                    "operand-construct",
                    where,
                    f"operator {node.operator!r} expects {expected} arguments, got {len(node.args)}",
                )
            )
        else:
            for i, arg in enumerate(node.args):
                p = sig.params[min(i, len(sig.params) - 1)]
                actual = infer_type(arg, view, locals_)
                if not _conforms(actual, p.kind, p.group):
                    out.append(
                        Violation(
                            "operand-construct",
                            f"{where}/{i}",
                            f"argument {i} of {node.operator!r} does not conform to "
                            f"parameter {p.name!r}",
                        )
                    )
        for i, arg in enumerate(node.args):
            walk(arg, f"{where}/{i}")

    walk(op, path)
    return tuple(out)


# -- structures ----------------------------------------------------------------


def validate_layout(
    layout: LayoutStructure, view: SignatureView, path: str = ""
) -> tuple[Violation, ...]:
    where = path or layout.name
    out: list[Violation] = []
    seen: dict[str, int] = {}
    for i, obj in enumerate(layout.objects):
        out.extend(validate_operand(obj.operand, view, f"{where}/{i}"))
        if isinstance(obj.operand, Variable):
            name = obj.operand.var.name
            if name in seen:
                out.append(
                    Violation(
                        "layout-structure",
                        f"{where}/{i}",
                        f"variable {name!r} already placed at object {seen[name]}",
                    )
                )
            else:
                seen[name] = i
    return tuple(out)


def validate_web_structure(web: WebStructure, view: SignatureView, path: str = "web") -> ValidationReport:
    out: list[Violation] = []
    names: set[str] = set()
    for layout in web.layouts:
        if layout.name in names:
            out.append(Violation("web-structure", path, f"duplicate layout name {layout.name!r}"))
        names.add(layout.name)
        out.extend(validate_layout(layout, view, f"{path}/{layout.name}"))
    for i, (src, dst) in enumerate(web.hyperlinks):
        for end in (src, dst):
            if end not in names:
                out.append(
                    Violation("web-structure", f"{path}/link-{i}", f"hyperlink names unknown layout {end!r}")
                )
    return ValidationReport(tuple(out))


# -- rules and control structures ------------------------------------------------


def _validate_invocation(
    operator: str,
    args: tuple[Operand, ...],
    expected: OperatorKind,
    construct: str,
    view: SignatureView,
    path: str,
) -> tuple[Violation, ...]:
    out: list[Violation] = []
    sig = view.get(operator)
    if sig is None:
        out.append(Violation(construct, path, f"unknown operator {operator!r}"))
    elif sig.kind is not expected:
        out.append(Violation(construct, path, f"operator {operator!r} is not {expected.value}"))
    elif not sig.arity_accepts(len(args)):
        wanted = f"{len(sig.params)}+" if sig.variadic else str(len(sig.params))
        out.append(Violation(construct, path, f"operator {operator!r} expects {wanted} arguments, got {len(args)}"))
    if expected is OperatorKind.FUNCTIONAL and sig is not None:
        if sig.kind is OperatorKind.FUNCTIONAL and sig.result not in (None, ValueKind.BOOLEAN):
            out.append(Violation(construct, path, f"operator {operator!r} does not yield a boolean"))
    for i, arg in enumerate(args):
        out.extend(validate_operand(arg, view, f"{path}/{i}"))
    return tuple(out)


def validate_rule(rule: RewritingRule, view: SignatureView, path: str = "") -> tuple[Violation, ...]:
    where = path or rule.name
    out: list[Violation] = []
    for i, cond in enumerate(rule.conditions):
        out.extend(
            _validate_invocation(
                cond.operator, cond.args, OperatorKind.FUNCTIONAL, "condition", view, f"{where}/when-{i}"
            )
        )
    for i, act in enumerate(rule.actions):
        out.extend(
            _validate_invocation(
                act.operator, act.args, OperatorKind.ACTIONAL, "action", view, f"{where}/then-{i}"
            )
        )
    return tuple(out)


def validate_control_structure(
    cs: ControlStructure, view: SignatureView, path: str = "control"
) -> ValidationReport:
    out: list[Violation] = []

    def walk(node: ControlStructure, where: str) -> None:
        if isinstance(node, RuleNode):
            out.extend(validate_rule(node.rule, view, f"{where}/{node.rule.name}"))
            return
        sig = view.get(node.operator)
        if sig is None:
            out.append(Violation("connector", where, f"unknown gate operator {node.operator!r}"))
        elif sig.kind is not OperatorKind.FUNCTIONAL or sig.result is not ValueKind.BOOLEAN:
            out.append(
                Violation("connector", where, f"gate operator {node.operator!r} must be a boolean functional")
            )
        elif not sig.arity_accepts(len(node.children)):
            wanted = f"{len(sig.params)}+" if sig.variadic else str(len(sig.params))
            out.append(
                Violation(
                    "connector",
                    where,
                    f"gate {node.operator!r} expects {wanted} inputs, got {len(node.children)}",
                )
            )
        for i, child in enumerate(node.children):
            walk(child, f"{where}/{i}")

    walk(cs, path)
    names = [r.name for r in _rules_of(cs)]
    dupes = {n for n in names if names.count(n) > 1}
    for n in sorted(dupes):
        out.append(Violation("control-structure", path, f"rule name {n!r} repeats in one control structure"))
    return ValidationReport(tuple(out))


def _rules_of(cs: ControlStructure) -> tuple[RewritingRule, ...]:
    from .rules import iter_rules

    return iter_rules(cs)


# -- annotations ----------------------------------------------------------------


def validate_annotation(
    annotation: Annotation,
    view: SignatureView,
    vocabulary=None,
    path: str = "",
) -> tuple[Violation, ...]:
    from .annotations import DEFAULT_VOCABULARY, SymbolStyle

    vocab = vocabulary if vocabulary is not None else DEFAULT_VOCABULARY
    where = path or annotation.id
    out: list[Violation] = []
    if isinstance(annotation.body, SymbolStyle):
        for t in annotation.body.tokens:
            if not vocab.accepts(t):
                out.append(Violation("style", where, f"style token {t!r} is not in the vocabulary"))
    elif isinstance(annotation.body, OperatorStyle):
        out.extend(validate_operand(annotation.body.application, view, f"{where}/style"))
    for i, ref in enumerate(annotation.targets):
        sig = view.get(ref.selector)
        if sig is None:
            out.append(Violation("target-ref", f"{where}/target-{i}", f"unknown selector {ref.selector!r}"))
        elif sig.kind is not OperatorKind.FUNCTIONAL:
            out.append(
                Violation("target-ref", f"{where}/target-{i}", f"selector {ref.selector!r} must be functional")
            )
    return tuple(out)


def validate_annotations(
    store: AnnotationStore, view: SignatureView, vocabulary=None
) -> ValidationReport:
    out: list[Violation] = []
    for ann in store.annotations.values():
        out.extend(validate_annotation(ann, view, vocabulary))
    return ValidationReport(tuple(out))
