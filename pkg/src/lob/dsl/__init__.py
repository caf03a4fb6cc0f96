"""Textual bundle form: parser, canonical serializer, diagnostics."""

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
from .diagnostics import Diagnostic, PRODUCTIONS, error, warning
from .parser import LineError, ParseResult, parse_bytes, parse_document, parse_operand_text
from .serializer import SerializeError, render_operand, render_value, serialize

__all__ = [
    "ArcDecl",
    "AttrSet",
    "Bundle",
    "CommunityDecl",
    "ComponentDecl",
    "Diagnostic",
    "EntityDecl",
    "FactDecl",
    "LineError",
    "NamedControl",
    "NamedOperand",
    "NamedWeb",
    "PRODUCTIONS",
    "ParseResult",
    "PostStep",
    "PropagateStep",
    "ReplaceStep",
    "RoundStep",
    "ScenarioStep",
    "SerializeError",
    "WorkspaceDecl",
    "error",
    "parse_bytes",
    "parse_document",
    "parse_operand_text",
    "render_operand",
    "render_value",
    "serialize",
    "signature_view",
    "warning",
]
