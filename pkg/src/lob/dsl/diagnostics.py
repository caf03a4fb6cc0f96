"""Parse and validation diagnostics.

The parser is total: malformed input yields diagnostics, never exceptions.
Every diagnostic names the grammar construct whose rules the input breaks.
"""

from __future__ import annotations

from dataclasses import dataclass

#: the grammar's construct vocabulary, in declaration order
PRODUCTIONS = (
    "web-structure",
    "layout-structure",
    "topological-object",
    "operand-construct",
    "operator-construct",
    "annotation",
    "target-ref",
    "constant",
    "target",
    "style",
    "control-structure",
    "connector",
    "rewriting-rule",
    "condition",
    "action",
    "state",
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    production: str  # entry of PRODUCTIONS, or "document" for file-level faults
    message: str
    line: int  # 1-based; 0 when no location applies
    column: int = 0

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}" if self.line else "-"
        return f"{where} {self.severity} [{self.production}] {self.message}"


def error(production: str, message: str, line: int = 0, column: int = 0) -> Diagnostic:
    return Diagnostic("error", production, message, line, column)


def warning(production: str, message: str, line: int = 0, column: int = 0) -> Diagnostic:
    return Diagnostic("warning", production, message, line, column)
