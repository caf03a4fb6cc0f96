"""Durable storage for workspaces, documents, and traces.

Everything on disk is a whole file replaced atomically: write a hidden temp
file, fsync it, rename over the target, fsync the directory. A crash at any
point leaves either the old content or the new content, never a torn file;
stray temp files are swept on open. The filesystem calls go through a seam so
tests can kill the process mid-write and check that reloads stay clean.

Layout under the store root:

    workspaces/<name>/definitions.lob
    workspaces/<name>/documents/<id>.meta.json
    workspaces/<name>/documents/<id>.history.tsv
    workspaces/<name>/traces/<stream>.tsv

A document is reloaded by replaying its user fills through the mechanism
engine, which regenerates derived values, styles, and refraction memory
without trusting anything but the history file. The recorded mechanism rows
are then cross-checked against the replay.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..core.operands import Application, Constant, Operand, Variable
from ..core.values import ConstructionError, Coordinates, is_identifier
from ..dsl import LineError, parse_document, parse_operand_text, render_operand
from ..dsl.bundle import Bundle
from ..woad import (
    Datom,
    DatomRegistry,
    Didget,
    Document,
    FillEvent,
    Template,
    WoadError,
    fill,
    new_document,
    replay_history,
    woad_registry,
)

_TMP_RE = re.compile(r"^\..*\.tmp$")


class StoreError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class CrashError(RuntimeError):
    """Raised by a fault-injecting filesystem to simulate a hard kill."""


class FileSystem:
    """The mutations the store performs, in the order durability needs them."""

    def write_bytes(self, path: Path, data: bytes) -> None:
        with open(path, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())

    def replace(self, src: Path, dst: Path) -> None:
        os.replace(src, dst)

    def fsync_dir(self, path: Path) -> None:
        fd = os.open(path, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)


class FaultyFileSystem(FileSystem):
    """Counts mutating calls and crashes on the chosen one. A crash during
    write_bytes leaves a torn temp file behind, like a real power cut."""

    def __init__(self, crash_at: int):
        self.crash_at = crash_at
        self.ops = 0

    def _tick(self) -> None:
        self.ops += 1
        if self.ops == self.crash_at:
            raise CrashError(f"simulated crash at op {self.ops}")

    def write_bytes(self, path: Path, data: bytes) -> None:
        self.ops += 1
        if self.ops == self.crash_at:
            with open(path, "wb") as f:
                f.write(data[: max(0, len(data) // 2)])
            raise CrashError(f"simulated crash mid-write at op {self.ops}")
        super().write_bytes(path, data)

    def replace(self, src: Path, dst: Path) -> None:
        self._tick()
        super().replace(src, dst)

    def fsync_dir(self, path: Path) -> None:
        self._tick()
        super().fsync_dir(path)


def atomic_write(path: Path, data: bytes, fs: FileSystem) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.tmp"
    fs.write_bytes(tmp, data)
    fs.replace(tmp, path)
    fs.fsync_dir(path.parent)


# -- TSV records ---------------------------------------------------------------------

# Serialized operands escape tabs and newlines inside text literals, so the
# only fields that could break the row shape are author and timestamp.
_FIELD_BAD = re.compile(r"[\t\n\r]")


def _field(text: str) -> str:
    return _FIELD_BAD.sub(" ", text)


def _render_opt(op: Optional[Operand]) -> str:
    return render_operand(op) if op is not None else "-"


def _parse_opt(text: str) -> Optional[Operand]:
    if text == "-":
        return None
    try:
        return parse_operand_text(text)
    except (LineError, ConstructionError) as e:
        raise StoreError("invalid", f"bad operand in record: {e}")


def history_to_tsv(events: tuple[FillEvent, ...]) -> str:
    rows = []
    for ev in events:
        rows.append(
            "\t".join(
                (
                    str(ev.seq),
                    ev.didget,
                    _render_opt(ev.old),
                    _render_opt(ev.new),
                    _field(ev.author),
                    _field(ev.timestamp),
                )
            )
        )
    return "\n".join(rows) + ("\n" if rows else "")


def history_from_tsv(text: str) -> tuple[FillEvent, ...]:
    events = []
    for i, row in enumerate(text.splitlines(), start=1):
        if not row.strip():
            continue
        parts = row.split("\t")
        if len(parts) != 6:
            raise StoreError("invalid", f"history row {i} has {len(parts)} fields, wanted 6")
        seq, didget, old, new, author, ts = parts
        try:
            events.append(
                FillEvent(int(seq), didget, _parse_opt(old), _parse_opt(new), author, ts)
            )
        except ValueError as e:
            raise StoreError("invalid", f"history row {i}: {e}")
    return tuple(events)


# -- document assembly ----------------------------------------------------------------


def datoms_for_layout(bundle: Bundle, layout_name: str) -> tuple[DatomRegistry, Template]:
    """Turn a web layout into a template: placed variables become atomic
    datoms and didgets; objects matching a named record operand become a
    composite datom placed once. Constants are labels and stay behind."""
    layout = None
    for nw in bundle.webs:
        for l in nw.web.layouts:
            if l.name == layout_name:
                layout = l
                break
    if layout is None:
        raise StoreError("not-found", f"no layout named {layout_name!r}")

    composites = {no.name: no.operand for no in bundle.operands}
    registry = DatomRegistry()
    didgets: list[Didget] = []
    for i, obj in enumerate(layout.objects):
        coords = obj.coordinates or Coordinates(0.0, 24.0 * i)
        op = obj.operand
        if isinstance(op, Variable):
            if op.var.kind is None or op.var.group:
                raise StoreError("invalid", f"didget {op.var.name!r} needs a scalar kind")
            if registry.get(op.var.name) is None:
                registry = registry.add(Datom(op.var.name, op.var.kind))
            didgets.append(Didget(op.var.name, coords))
            continue
        if isinstance(op, Application):
            name = next((n for n, body in composites.items() if body == op), None)
            if name is None:
                continue  # a computed display, not a fillable spot
            children = []
            for part in op.args:
                if not isinstance(part, Variable) or part.var.kind is None:
                    raise StoreError(
                        "invalid", f"composite {name!r} must aggregate typed variables"
                    )
                if registry.get(part.var.name) is None:
                    registry = registry.add(Datom(part.var.name, part.var.kind))
                children.append(part.var.name)
            if registry.get(name) is None:
                registry = registry.add(Datom(name, None, tuple(children)))
            didgets.append(Didget(name, coords))
    if not didgets:
        raise StoreError("invalid", f"layout {layout_name!r} places no fillable didgets")
    return registry, Template(layout_name, tuple(didgets))


def mechanisms_from_bundle(bundle: Bundle, names: tuple[str, ...]):
    from ..core.rules import iter_rules

    by_name = {c.name: c.control for c in bundle.controls}
    rules = []
    for name in names:
        if name not in by_name:
            raise StoreError("not-found", f"no control named {name!r}")
        rules.extend(iter_rules(by_name[name]))
    return tuple(rules)


def assemble_document(
    bundle: Bundle,
    doc_id: str,
    template_name: str,
    mechanism_names: tuple[str, ...] = (),
) -> Document:
    datoms, template = datoms_for_layout(bundle, template_name)
    registry = woad_registry(datoms)
    for op in bundle.operators:
        registry = registry.register(op)
    mechanisms = mechanisms_from_bundle(bundle, mechanism_names)
    try:
        return new_document(doc_id, template, datoms, registry, mechanisms)
    except WoadError as e:
        raise StoreError("invalid", str(e))


# -- the store -------------------------------------------------------------------------


@dataclass(frozen=True)
class DocumentMeta:
    id: str
    template: str
    mechanisms: tuple[str, ...]
    created: str


class Store:
    def __init__(self, root: Path | str, fs: Optional[FileSystem] = None):
        self.root = Path(root)
        self.fs = fs if fs is not None else FileSystem()
        self.root.mkdir(parents=True, exist_ok=True)
        self._sweep_temp()

    def _sweep_temp(self) -> None:
        for p in self.root.rglob(".*.tmp"):
            if _TMP_RE.match(p.name):
                p.unlink(missing_ok=True)

    # -- paths --

    def _ws_dir(self, name: str) -> Path:
        if not is_identifier(name):
            raise StoreError("invalid", f"workspace name {name!r} is not an identifier")
        return self.root / "workspaces" / name

    def _defs_path(self, name: str) -> Path:
        return self._ws_dir(name) / "definitions.lob"

    def _doc_dir(self, ws: str) -> Path:
        return self._ws_dir(ws) / "documents"

    # -- workspaces --

    def workspace_names(self) -> tuple[str, ...]:
        base = self.root / "workspaces"
        if not base.is_dir():
            return ()
        return tuple(sorted(p.name for p in base.iterdir() if (p / "definitions.lob").is_file()))

    def has_workspace(self, name: str) -> bool:
        return self._defs_path(name).is_file()

    def save_workspace(self, name: str, text: str) -> Bundle:
        result = parse_document(text)
        if not result.ok:
            raise StoreError(
                "invalid",
                "; ".join(f"line {d.line}: {d.message}" for d in result.diagnostics),
            )
        try:
            atomic_write(self._defs_path(name), text.encode("utf-8"), self.fs)
        except OSError as e:
            raise StoreError("io", str(e))
        return result.bundle

    def load_workspace(self, name: str) -> tuple[str, Bundle]:
        path = self._defs_path(name)
        if not path.is_file():
            raise StoreError("not-found", f"no workspace named {name!r}")
        try:
            text = path.read_text("utf-8")
        except OSError as e:
            raise StoreError("io", str(e))
        result = parse_document(text)
        if not result.ok:
            raise StoreError("invalid", f"stored workspace {name!r} no longer parses")
        return text, result.bundle

    # -- documents --

    def document_ids(self, ws: str) -> tuple[str, ...]:
        base = self._doc_dir(ws)
        if not base.is_dir():
            return ()
        return tuple(sorted(p.name[: -len(".meta.json")] for p in base.glob("*.meta.json")))

    def create_document(
        self, ws: str, doc: Document, controls: tuple[str, ...], created: str = ""
    ) -> None:
        """Meta is written once and never changes; ``controls`` names the
        bundle controls the document was assembled from. History lands before
        meta so the meta file is the commit point: a document is only listed
        once both files exist."""
        if not self.has_workspace(ws):
            raise StoreError("not-found", f"no workspace named {ws!r}")
        meta = {
            "id": doc.id,
            "template": doc.template.name,
            "mechanisms": list(controls),
            "created": created,
        }
        self.save_history(ws, doc)
        try:
            atomic_write(
                self._doc_dir(ws) / f"{doc.id}.meta.json",
                (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8"),
                self.fs,
            )
        except OSError as e:
            raise StoreError("io", str(e))

    def save_history(self, ws: str, doc: Document) -> None:
        try:
            atomic_write(
                self._doc_dir(ws) / f"{doc.id}.history.tsv",
                history_to_tsv(doc.history).encode("utf-8"),
                self.fs,
            )
        except OSError as e:
            raise StoreError("io", str(e))

    def load_document_meta(self, ws: str, doc_id: str) -> DocumentMeta:
        path = self._doc_dir(ws) / f"{doc_id}.meta.json"
        if not path.is_file():
            raise StoreError("not-found", f"no document {doc_id!r} in {ws!r}")
        try:
            data = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise StoreError("invalid", f"document meta unreadable: {e}")
        return DocumentMeta(
            data["id"], data["template"], tuple(data.get("mechanisms", ())), data.get("created", "")
        )

    def load_document(self, ws: str, doc_id: str) -> Document:
        """Rebuild by replaying the user fills; mechanisms regenerate the
        rest. The stored mechanism rows must agree with the replay."""
        meta = self.load_document_meta(ws, doc_id)
        _, bundle = self.load_workspace(ws)
        doc = assemble_document(bundle, meta.id, meta.template, meta.mechanisms)

        path = self._doc_dir(ws) / f"{doc_id}.history.tsv"
        recorded = history_from_tsv(path.read_text("utf-8")) if path.is_file() else ()
        for ev in recorded:
            if ev.author.startswith("mechanism:"):
                continue
            if ev.new is None or not isinstance(ev.new, Constant):
                raise StoreError("invalid", f"user fill of {ev.didget!r} must be a constant")
            try:
                doc, _ = fill(doc, ev.didget, ev.new.value, ev.author, ev.timestamp)
            except WoadError as e:
                raise StoreError("history-divergence", f"replaying {ev.didget!r}: {e}")

        want: dict[str, Optional[Operand]] = {}
        for ev in recorded:
            want[ev.didget] = ev.new
        got = replay_history(doc)
        for name, op in want.items():
            if op is None:
                if name in got:
                    raise StoreError("history-divergence", f"{name!r} should be empty")
            elif got.get(name) != op:
                raise StoreError("history-divergence", f"{name!r} replays differently")
        return doc

    # -- traces --

    def append_trace(self, ws: str, stream: str, rows: list[list[str]]) -> None:
        if not is_identifier(stream):
            raise StoreError("invalid", f"trace stream {stream!r} is not an identifier")
        path = self._ws_dir(ws) / "traces" / f"{stream}.tsv"
        old = path.read_text("utf-8") if path.is_file() else ""
        body = old + "".join("\t".join(_field(c) for c in row) + "\n" for row in rows)
        try:
            atomic_write(path, body.encode("utf-8"), self.fs)
        except OSError as e:
            raise StoreError("io", str(e))

    def read_trace(self, ws: str, stream: str) -> tuple[tuple[str, ...], ...]:
        path = self._ws_dir(ws) / "traces" / f"{stream}.tsv"
        if not path.is_file():
            return ()
        return tuple(
            tuple(row.split("\t")) for row in path.read_text("utf-8").splitlines() if row
        )
