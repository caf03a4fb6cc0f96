"""HTTP face of the kernel.

JSON in, JSON out, one SSE stream for live updates. Construct payloads are
the wire mirror from json_codec, so a client can round-trip anything the
server holds. Writes honor writer sessions: claiming a workspace locks out
other writers with 409 until release. A configured token guards every route
except the health probe; the event stream also accepts it as a query
parameter since EventSource cannot set headers.
"""

from __future__ import annotations

import asyncio
import json
from datetime import datetime, timezone
from typing import Any, AsyncIterator, Optional

from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .. import __version__
from ..casmas import CasmasError, MembershipError, reaction_round, run_rounds
from ..core.operands import Constant, Operand
from ..core.values import ConstructionError
from ..dsl import LineError, parse_document, parse_operand_text, serialize
from ..dsl.bundle import PostStep, PropagateStep, ReplaceStep, RoundStep
from ..engine.registry import RegistryError
from ..flow import FlowError, propagate, replace_filter
from ..woad import WoadError, fill, style_firings
from .json_codec import (
    CodecError,
    attrs_from_json,
    attrs_to_json,
    bundle_from_json,
    bundle_to_json,
    operand_from_json,
    operand_to_json,
    step_to_json,
    value_from_json,
    value_to_json,
)
from .runtime import RuntimeHub
from .sessions import SessionBox, SessionConflict
from .store import Store, StoreError, assemble_document

_STORE_STATUS = {"not-found": 404, "invalid": 422, "io": 503, "history-divergence": 500}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class EventBroker:
    """Fan-out queue per subscriber; publishing never blocks the writer."""

    def __init__(self) -> None:
        self._subs: dict[int, asyncio.Queue] = {}
        self._next = 0
        self.seq = 0

    def publish(self, event: str, data: dict) -> None:
        self.seq += 1
        frame = (self.seq, event, data)
        for q in self._subs.values():
            q.put_nowait(frame)

    def subscribe(self) -> tuple[int, asyncio.Queue]:
        self._next += 1
        q: asyncio.Queue = asyncio.Queue()
        self._subs[self._next] = q
        return self._next, q

    def unsubscribe(self, sub_id: int) -> None:
        self._subs.pop(sub_id, None)


def _entry_json(op: Operand) -> dict:
    if isinstance(op, Constant):
        return value_to_json(op.value)
    return {"operand": operand_to_json(op)}


def _document_json(doc) -> dict:
    return {
        "id": doc.id,
        "template": doc.template.name,
        "didgets": [
            {"datom": d.datom, "at": {"x": d.coordinates.x, "y": d.coordinates.y}}
            for d in doc.template.didgets
        ],
        "fillable": list(doc.template.fillable(doc.datoms)),
        "mechanisms": [m.name for m in doc.mechanisms],
        "values": {k: _entry_json(v) for k, v in doc.values().items()},
        "styles": {k: _entry_json(v) for k, v in doc.styles().items()},
        "markers": {k: _entry_json(v) for k, v in doc.markers().items()},
        "history": [
            {
                "seq": ev.seq,
                "didget": ev.didget,
                "old": _entry_json(ev.old) if ev.old is not None else None,
                "new": _entry_json(ev.new) if ev.new is not None else None,
                "author": ev.author,
                "timestamp": ev.timestamp,
            }
            for ev in doc.history
        ],
    }


def _facts_json(world, community: str) -> list[dict]:
    return [
        {"name": name, "owner": fact.owner, "attrs": attrs_to_json(fact.attrs)}
        for name, fact in world.space(community)
    ]


def _flow_json(ws) -> dict:
    return {
        "name": ws.name,
        "views": {viewer: [attrs_to_json(r) for r in rows] for viewer, rows in ws.views.items()},
        "emissions": len(ws.emissions()),
        "capped": ws.capped,
    }


def create_app(store: Store, *, token: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="lob kernel", version=__version__)
    sessions = SessionBox()
    broker = EventBroker()
    hub = RuntimeHub(store)
    app.state.store = store
    app.state.sessions = sessions
    app.state.broker = broker
    app.state.hub = hub

    # -- cross-cutting ---------------------------------------------------------

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if token and request.url.path != "/api/health":
            supplied = request.headers.get("x-lob-token") or request.query_params.get("token")
            if supplied != token:
                return JSONResponse({"error": "unauthorized"}, status_code=401)
        return await call_next(request)

    @app.exception_handler(StoreError)
    async def store_error(_req, exc: StoreError):
        return JSONResponse(
            {"error": exc.code, "detail": str(exc)}, status_code=_STORE_STATUS.get(exc.code, 500)
        )

    @app.exception_handler(MembershipError)
    async def membership_error(_req, exc):
        return JSONResponse({"error": "membership", "detail": str(exc)}, status_code=403)

    for exc_type in (CodecError, CasmasError, FlowError, WoadError, RegistryError,
                     ConstructionError, LineError):

        @app.exception_handler(exc_type)
        async def domain_error(_req, exc, _t=exc_type):
            return JSONResponse({"error": "invalid", "detail": str(exc)}, status_code=422)

    def writer_gate(workspace: str, request: Request) -> None:
        sid = request.headers.get("x-lob-session")
        if not sessions.allows(workspace, sid):
            raise HTTPException(409, detail=f"workspace {workspace!r} is held by another session")

    # -- health and sessions -----------------------------------------------------

    @app.get("/api/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/sessions", status_code=201)
    async def open_session(body: dict = Body(...)):
        workspace = body.get("workspace", "")
        try:
            session = sessions.acquire(workspace)
        except SessionConflict as e:
            raise HTTPException(409, detail=str(e))
        return {"session": session.id, "workspace": workspace}

    @app.delete("/api/sessions/{session_id}")
    async def close_session(session_id: str):
        return {"released": sessions.release(session_id)}

    # -- workspaces ----------------------------------------------------------------

    @app.get("/api/workspaces")
    async def list_workspaces():
        return {"workspaces": list(store.workspace_names())}

    @app.get("/api/workspaces/{ws}")
    async def get_workspace(ws: str):
        text, _ = store.load_workspace(ws)
        return {"name": ws, "text": text, "documents": list(store.document_ids(ws))}

    @app.put("/api/workspaces/{ws}")
    async def put_workspace(ws: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        text = body.get("text", "")
        result = parse_document(text)
        if not result.ok:
            return JSONResponse(
                {"error": "invalid", "diagnostics": _diag_json(result.diagnostics)},
                status_code=422,
            )
        created = not store.has_workspace(ws)
        store.save_workspace(ws, text)
        hub.invalidate(ws)
        broker.publish("workspace", {"workspace": ws, "created": created})
        return {"name": ws, "created": created, "diagnostics": _diag_json(result.diagnostics)}

    @app.get("/api/workspaces/{ws}/bundle")
    async def get_bundle(ws: str):
        _, bundle = store.load_workspace(ws)
        return {"name": ws, "bundle": bundle_to_json(bundle)}

    @app.put("/api/workspaces/{ws}/bundle")
    async def put_bundle(ws: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        bundle = bundle_from_json(body.get("bundle"))
        text = serialize(bundle)
        created = not store.has_workspace(ws)
        store.save_workspace(ws, text)
        hub.invalidate(ws)
        broker.publish("workspace", {"workspace": ws, "created": created})
        return {"name": ws, "text": text, "created": created}

    @app.post("/api/validate")
    async def validate_text(body: dict = Body(...)):
        result = parse_document(body.get("text", ""))
        return {"ok": result.ok, "diagnostics": _diag_json(result.diagnostics)}

    @app.post("/api/fmt")
    async def fmt_text(body: dict = Body(...)):
        result = parse_document(body.get("text", ""))
        if not result.ok:
            return JSONResponse(
                {"error": "invalid", "diagnostics": _diag_json(result.diagnostics)},
                status_code=422,
            )
        return {"text": serialize(result.bundle)}

    # -- documents ---------------------------------------------------------------------

    @app.get("/api/workspaces/{ws}/documents")
    async def list_documents(ws: str):
        if not store.has_workspace(ws):
            raise StoreError("not-found", f"no workspace named {ws!r}")
        return {"documents": list(store.document_ids(ws))}

    @app.post("/api/workspaces/{ws}/documents", status_code=201)
    async def create_document(ws: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        _, bundle = store.load_workspace(ws)
        doc_id = body.get("id", "")
        controls = tuple(body.get("mechanisms", []))
        doc = assemble_document(bundle, doc_id, body.get("template", ""), controls)
        if doc_id in store.document_ids(ws):
            raise HTTPException(409, detail=f"document {doc_id!r} already exists")
        store.create_document(ws, doc, controls, created=body.get("timestamp") or _now())
        hub.set_document(ws, doc)
        broker.publish("document", {"workspace": ws, "id": doc.id, "action": "created"})
        return {"document": _document_json(doc)}

    @app.get("/api/workspaces/{ws}/documents/{doc_id}")
    async def get_document(ws: str, doc_id: str):
        return {"document": _document_json(hub.document(ws, doc_id))}

    @app.post("/api/workspaces/{ws}/documents/{doc_id}/fill")
    async def fill_document(ws: str, doc_id: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        doc = hub.document(ws, doc_id)
        value = value_from_json(_require(body, "value"))
        stamp = body.get("timestamp") or _now()
        doc, firings = fill(doc, _require(body, "didget"), value, body.get("author", ""), stamp)
        store.save_history(ws, doc)
        hub.set_document(ws, doc)
        styled = style_firings(firings)
        payload = {
            "workspace": ws,
            "id": doc.id,
            "didget": body["didget"],
            "values": {k: _entry_json(v) for k, v in doc.values().items()},
            "styles": {k: _entry_json(v) for k, v in doc.styles().items()},
            "firings": [fr.rule for fr in firings],
            "styleChanges": [fr.rule for fr in styled],
        }
        broker.publish("document", dict(payload, action="filled"))
        return {"document": _document_json(doc), "firings": [fr.rule for fr in firings]}

    # -- communities --------------------------------------------------------------------

    @app.get("/api/workspaces/{ws}/communities/{name}")
    async def get_community(ws: str, name: str):
        world = hub.world(ws)
        if name not in world.communities:
            raise StoreError("not-found", f"no community named {name!r}")
        return {
            "name": name,
            "members": list(world.communities[name].members),
            "facts": _facts_json(world, name),
        }

    @app.post("/api/workspaces/{ws}/communities/{name}/post")
    async def post_fact(ws: str, name: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        world = hub.world(ws).post(
            body.get("entity", ""), name, attrs_from_json(_require(body, "attrs"))
        )
        hub.set_world(ws, world)
        broker.publish("community", {"workspace": ws, "community": name, "action": "post"})
        return {"facts": _facts_json(world, name)}

    @app.post("/api/workspaces/{ws}/communities/{name}/rounds")
    async def react(ws: str, name: str, request: Request, body: dict = Body(default={})):
        writer_gate(ws, request)
        world = hub.world(ws)
        if body.get("mode") == "one":
            world, report = reaction_round(
                world, name, evaluation_order=body.get("evaluationOrder")
            )
            reports = (report,)
        else:
            world, reports = run_rounds(world, name, max_rounds=int(body.get("maxRounds", 10)))
        hub.set_world(ws, world)
        broker.publish("community", {"workspace": ws, "community": name, "action": "round"})
        return {
            "rounds": len(reports),
            "fired": [list(r.fired()) for r in reports],
            "facts": _facts_json(world, name),
        }

    # -- dataflows -----------------------------------------------------------------------

    @app.get("/api/workspaces/{ws}/flows/{name}")
    async def get_flow(ws: str, name: str):
        return {"flow": _flow_json(hub.flow(ws, name))}

    @app.post("/api/workspaces/{ws}/flows/{name}/propagate")
    async def run_flow(ws: str, name: str, request: Request):
        writer_gate(ws, request)
        flow_ws = propagate(hub.flow(ws, name), hub.registry(ws))
        hub.set_flow(ws, name, flow_ws)
        broker.publish("flow", {"workspace": ws, "flow": name, "action": "propagate"})
        return {"flow": _flow_json(flow_ws)}

    @app.post("/api/workspaces/{ws}/flows/{name}/filter")
    async def swap_filter(ws: str, name: str, request: Request, body: dict = Body(...)):
        writer_gate(ws, request)
        if "keepText" in body:
            predicate = parse_operand_text(body["keepText"])
        else:
            predicate = operand_from_json(_require(body, "keep"))
        flow_ws = replace_filter(
            hub.flow(ws, name), _require(body, "filter"), predicate, hub.registry(ws)
        )
        hub.set_flow(ws, name, flow_ws)
        broker.publish("flow", {"workspace": ws, "flow": name, "action": "replace"})
        return {"flow": _flow_json(flow_ws)}

    # -- scenario -------------------------------------------------------------------------

    @app.post("/api/workspaces/{ws}/scenario")
    async def run_scenario(ws: str, request: Request):
        writer_gate(ws, request)
        _, bundle = store.load_workspace(ws)
        outcomes = []
        for step in bundle.scenario:
            entry: dict[str, Any] = {"step": step_to_json(step)}
            if isinstance(step, PostStep):
                world = hub.world(ws).post(step.entity, step.community, step.attrs)
                hub.set_world(ws, world)
                entry["facts"] = len(world.space(step.community))
            elif isinstance(step, RoundStep):
                world, report = reaction_round(hub.world(ws), step.community)
                hub.set_world(ws, world)
                entry["fired"] = list(report.fired())
            elif isinstance(step, PropagateStep):
                flow_ws = propagate(hub.flow(ws, step.workspace), hub.registry(ws))
                hub.set_flow(ws, step.workspace, flow_ws)
                entry["views"] = _flow_json(flow_ws)["views"]
            elif isinstance(step, ReplaceStep):
                flow_ws = replace_filter(
                    hub.flow(ws, step.workspace), step.filter_id, step.predicate, hub.registry(ws)
                )
                hub.set_flow(ws, step.workspace, flow_ws)
                entry["views"] = _flow_json(flow_ws)["views"]
            outcomes.append(entry)
        broker.publish("scenario", {"workspace": ws, "steps": len(outcomes)})
        return {"steps": outcomes}

    # -- events ---------------------------------------------------------------------------

    @app.get("/api/events")
    async def events(request: Request, workspace: Optional[str] = None):
        async def stream() -> AsyncIterator[str]:
            sub_id, queue = broker.subscribe()
            try:
                yield ": connected\n\n"
                while True:
                    if await request.is_disconnected():
                        return
                    try:
                        seq, event, data = await asyncio.wait_for(queue.get(), timeout=5.0)
                    except asyncio.TimeoutError:
                        yield ": keep-alive\n\n"
                        continue
                    if workspace and data.get("workspace") != workspace:
                        continue
                    body = json.dumps(data, separators=(",", ":"))
                    yield f"id: {seq}\nevent: {event}\ndata: {body}\n\n"
            finally:
                broker.unsubscribe(sub_id)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"cache-control": "no-cache", "x-accel-buffering": "no"},
        )

    return app


def _require(body: dict, key: str) -> Any:
    if key not in body:
        raise HTTPException(422, detail=f"missing field {key!r}")
    return body[key]


def _diag_json(diags) -> list[dict]:
    return [
        {
            "severity": d.severity,
            "production": d.production,
            "message": d.message,
            "line": d.line,
            "column": d.column,
        }
        for d in diags
    ]
