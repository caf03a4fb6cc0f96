"""Live runtime objects behind the API: worlds, dataflows, open documents.

Documents persist through the store; worlds and flows are views over the
workspace definitions and live for the process. Saving a workspace drops its
cached runtime so the next request rebuilds from the new definitions.
"""

from __future__ import annotations

from typing import Optional

from ..casmas import World, casmas_registry, world_from_bundle
from ..dsl.bundle import Bundle, WorkspaceDecl
from ..engine.registry import ConstructRegistry
from ..flow import Workspace, compose_workspace, flow_registry
from ..woad import DatomRegistry, Document, woad_registry
from .store import Store, StoreError


def base_registry() -> ConstructRegistry:
    """Every built-in and profile verb, for running plain bundles."""
    reg = ConstructRegistry.seed()
    reg = woad_registry(DatomRegistry(), base=reg)
    reg = casmas_registry(base=reg)
    return flow_registry(base=reg)


def bundle_registry(bundle: Bundle, base: Optional[ConstructRegistry] = None) -> ConstructRegistry:
    reg = base if base is not None else base_registry()
    for op in bundle.operators:
        reg = reg.register(op)
    return reg


class RuntimeHub:
    def __init__(self, store: Store):
        self.store = store
        self._worlds: dict[str, World] = {}
        self._flows: dict[tuple[str, str], Workspace] = {}
        self._registries: dict[str, ConstructRegistry] = {}
        self._documents: dict[tuple[str, str], Document] = {}

    def invalidate(self, ws: str) -> None:
        self._worlds.pop(ws, None)
        self._registries.pop(ws, None)
        for key in [k for k in self._flows if k[0] == ws]:
            del self._flows[key]
        for key in [k for k in self._documents if k[0] == ws]:
            del self._documents[key]

    def bundle(self, ws: str) -> Bundle:
        return self.store.load_workspace(ws)[1]

    def registry(self, ws: str) -> ConstructRegistry:
        if ws not in self._registries:
            self._registries[ws] = bundle_registry(self.bundle(ws))
        return self._registries[ws]

    def world(self, ws: str) -> World:
        if ws not in self._worlds:
            self._worlds[ws] = world_from_bundle(self.bundle(ws))
        return self._worlds[ws]

    def set_world(self, ws: str, world: World) -> None:
        self._worlds[ws] = world

    def flow(self, ws: str, name: str) -> Workspace:
        key = (ws, name)
        if key not in self._flows:
            decl = self._flow_decl(ws, name)
            self._flows[key] = compose_workspace(decl)
        return self._flows[key]

    def _flow_decl(self, ws: str, name: str) -> WorkspaceDecl:
        for decl in self.bundle(ws).workspaces:
            if decl.name == name:
                return decl
        raise StoreError("not-found", f"no dataflow workspace named {name!r}")

    def set_flow(self, ws: str, name: str, flow: Workspace) -> None:
        self._flows[(ws, name)] = flow

    def document(self, ws: str, doc_id: str) -> Document:
        key = (ws, doc_id)
        if key not in self._documents:
            self._documents[key] = self.store.load_document(ws, doc_id)
        return self._documents[key]

    def set_document(self, ws: str, doc: Document) -> None:
        self._documents[(ws, doc.id)] = doc
