"""Writer sessions: one editor holds a workspace at a time.

Claiming a free workspace hands out a session id; writes to a claimed
workspace must carry that id, and a second claim is refused until release.
Unclaimed workspaces stay open for writes so single-user setups need no
ceremony. Sessions live in process memory only; a restart releases them all.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass


@dataclass(frozen=True)
class Session:
    id: str
    workspace: str


class SessionConflict(Exception):
    def __init__(self, workspace: str, holder: str):
        super().__init__(f"workspace {workspace!r} is held by another session")
        self.workspace = workspace
        self.holder = holder


class SessionBox:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._by_workspace: dict[str, Session] = {}

    def acquire(self, workspace: str) -> Session:
        with self._lock:
            held = self._by_workspace.get(workspace)
            if held is not None:
                raise SessionConflict(workspace, held.id)
            session = Session(uuid.uuid4().hex, workspace)
            self._by_workspace[workspace] = session
            return session

    def release(self, session_id: str) -> bool:
        with self._lock:
            for ws, s in list(self._by_workspace.items()):
                if s.id == session_id:
                    del self._by_workspace[ws]
                    return True
            return False

    def holder(self, workspace: str) -> str | None:
        with self._lock:
            s = self._by_workspace.get(workspace)
            return s.id if s else None

    def allows(self, workspace: str, session_id: str | None) -> bool:
        """Writes are open unless someone holds the workspace."""
        with self._lock:
            s = self._by_workspace.get(workspace)
            return s is None or s.id == session_id
