"""Hosting layer: persistent store, HTTP API, live event stream, CLI."""

from .api import create_app
from .store import CrashError, FaultyFileSystem, FileSystem, Store, StoreError

__all__ = [
    "CrashError",
    "FaultyFileSystem",
    "FileSystem",
    "Store",
    "StoreError",
    "create_app",
]
