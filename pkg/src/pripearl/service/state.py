"""Mutable service-side state: the published store and the ingest lock."""

from __future__ import annotations

import os
import threading
import time

from ..config import ServiceSettings
from ..store import Store
from ..timegrid import parse_instant


class ServiceState:
    """Holds the live store reference.

    Queries read ``store`` without locking; admin operations build a new
    store off to the side and publish it with a single reference swap, so
    in-flight queries keep a consistent view.
    """

    def __init__(self, settings: ServiceSettings) -> None:
        self.settings = settings
        self.hierarchy = settings.hierarchy()
        self.params = settings.privacy_params()
        self.budget = settings.budget
        self.ingest_lock = threading.Lock()
        self.store: Store | None = self._initial_store()

    def fresh_store(self) -> Store:
        store = Store(self.hierarchy, self.settings.stat_types)
        if self.settings.entities_path:
            store.load_forest_file(self.settings.entities_path)
        return store

    def _initial_store(self) -> Store | None:
        path = self.settings.snapshot_path
        if path:
            if os.path.exists(path):
                return Store.snapshot_load(path, self.hierarchy, self.settings.stat_types)
            # Configured snapshot is absent: serve 503 until an admin
            # publishes data rather than silently starting empty.
            return None
        return self.fresh_store()

    def now(self, header_value: str | None) -> int:
        """Server time in UTC seconds, with test-mode injection points."""
        if self.settings.allow_clock_header and header_value:
            return parse_instant(header_value)
        if self.settings.fixed_now is not None:
            return self.settings.fixed_now
        return int(time.time())
