"""Append-only NDJSON event journal with periodic snapshots.

The journal is the source of truth; the snapshot only caches a fold
prefix so restarts don't replay from the beginning. Loading applies
the snapshot (if any) and replays the journal tail. A torn final
line, as left by a crash mid-write, is ignored.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterator, Optional

from avmask.manager.model import ManagerState

SNAPSHOT_EVERY = 500


class Journal:
    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.data_dir / "journal.ndjson"
        self.snapshot_path = self.data_dir / "snapshot.json"
        self._handle = open(self.journal_path, "a", encoding="utf-8")
        self._events_since_snapshot = 0

    def close(self) -> None:
        self._handle.close()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        self._handle.write(line + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())
        self._events_since_snapshot += 1

    def maybe_snapshot(self, state: ManagerState) -> None:
        if self._events_since_snapshot < SNAPSHOT_EVERY:
            return
        self.write_snapshot(state)

    def write_snapshot(self, state: ManagerState) -> None:
        position = self._handle.tell()
        doc = {"state": state.state_dict(), "journal_position": position}
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        tmp.replace(self.snapshot_path)
        self._events_since_snapshot = 0

    def load(self) -> ManagerState:
        state = ManagerState()
        offset = 0
        if self.snapshot_path.exists():
            doc = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            state = ManagerState.from_dict(doc["state"])
            offset = int(doc["journal_position"])
        for event in self._read_events(offset):
            state.apply(event)
        return state

    def replay(self) -> ManagerState:
        """Fold the full journal from scratch, ignoring the snapshot."""
        state = ManagerState()
        for event in self._read_events(0):
            state.apply(event)
        return state

    def _read_events(self, offset: int) -> Iterator[dict]:
        if not self.journal_path.exists():
            return
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            fh.seek(offset)
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    # torn tail from a crash mid-append
                    return
