"""Append-only JSON-lines event store, one file per session.

Appends are guarded by a compare-and-append check on the last sequence
number, so two writers racing on one session cannot both succeed.  Events are
never rewritten; a session's state is whatever folding its log produces.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


class ConflictError(RuntimeError):
    """The log tail moved (or the session ended) between read and append."""


class IntegrityError(RuntimeError):
    """A stored log is malformed; the message names the sequence number."""


@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    seq: int
    kind: str  # created | cohort-recorded | finalized
    payload: dict
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "session_id": self.session_id,
                "seq": self.seq,
                "kind": self.kind,
                "payload": self.payload,
                "timestamp": self.timestamp,
            },
            separators=(",", ":"),
            sort_keys=True,
        )


def _event_from_line(line: str, lineno: int) -> SessionEvent:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"corrupt event at line {lineno}: {exc.msg}") from exc
    missing = {"session_id", "seq", "kind", "payload", "timestamp"} - set(raw)
    if missing:
        raise IntegrityError(f"event at line {lineno} missing fields {sorted(missing)}")
    return SessionEvent(
        session_id=raw["session_id"],
        seq=raw["seq"],
        kind=raw["kind"],
        payload=raw["payload"],
        timestamp=raw["timestamp"],
    )


class EventStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._tails: dict[str, int] = {}
        for path in self.root.glob("*.jsonl"):
            events = self._read_file(path)
            if events:
                self._tails[events[0].session_id] = events[-1].seq

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _read_file(self, path: Path) -> list[SessionEvent]:
        events = []
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    events.append(_event_from_line(line, lineno))
        return events

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._tails)

    def last_seq(self, session_id: str) -> int:
        with self._lock:
            if session_id not in self._tails:
                raise KeyError(session_id)
            return self._tails[session_id]

    def append(
        self, session_id: str, events: Iterable[SessionEvent], expected_last_seq: int
    ) -> None:
        """Atomically append ``events`` iff the log tail is still at
        ``expected_last_seq`` (0 for a new session)."""
        events = list(events)
        if not events:
            return
        with self._lock:
            current = self._tails.get(session_id, 0)
            if current != expected_last_seq:
                raise ConflictError(
                    f"session {session_id}: expected tail seq {expected_last_seq}, found {current}"
                )
            seq = current
            for event in events:
                seq += 1
                if event.seq != seq:
                    raise IntegrityError(
                        f"attempted append of seq {event.seq} after {seq - 1}"
                    )
            with self._path(session_id).open("a") as fh:
                for event in events:
                    fh.write(event.to_json() + "\n")
            self._tails[session_id] = seq

    def read(self, session_id: str) -> list[SessionEvent]:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        events = self._read_file(path)
        verify_dense(events)
        return events

    def digest(self) -> str:
        """Content hash over every log file; unchanged iff storage untouched."""
        h = hashlib.sha256()
        for path in sorted(self.root.glob("*.jsonl")):
            h.update(path.name.encode())
            h.update(path.read_bytes())
        return h.hexdigest()


def verify_dense(events: list[SessionEvent]) -> None:
    """Sequence numbers must run 1, 2, 3, ... with no gaps."""
    for i, event in enumerate(events, start=1):
        if event.seq != i:
            raise IntegrityError(f"sequence gap: expected seq {i}, found {event.seq}")
