"""Session persistence: one directory per session holding an append-only
NDJSON event log, a session snapshot, and recorded feedback.

Replaying the event file after a restart reproduces the identical ordered
event list; live consumers tail the log through an in-process condition
variable.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

TERMINAL_KINDS = {"metrics_ready", "error"}


class UnknownSession(KeyError):
    pass


@dataclass(frozen=True)
class SessionEvent:
    sequence_no: int
    kind: str
    payload: dict
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "sequence_no": self.sequence_no,
            "kind": self.kind,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEvent":
        return cls(
            sequence_no=data["sequence_no"],
            kind=data["kind"],
            payload=data["payload"],
            timestamp=data["timestamp"],
        )


class SessionStore:
    """File-backed store; writes are serialized per session."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._conditions: dict[str, threading.Condition] = {}
        self._next_seq: dict[str, int] = {}

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _cond(self, session_id: str) -> threading.Condition:
        with self._lock:
            return self._conditions.setdefault(session_id, threading.Condition())

    def create_session(self, meta: dict, session_id: Optional[str] = None) -> str:
        session_id = session_id or uuid.uuid4().hex[:12]
        d = self._dir(session_id)
        d.mkdir(parents=True, exist_ok=False)
        (d / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        (d / "events.ndjson").touch()
        self._next_seq[session_id] = 0
        return session_id

    def exists(self, session_id: str) -> bool:
        return self._dir(session_id).is_dir()

    def _require(self, session_id: str) -> Path:
        d = self._dir(session_id)
        if not d.is_dir():
            raise UnknownSession(session_id)
        return d

    def meta(self, session_id: str) -> dict:
        d = self._require(session_id)
        return json.loads((d / "meta.json").read_text(encoding="utf-8"))

    def append_event(self, session_id: str, kind: str, payload: dict) -> SessionEvent:
        d = self._require(session_id)
        cond = self._cond(session_id)
        with cond:
            seq = self._next_seq.get(session_id)
            if seq is None:
                seq = len(self.events(session_id))
            event = SessionEvent(
                sequence_no=seq, kind=kind, payload=payload, timestamp=time.time()
            )
            with (d / "events.ndjson").open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict()) + "\n")
            self._next_seq[session_id] = seq + 1
            cond.notify_all()
        return event

    def events(self, session_id: str, from_sequence: int = 0) -> list[SessionEvent]:
        d = self._require(session_id)
        out = []
        with (d / "events.ndjson").open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = SessionEvent.from_dict(json.loads(line))
                if event.sequence_no >= from_sequence:
                    out.append(event)
        return out

    def is_terminal(self, session_id: str) -> bool:
        events = self.events(session_id)
        return bool(events) and events[-1].kind in TERMINAL_KINDS

    def follow(
        self, session_id: str, from_sequence: int = 0, poll_timeout: float = 0.2
    ) -> Iterator[SessionEvent]:
        """Replay persisted events >= from_sequence, then live-tail until a
        terminal event. If the log already ended, at least the terminal event
        is always replayed so clients resuming past the end see closure."""
        self._require(session_id)
        existing = self.events(session_id)
        terminal_seen = False
        emitted_any = False
        next_seq = from_sequence
        for event in existing:
            if event.sequence_no >= from_sequence:
                yield event
                emitted_any = True
                next_seq = event.sequence_no + 1
                if event.kind in TERMINAL_KINDS:
                    terminal_seen = True
        if existing and existing[-1].kind in TERMINAL_KINDS:
            if not emitted_any:
                yield existing[-1]
            return
        if terminal_seen:
            return
        cond = self._cond(session_id)
        while True:
            fresh = [e for e in self.events(session_id) if e.sequence_no >= next_seq]
            for event in fresh:
                yield event
                next_seq = event.sequence_no + 1
                if event.kind in TERMINAL_KINDS:
                    return
            with cond:
                cond.wait(timeout=poll_timeout)

    # -- snapshots ----------------------------------------------------------

    def save_snapshot(self, session_id: str, snapshot: dict) -> None:
        d = self._require(session_id)
        (d / "session.json").write_text(
            json.dumps(snapshot, indent=2), encoding="utf-8"
        )

    def load_snapshot(self, session_id: str) -> Optional[dict]:
        d = self._require(session_id)
        path = d / "session.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    # -- feedback -----------------------------------------------------------

    def append_feedback(self, session_id: str, entry: dict) -> str:
        d = self._require(session_id)
        entry_id = uuid.uuid4().hex[:8]
        with (d / "feedback.ndjson").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"id": entry_id, **entry}) + "\n")
        return entry_id

    def feedback(self, session_id: str) -> list[dict]:
        d = self._require(session_id)
        path = d / "feedback.ndjson"
        if not path.exists():
            return []
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def session_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())
