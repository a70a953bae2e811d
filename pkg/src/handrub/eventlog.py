"""JSON-lines event/feedback log IO.

One object per line: {"t_ms": int, "event": str, "args": object}.  Encoding
is canonical (fixed key order, compact separators) so replays compare byte
for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .session import FeedbackEvent, SessionEvent


def record_line(rec: dict) -> str:
    ordered = {"t_ms": rec["t_ms"], "event": rec["event"], "args": rec.get("args", {})}
    return json.dumps(ordered, separators=(",", ":"))


def dump_records(records: Iterable[dict]) -> str:
    return "".join(record_line(r) + "\n" for r in records)


def load_records(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def write_events(path: str | Path, events: Iterable[SessionEvent]) -> None:
    Path(path).write_text(dump_records(e.to_record() for e in events))


def read_events(path: str | Path) -> list[SessionEvent]:
    return [SessionEvent.from_record(r) for r in load_records(Path(path).read_text())]


def write_feedback(path: str | Path, feedback: Iterable[FeedbackEvent]) -> None:
    Path(path).write_text(feedback_text(feedback))


def feedback_text(feedback: Iterable[FeedbackEvent]) -> str:
    return dump_records(f.to_record() for f in feedback)


def read_feedback(path: str | Path) -> list[FeedbackEvent]:
    return [FeedbackEvent.from_record(r) for r in load_records(Path(path).read_text())]
