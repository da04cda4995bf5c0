"""Append-only event log with strictly increasing sequence numbers.

The log is the campaign's system of record: replaying it reconstructs the
reporting state, the escalation queue, and the lexicon. Retention purges
drop old session/escalation events, leaving gaps in the sequence but never
reordering it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator


class EventKind(str, Enum):
    SESSION_EVENT = "SESSION_EVENT"
    ESCALATION = "ESCALATION"
    REVIEW = "REVIEW"
    LABEL = "LABEL"
    PURGE = "PURGE"
    REPORT = "REPORT"


@dataclass(frozen=True)
class EventRecord:
    seq: int
    ts: str
    kind: EventKind
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "kind": self.kind.value, "payload": self.payload},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "EventRecord":
        raw = json.loads(line)
        return cls(
            seq=int(raw["seq"]),
            ts=str(raw["ts"]),
            kind=EventKind(raw["kind"]),
            payload=dict(raw["payload"]),
        )


class EventLog:
    def __init__(self) -> None:
        self._records: list[EventRecord] = []
        self._next_seq = 1

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EventRecord]:
        return iter(self._records)

    def append(self, kind: EventKind, payload: dict, ts: str) -> EventRecord:
        record = EventRecord(seq=self._next_seq, ts=ts, kind=kind, payload=payload)
        self._next_seq += 1
        self._records.append(record)
        return record

    def restore(self, record: EventRecord) -> None:
        if self._records and record.seq <= self._records[-1].seq:
            raise ValueError("event sequence numbers must increase")
        self._records.append(record)
        self._next_seq = record.seq + 1

    def remove_where(self, predicate: Callable[[EventRecord], bool]) -> int:
        """Drop matching records (retention); sequence numbers keep their gaps."""
        kept = [r for r in self._records if not predicate(r)]
        removed = len(self._records) - len(kept)
        self._records = kept
        return removed

    def dump(self, path: str | Path) -> None:
        text = "\n".join(r.to_json() for r in self._records)
        Path(path).write_text(text + ("\n" if text else ""), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EventLog":
        log = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                log.restore(EventRecord.from_json(line))
        return log

    @classmethod
    def from_records(cls, records: Iterable[EventRecord]) -> "EventLog":
        log = cls()
        for record in records:
            log.restore(record)
        return log
