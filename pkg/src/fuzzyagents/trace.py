"""Append-only run trace and its CSV / JSON-lines serialisations."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

__all__ = ["TraceRecord", "Trace", "TRACE_KINDS", "export_trace", "read_trace", "CSV_HEADER"]

TRACE_KINDS = (
    "tick",
    "injection",
    "timer",
    "percept",
    "rule-fired",
    "message-sent",
    "message-delivered",
    "env-effect",
    "role-update",
    "obligation-opened",
    "obligation-settled",
    "obligation-timeout",
    "error",
)

CSV_HEADER = ("tick", "seq", "kind", "agent", "detail", "degree")


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    seq: int
    kind: str
    agent: str
    detail: Any
    degree: Optional[float] = None

    def as_dict(self) -> dict:
        # key order is part of the on-disk format
        return {
            "tick": self.tick,
            "seq": self.seq,
            "kind": self.kind,
            "agent": self.agent,
            "detail": self.detail,
            "degree": self.degree,
        }


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, tick: int, kind: str, agent: str = "", detail: Any = None,
               degree: Optional[float] = None) -> TraceRecord:
        if kind not in TRACE_KINDS:
            raise ValueError(f"unknown trace kind {kind!r}")
        if self.records and tick < self.records[-1].tick:
            raise ValueError("trace records must be appended in tick order")
        # round-trip through JSON so in-memory and re-read traces compare equal
        detail = json.loads(json.dumps(detail))
        rec = TraceRecord(tick, len(self.records), kind, agent, detail,
                          None if degree is None else float(degree))
        self.records.append(rec)
        return rec

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def of_kind(self, *kinds: str) -> list[TraceRecord]:
        return [r for r in self.records if r.kind in kinds]


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


def export_trace(trace: Trace, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in trace:
            writer.writerow([r.tick, r.seq, r.kind, r.agent, _dumps(r.detail),
                             "" if r.degree is None else repr(r.degree)])
        return buf.getvalue().encode("utf-8")
    if fmt in ("jsonl", "json-lines"):
        lines = [json.dumps(r.as_dict(), separators=(",", ":")) for r in trace]
        return "".join(line + "\n" for line in lines).encode("utf-8")
    raise ValueError(f"unknown trace format {fmt!r}; expected 'csv' or 'jsonl'")


def read_trace(data: bytes, fmt: str = "csv") -> Trace:
    text = data.decode("utf-8")
    trace = Trace()
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is not None and tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        for row in reader:
            tick, seq, kind, agent, detail, degree = row
            trace.records.append(TraceRecord(int(tick), int(seq), kind, agent, json.loads(detail),
                                             float(degree) if degree else None))
        return trace
    if fmt in ("jsonl", "json-lines"):
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                trace.records.append(TraceRecord(d["tick"], d["seq"], d["kind"], d["agent"], d["detail"], d["degree"]))
        return trace
    raise ValueError(f"unknown trace format {fmt!r}; expected 'csv' or 'jsonl'")
