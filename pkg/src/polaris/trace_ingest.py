"""Trace log parsing and segmentation into validated steering executions.

Input format is UTF-8 JSON-lines, one event per line:

    {"ts_ms": 12.5, "layer": "RRC", "event": "RRC_TRIGGER", "mech": "BWP", "dev": "pixel5-a"}

Required keys: ts_ms (number), layer (string), event (string).
Optional keys: mech (mechanism id, meaningful on triggers), dev (default "default").
Unknown keys are ignored.

Segmentation runs one state machine per device. An execution opens at an
RRC_TRIGGER carrying a mechanism hint and closes when the mechanism's full
milestone template has been matched in order. In lenient mode (the default)
events that are not the next expected milestone are dropped and counted; in
strict mode they reject the whole execution. A new trigger preempts an open
execution (NESTED_TRIGGER); an execution still open when its device stream
ends is rejected as MISSING_COMPLETION.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

from .domain import (
    MechanismKind,
    MilestoneKind,
    SteeringExecution,
    TraceEvent,
    execution_template,
)
from .errors import (
    MalformedLineError,
    NegativeTimestampError,
    UnknownMilestoneError,
)

MODES = ("lenient", "strict")


class RejectReason(str, Enum):
    OUT_OF_ORDER = "OUT_OF_ORDER"
    UNKNOWN_MILESTONE = "UNKNOWN_MILESTONE"
    MISSING_COMPLETION = "MISSING_COMPLETION"
    TEMPLATE_MISMATCH = "TEMPLATE_MISMATCH"
    NESTED_TRIGGER = "NESTED_TRIGGER"


@dataclass(frozen=True)
class LineSkip:
    """A line that could not be turned into an event (lenient mode only)."""

    line_no: int
    code: str
    detail: str = ""


@dataclass(frozen=True)
class RejectRecord:
    device_id: str
    first_seq: int
    last_seq: int
    reason: RejectReason
    n_events: int

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "first_seq": self.first_seq,
            "last_seq": self.last_seq,
            "reason": self.reason.value,
            "n_events": self.n_events,
        }


@dataclass(frozen=True)
class IngestReport:
    """Accounting for one ingest run.

    Every parsed event lands in exactly one bucket:
    matched / dropped (inside an accepted execution), rejected, or idle.
    """

    events_read: int
    executions_ok: int
    executions_rejected: int
    rejects: tuple[RejectRecord, ...]
    line_skips: tuple[LineSkip, ...] = ()
    events_matched: int = 0
    events_dropped: int = 0
    events_rejected: int = 0
    events_idle: int = 0

    def to_dict(self) -> dict:
        return {
            "events_read": self.events_read,
            "executions_ok": self.executions_ok,
            "executions_rejected": self.executions_rejected,
            "rejects": [r.to_dict() for r in self.rejects],
            "line_skips": [
                {"line_no": s.line_no, "code": s.code, "detail": s.detail}
                for s in self.line_skips
            ],
            "events_matched": self.events_matched,
            "events_dropped": self.events_dropped,
            "events_rejected": self.events_rejected,
            "events_idle": self.events_idle,
        }


def parse_trace_line(line: str, raw_seq: int = 0) -> TraceEvent:
    """Parse one JSON trace line into a TraceEvent.

    Raises MalformedLineError, UnknownMilestoneError or NegativeTimestampError.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedLineError(f"unparseable line: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedLineError("line is not a JSON object")

    ts = obj.get("ts_ms")
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise MalformedLineError("ts_ms missing or not a number")
    ts = float(ts)
    if math.isnan(ts) or math.isinf(ts):
        raise MalformedLineError("ts_ms is not finite")
    if ts < 0:
        raise NegativeTimestampError(f"ts_ms is negative: {ts}")

    layer = obj.get("layer")
    if not isinstance(layer, str):
        raise MalformedLineError("layer missing or not a string")

    event = obj.get("event")
    if not isinstance(event, str):
        raise MalformedLineError("event missing or not a string")
    try:
        milestone = MilestoneKind(event)
    except ValueError:
        raise UnknownMilestoneError(f"unknown milestone code: {event!r}") from None

    hint = None
    if "mech" in obj and obj["mech"] is not None:
        try:
            hint = MechanismKind(obj["mech"])
        except (ValueError, TypeError):
            raise MalformedLineError(f"unknown mechanism id: {obj['mech']!r}") from None

    dev = obj.get("dev", "default")
    if not isinstance(dev, str) or not dev:
        raise MalformedLineError("dev must be a non-empty string")

    return TraceEvent(
        ts_ms=ts,
        milestone=milestone,
        mechanism_hint=hint,
        device_id=dev,
        raw_seq=raw_seq,
    )


def parse_trace_lines(
    lines, mode: str = "lenient"
) -> tuple[list[TraceEvent], list[LineSkip]]:
    """Parse a sequence of lines; in lenient mode bad lines become skip entries."""
    _check_mode(mode)
    events: list[TraceEvent] = []
    skips: list[LineSkip] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            events.append(parse_trace_line(line, raw_seq=line_no))
        except (MalformedLineError, UnknownMilestoneError, NegativeTimestampError) as exc:
            if mode == "strict":
                raise
            skips.append(LineSkip(line_no=line_no, code=exc.code, detail=str(exc)))
    return events, skips


class _Candidate:
    """Mutable per-device segmentation state for one open execution."""

    __slots__ = ("mechanism", "template", "matched", "dropped")

    def __init__(self, trigger: TraceEvent):
        self.mechanism = trigger.mechanism_hint
        self.template = execution_template(self.mechanism)
        self.matched = [trigger]
        self.dropped: list[TraceEvent] = []

    @property
    def next_expected(self) -> MilestoneKind:
        return self.template[len(self.matched)]

    @property
    def complete(self) -> bool:
        return len(self.matched) == len(self.template)

    def seq_span(self, extra: TraceEvent | None = None) -> tuple[int, int]:
        seqs = [e.raw_seq for e in self.matched + self.dropped]
        if extra is not None:
            seqs.append(extra.raw_seq)
        return min(seqs), max(seqs)


def segment_executions(
    events: list[TraceEvent], mode: str = "lenient"
) -> tuple[list[SteeringExecution], IngestReport]:
    """Segment parsed events into executions, one state machine per device.

    Events must arrive in strictly increasing raw_seq order. The returned
    executions are ordered by (device_id, t0_ms) for deterministic merging.
    """
    _check_mode(mode)
    last_seq = None
    for ev in events:
        if last_seq is not None and ev.raw_seq <= last_seq:
            raise ValueError("raw_seq must be strictly increasing")
        last_seq = ev.raw_seq

    states: dict[str, _Candidate] = {}
    executions: list[SteeringExecution] = []
    rejects: list[RejectRecord] = []
    matched = dropped = rejected = idle = 0

    def reject(cand: _Candidate, device: str, reason: RejectReason, extra=None) -> None:
        nonlocal rejected
        first, last = cand.seq_span(extra)
        n = len(cand.matched) + len(cand.dropped) + (1 if extra is not None else 0)
        rejects.append(RejectRecord(device, first, last, reason, n))
        rejected += n

    for ev in events:
        dev = ev.device_id
        cand = states.get(dev)
        if ev.milestone is MilestoneKind.RRC_TRIGGER:
            if cand is not None:
                reject(cand, dev, RejectReason.NESTED_TRIGGER)
                states[dev] = None
            if ev.mechanism_hint is None:
                rejects.append(
                    RejectRecord(dev, ev.raw_seq, ev.raw_seq, RejectReason.TEMPLATE_MISMATCH, 1)
                )
                rejected += 1
                states[dev] = None
            else:
                states[dev] = _Candidate(ev)
            continue
        if cand is None:
            idle += 1
            continue
        if ev.milestone is cand.next_expected:
            if ev.ts_ms < cand.matched[-1].ts_ms:
                reject(cand, dev, RejectReason.OUT_OF_ORDER, extra=ev)
                states[dev] = None
                continue
            cand.matched.append(ev)
            if cand.complete:
                t0 = cand.matched[0].ts_ms
                tf = cand.matched[-1].ts_ms
                if tf <= t0:
                    # zero-duration runs carry no usable timing signal
                    reject(cand, dev, RejectReason.OUT_OF_ORDER)
                else:
                    executions.append(
                        SteeringExecution(
                            mechanism=cand.mechanism,
                            t0_ms=t0,
                            tf_ms=tf,
                            first_phy_ms=cand.matched[1].ts_ms,
                            milestones=tuple(
                                (e.milestone, e.ts_ms) for e in cand.matched
                            ),
                            device_id=dev,
                        )
                    )
                    matched += len(cand.matched)
                    dropped += len(cand.dropped)
                states[dev] = None
        elif mode == "strict":
            reject(cand, dev, RejectReason.TEMPLATE_MISMATCH, extra=ev)
            states[dev] = None
        else:
            cand.dropped.append(ev)

    for dev in sorted(states):
        cand = states[dev]
        if cand is not None:
            reject(cand, dev, RejectReason.MISSING_COMPLETION)

    executions.sort(key=lambda ex: (ex.device_id, ex.t0_ms))
    rejects.sort(key=lambda r: (r.first_seq, r.device_id))
    report = IngestReport(
        events_read=len(events),
        executions_ok=len(executions),
        executions_rejected=len(rejects),
        rejects=tuple(rejects),
        events_matched=matched,
        events_dropped=dropped,
        events_rejected=rejected,
        events_idle=idle,
    )
    return executions, report


def ingest_lines(
    lines, mode: str = "lenient"
) -> tuple[list[SteeringExecution], IngestReport]:
    """Parse then segment; line-level skips are folded into the report."""
    events, skips = parse_trace_lines(lines, mode)
    executions, report = segment_executions(events, mode)
    if skips:
        report = replace(report, line_skips=tuple(skips))
    return executions, report


def event_to_line(event: TraceEvent) -> str:
    payload: dict = {
        "ts_ms": event.ts_ms,
        "layer": event.milestone.layer.value,
        "event": event.milestone.value,
    }
    if event.mechanism_hint is not None:
        payload["mech"] = event.mechanism_hint.value
    payload["dev"] = event.device_id
    return json.dumps(payload)


def executions_to_trace_lines(executions) -> list[str]:
    """Serialize executions back to the trace line format (round-trip support)."""
    lines: list[str] = []
    for ex in executions:
        for i, (code, ts) in enumerate(ex.milestones):
            hint = ex.mechanism if i == 0 else None
            lines.append(
                event_to_line(
                    TraceEvent(
                        ts_ms=ts,
                        milestone=code,
                        mechanism_hint=hint,
                        device_id=ex.device_id,
                    )
                )
            )
    return lines


def execution_to_record(ex: SteeringExecution) -> dict:
    """JSON-friendly record for the segmented-executions file format."""
    return {
        "mechanism": ex.mechanism.value,
        "device_id": ex.device_id,
        "t0_ms": ex.t0_ms,
        "tf_ms": ex.tf_ms,
        "first_phy_ms": ex.first_phy_ms,
        "milestones": [[code.value, ts] for code, ts in ex.milestones],
    }


def record_to_execution(record: dict) -> SteeringExecution:
    try:
        return SteeringExecution(
            mechanism=MechanismKind(record["mechanism"]),
            t0_ms=float(record["t0_ms"]),
            tf_ms=float(record["tf_ms"]),
            first_phy_ms=float(record["first_phy_ms"]),
            milestones=tuple(
                (MilestoneKind(code), float(ts)) for code, ts in record["milestones"]
            ),
            device_id=str(record.get("device_id", "default")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedLineError(f"bad execution record: {exc}") from None


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
