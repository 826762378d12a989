"""Append-only newline-delimited event log.

File layout: line 1 is the header object, then one event object per line.
Events carry a contiguous ``seq``, a non-decreasing ``tick``, a ``kind``
from :data:`EVENT_KINDS`, and a kind-specific ``payload``. The first event
must be ``sim_start`` and the last ``sim_end``; any ordering violation is a
hard error because trace corruption must never pass silently.

All lines are canonical JSON (sorted keys, no spaces), which makes a run's
trace byte-reproducible and lets tests compare whole files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    TraceFormatError,
    TraceHeaderError,
    TraceOrderError,
    TraceVersionError,
)

SCHEMA_VERSION = 1

EVENT_KINDS = frozenset(
    {
        "sim_start",
        "position",
        "decision",
        "llm_exchange",
        "thought",
        "intention",
        "order_event",
        "cost_accrual",
        "warning",
        "sim_end",
    }
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class TraceHeader:
    schema_version: int
    config_digest: str
    seed: int
    created: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "created": self.created,
        }


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    tick: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "tick": self.tick, "kind": self.kind, "payload": self.payload}


class TraceWriter:
    """Single-writer append stream with ordering enforcement."""

    def __init__(
        self,
        path: str | Path,
        config_digest: str,
        seed: int,
        created: str | None = None,
    ):
        self.path = Path(path)
        self.header = TraceHeader(SCHEMA_VERSION, config_digest, seed, created)
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        self._fh.write(canonical_json(self.header.to_dict()) + "\n")
        self._last_seq = -1
        self._last_tick = -1
        self._started = False
        self._ended = False

    def append_event(self, event: TraceEvent) -> None:
        if self._ended:
            raise TraceOrderError("cannot append after sim_end")
        if event.kind not in EVENT_KINDS:
            raise TraceOrderError(f"unknown event kind {event.kind!r}")
        if event.seq != self._last_seq + 1:
            raise TraceOrderError(
                f"seq {event.seq} breaks contiguity (expected {self._last_seq + 1})"
            )
        if self._last_seq >= 0 and event.tick < self._last_tick:
            raise TraceOrderError(
                f"tick {event.tick} decreases (last was {self._last_tick})"
            )
        if not self._started:
            if event.kind != "sim_start":
                raise TraceOrderError("first event must be sim_start")
            self._started = True
        elif event.kind == "sim_start":
            raise TraceOrderError("duplicate sim_start")
        self._fh.write(canonical_json(event.to_dict()) + "\n")
        self._last_seq = event.seq
        self._last_tick = event.tick
        if event.kind == "sim_end":
            self._ended = True
            self._fh.flush()

    def emit(self, kind: str, tick: int, payload: dict) -> TraceEvent:
        event = TraceEvent(seq=self._last_seq + 1, tick=tick, kind=kind, payload=payload)
        self.append_event(event)
        return event

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _parse_header(line: str) -> TraceHeader:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceHeaderError(f"unreadable header: {exc}") from exc
    if not isinstance(data, dict) or "schema_version" not in data:
        raise TraceHeaderError("first line is not a trace header")
    if data["schema_version"] != SCHEMA_VERSION:
        raise TraceVersionError(
            f"trace schema_version {data['schema_version']} unsupported (expected {SCHEMA_VERSION})"
        )
    return TraceHeader(
        schema_version=data["schema_version"],
        config_digest=data.get("config_digest", ""),
        seed=data.get("seed", 0),
        created=data.get("created"),
    )


def iter_trace(path: str | Path) -> Iterator[TraceHeader | TraceEvent]:
    """Yield the header then every event, validating as it streams."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise TraceHeaderError(f"{path}: empty file, missing header")
        header = _parse_header(first)
        yield header
        last_seq = -1
        last_tick = -1
        started = False
        ended = False
        line_no = 1
        for line in fh:
            line_no += 1
            stripped = line.strip()
            if not stripped:
                raise TraceFormatError(line_no, "blank line inside trace")
            try:
                data = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(line_no, f"malformed event: {exc.msg}") from exc
            if not isinstance(data, dict) or not {"seq", "tick", "kind", "payload"} <= set(data):
                raise TraceFormatError(line_no, "event missing required fields")
            event = TraceEvent(
                seq=data["seq"], tick=data["tick"], kind=data["kind"], payload=data["payload"]
            )
            if ended:
                raise TraceOrderError(f"line {line_no}: event after sim_end")
            if event.kind not in EVENT_KINDS:
                raise TraceFormatError(line_no, f"unknown event kind {event.kind!r}")
            if event.seq != last_seq + 1:
                raise TraceOrderError(
                    f"line {line_no}: seq {event.seq} breaks contiguity (expected {last_seq + 1})"
                )
            if last_seq >= 0 and event.tick < last_tick:
                raise TraceOrderError(f"line {line_no}: tick decreases")
            if not started:
                if event.kind != "sim_start":
                    raise TraceOrderError(f"line {line_no}: first event must be sim_start")
                started = True
                if header.config_digest and isinstance(event.payload.get("config"), dict):
                    from .config import SimConfig, config_digest

                    try:
                        embedded = config_digest(SimConfig.from_dict(event.payload["config"]))
                    except Exception as exc:
                        raise TraceFormatError(line_no, f"unusable embedded config: {exc}") from exc
                    if embedded != header.config_digest:
                        raise TraceHeaderError(
                            "header config digest does not match the embedded config"
                        )
            elif event.kind == "sim_start":
                raise TraceOrderError(f"line {line_no}: duplicate sim_start")
            if event.kind == "sim_end":
                ended = True
            last_seq = event.seq
            last_tick = event.tick
            yield event
        if not started:
            raise TraceOrderError("trace contains no events")
        if not ended:
            raise TraceOrderError("trace not terminated by sim_end")


@dataclass
class TraceLog:
    header: TraceHeader
    events: list[TraceEvent]


def load_trace(path: str | Path) -> TraceLog:
    stream = iter_trace(path)
    header = next(stream)
    events = list(stream)
    return TraceLog(header=header, events=events)  # type: ignore[arg-type]


def write_trace(
    path: str | Path,
    header: TraceHeader,
    events: Iterable[TraceEvent],
) -> None:
    """Serialize an already-validated event sequence (used for fixtures)."""
    with TraceWriter(path, header.config_digest, header.seed, header.created) as writer:
        for event in events:
            writer.append_event(event)


# --- foreign log ingestion -------------------------------------------------


@dataclass(frozen=True)
class IngestMapping:
    """Field paths mapping a foreign record schema onto thought records.

    Paths are dot-separated keys into nested JSON objects. ``defaults``
    may supply a value for any of the three targets when the path is
    absent from a record; records still missing a target are skipped.
    """

    agent: str
    tick: str
    text: str
    defaults: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "IngestMapping":
        missing = {"agent", "tick", "text"} - set(data)
        if missing:
            raise ValueError(f"ingest mapping missing targets: {sorted(missing)}")
        return cls(
            agent=data["agent"],
            tick=data["tick"],
            text=data["text"],
            defaults=dict(data.get("defaults", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "IngestMapping":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _lookup_path(record: dict, dotted: str):
    node = record
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


@dataclass
class IngestResult:
    rows: list[dict]
    skipped: int
    warnings: list[str]
    agent_names: dict[int, str]


def ingest_external(path: str | Path, mapping: IngestMapping) -> IngestResult:
    """Map a foreign JSONL log onto (agent_id, tick, text) rows.

    Single-perspective sources fill both thought slots downstream. Non-integer
    agent identifiers get stable integer ids in order of first appearance
    (after sorting by tick). Bad records never abort the run: they are
    skipped, counted, and reported.
    """
    rows: list[dict] = []
    skipped = 0
    warnings: list[str] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError:
                skipped += 1
                warnings.append(f"line {line_no}: malformed record")
                continue
            if not isinstance(record, dict):
                skipped += 1
                warnings.append(f"line {line_no}: record is not an object")
                continue
            values = {}
            missing = None
            for target, dotted in (("agent", mapping.agent), ("tick", mapping.tick), ("text", mapping.text)):
                value = _lookup_path(record, dotted)
                if value is None:
                    value = mapping.defaults.get(target)
                if value is None:
                    missing = target
                    break
                values[target] = value
            if missing is not None:
                skipped += 1
                warnings.append(f"line {line_no}: missing mapped field '{missing}'")
                continue
            try:
                tick = int(values["tick"])
            except (TypeError, ValueError):
                skipped += 1
                warnings.append(f"line {line_no}: tick {values['tick']!r} is not an integer")
                continue
            rows.append({"agent_raw": values["agent"], "tick": tick, "text": str(values["text"]), "line": line_no})
    rows.sort(key=lambda r: (r["tick"], r["line"]))
    all_int_ids = all(
        isinstance(r["agent_raw"], int) and not isinstance(r["agent_raw"], bool) for r in rows
    )
    agent_ids: dict[str, int] = {}
    agent_names: dict[int, str] = {}
    out: list[dict] = []
    for row in rows:
        raw = row["agent_raw"]
        if all_int_ids:
            agent_id = raw
            agent_names.setdefault(agent_id, str(raw))
        else:
            # Mixed or named identifiers: stable ids by first appearance.
            key = str(raw)
            if key not in agent_ids:
                agent_ids[key] = len(agent_ids)
                agent_names[agent_ids[key]] = key
            agent_id = agent_ids[key]
        out.append({"agent_id": agent_id, "tick": row["tick"], "text": row["text"]})
    return IngestResult(rows=out, skipped=skipped, warnings=warnings, agent_names=agent_names)
