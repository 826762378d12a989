"""Tolerant parsing of structured decision replies.

Replies may wrap deliberation in think tags and may surround the JSON
payload with prose; parsing strips the tags, finds the last well-formed
JSON object, and validates the schema-specific fields. Every failure is a
:class:`DecisionParseError` naming the violation, never a crash.
"""

from __future__ import annotations

import json
import re

from ..errors import DecisionParseError
from .types import OrderSelection, WorkHoursDecision

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"

_HOUR_RE = re.compile(r"^(\d{1,2}):(\d{2})$")


def strip_think_blocks(text: str, open_tag: str = THINK_OPEN, close_tag: str = THINK_CLOSE) -> str:
    """Remove every open..close tagged span (unterminated spans drop to end)."""
    out: list[str] = []
    pos = 0
    while True:
        start = text.find(open_tag, pos)
        if start < 0:
            out.append(text[pos:])
            break
        out.append(text[pos:start])
        end = text.find(close_tag, start + len(open_tag))
        if end < 0:
            break
        pos = end + len(close_tag)
    return "".join(out)


def extract_think_block(text: str, open_tag: str = THINK_OPEN, close_tag: str = THINK_CLOSE) -> str | None:
    """Content of the first tagged span, or None when no tags are present."""
    start = text.find(open_tag)
    if start < 0:
        return None
    end = text.find(close_tag, start + len(open_tag))
    if end < 0:
        return text[start + len(open_tag):].strip()
    return text[start + len(open_tag):end].strip()


def find_json_objects(text: str) -> list[tuple[int, int, dict]]:
    """All parseable top-level JSON objects as (start, end, value)."""
    decoder = json.JSONDecoder()
    found: list[tuple[int, int, dict]] = []
    pos = 0
    while True:
        start = text.find("{", pos)
        if start < 0:
            break
        try:
            value, consumed = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            pos = start + 1
            continue
        if isinstance(value, dict):
            found.append((start, start + consumed, value))
            pos = start + consumed
        else:
            pos = start + 1
    return found


def last_json_object(text: str) -> dict:
    objects = find_json_objects(text)
    if not objects:
        raise DecisionParseError("no JSON object found in reply")
    return objects[-1][2]


def prose_before_payload(text: str) -> str:
    """Reply body preceding the final JSON object (fallback thought text)."""
    objects = find_json_objects(text)
    if not objects:
        return text.strip()
    start = objects[-1][0]
    return text[:start].strip()


def parse_hour(value) -> int:
    if not isinstance(value, str):
        raise DecisionParseError(f"time must be a string like '9:00', got {value!r}")
    match = _HOUR_RE.match(value.strip())
    if not match:
        raise DecisionParseError(f"time {value!r} must look like H:00 or HH:00")
    if match.group(2) != "00":
        raise DecisionParseError("minutes must be 00")
    hour = int(match.group(1))
    if hour > 23:
        raise DecisionParseError(f"hour {hour} out of range 0..23")
    return hour


def parse_decision_payload(raw: str, schema: str):
    """Parse a backend reply into a decision per ``schema``.

    schema: ``work_hours`` or ``order_selection``.
    """
    if not raw:
        raise DecisionParseError("empty reply")
    cleaned = strip_think_blocks(raw)
    payload = last_json_object(cleaned)
    if schema == "work_hours":
        for key in ("go_to_work_time", "get_off_work_time"):
            if key not in payload:
                raise DecisionParseError(f"missing key {key}")
        return WorkHoursDecision(
            go_to_work_hour=parse_hour(payload["go_to_work_time"]),
            get_off_work_hour=parse_hour(payload["get_off_work_time"]),
        )
    if schema == "order_selection":
        if "order_list" not in payload:
            raise DecisionParseError("missing key order_list")
        items = payload["order_list"]
        if not isinstance(items, list):
            raise DecisionParseError("order_list must be a list")
        ids: list[int] = []
        for item in items:
            if isinstance(item, bool) or not isinstance(item, int):
                raise DecisionParseError(f"order ids must be integers, got {item!r}")
            ids.append(item)
        return OrderSelection(order_ids=tuple(ids))
    raise ValueError(f"unknown schema {schema!r}")
