"""Timestamp normalization to UTC epoch milliseconds.

Every time value that enters the toolkit goes through :func:`normalize_timestamp`
and comes out as an integer count of milliseconds since the Unix epoch, plus a
label saying how the raw value was interpreted. Rendering back to text always
uses ISO-8601 with a ``Z`` suffix.
"""

from __future__ import annotations

import math
import re
from datetime import datetime, timedelta, timezone
from typing import NamedTuple
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

__all__ = [
    "EPOCH_SECONDS_CUTOFF",
    "NormalizedTime",
    "UnparseableTimestamp",
    "normalize_timestamp",
    "render_iso",
    "resolve_timezone",
]

# Numeric values below this are treated as epoch seconds, at or above as epoch ms.
EPOCH_SECONDS_CUTOFF = 10**11

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_NUMERIC = re.compile(r"^[+-]?\d+(\.\d+)?$")
_ISO_FRACTION = re.compile(r"(\.\d+)")


class UnparseableTimestamp(ValueError):
    def __init__(self, raw: object, reason: str = "") -> None:
        self.raw = raw
        self.reason = reason
        super().__init__(f"unparseable timestamp {raw!r}" + (f": {reason}" if reason else ""))


class NormalizedTime(NamedTuple):
    ms: int
    interpretation: str


def resolve_timezone(name: str) -> ZoneInfo:
    """Look up an IANA zone name; raises ``ZoneInfoNotFoundError`` (a KeyError) if unknown."""
    if not name or not isinstance(name, str):
        raise ZoneInfoNotFoundError(f"invalid zone name {name!r}")
    try:
        return ZoneInfo(name)
    except (ValueError, OSError) as exc:
        raise ZoneInfoNotFoundError(name) from exc


def _from_number(value: float, raw: object) -> NormalizedTime:
    if not math.isfinite(value):
        raise UnparseableTimestamp(raw, "not finite")
    if abs(value) < EPOCH_SECONDS_CUTOFF:
        ms = round(value * 1000)
        label = "epoch_s"
    else:
        ms = round(value)
        label = "epoch_ms"
    try:
        _EPOCH + timedelta(milliseconds=ms)
    except OverflowError as exc:
        raise UnparseableTimestamp(raw, "outside representable UTC range") from exc
    return NormalizedTime(ms, label)


def _pad_fraction(text: str) -> str:
    # fromisoformat on 3.10 only accepts 3 or 6 fractional digits
    def fix(match: re.Match[str]) -> str:
        digits = match.group(1)[1:]
        return "." + (digits + "000000")[:6]

    return _ISO_FRACTION.sub(fix, text, count=1)


def _from_iso(text: str, tz_hint: str | None, raw: object) -> NormalizedTime:
    candidate = text.strip()
    if candidate.endswith(("Z", "z")):
        candidate = candidate[:-1] + "+00:00"
    candidate = _pad_fraction(candidate)
    try:
        parsed = datetime.fromisoformat(candidate)
    except ValueError as exc:
        raise UnparseableTimestamp(raw, "not ISO-8601") from exc
    if parsed.tzinfo is not None:
        label = "iso_offset"
    elif tz_hint:
        try:
            zone = resolve_timezone(tz_hint)
        except ZoneInfoNotFoundError as exc:
            raise UnparseableTimestamp(raw, f"unknown tz_hint {tz_hint!r}") from exc
        parsed = parsed.replace(tzinfo=zone)
        label = f"iso_local:{tz_hint}"
    else:
        parsed = parsed.replace(tzinfo=timezone.utc)
        label = "iso_naive_utc"
    delta = parsed.astimezone(timezone.utc) - _EPOCH
    ms = delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000
    return NormalizedTime(ms, label)


def normalize_timestamp(raw: object, tz_hint: str | None = None) -> NormalizedTime:
    """Convert epoch seconds, epoch milliseconds or ISO-8601 text to UTC epoch ms.

    Numbers (or all-digit strings) below ``EPOCH_SECONDS_CUTOFF`` are seconds.
    ISO strings without an offset are read in ``tz_hint`` when given, else UTC.
    """
    if isinstance(raw, bool) or raw is None:
        raise UnparseableTimestamp(raw, "not a time value")
    if isinstance(raw, (int, float)):
        return _from_number(raw, raw)
    if isinstance(raw, str):
        text = raw.strip()
        if not text:
            raise UnparseableTimestamp(raw, "empty")
        if _NUMERIC.match(text):
            number = int(text) if "." not in text else float(text)
            return _from_number(number, raw)
        return _from_iso(text, tz_hint, raw)
    raise UnparseableTimestamp(raw, f"unsupported type {type(raw).__name__}")


def render_iso(ms: int) -> str:
    """Render epoch ms as ``YYYY-MM-DDTHH:MM:SS.mmmZ``."""
    moment = _EPOCH + timedelta(milliseconds=ms)
    return moment.strftime("%Y-%m-%dT%H:%M:%S.") + f"{moment.microsecond // 1000:03d}Z"
