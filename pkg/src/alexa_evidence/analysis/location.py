"""Places named in voice commands, compared with the device's configured address."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Any, Sequence

from ..case import EvidenceCase
from ..model import Activity, DeviceProfile

__all__ = ["DEFAULT_PATTERNS", "FindingKind", "LocationFinding", "LocationPattern", "extract_mentions",
           "location_crosscheck"]

_PLACE = r"(?P<place>[a-z][a-z'\-]*(?:\s+[a-z][a-z'\-]*){0,3}?)"
_TAIL = r"(?:\s+(?:today|tomorrow|tonight|now|right now|this \w+|next \w+))?\s*[?.!]*\s*$"


@dataclass(frozen=True)
class LocationPattern:
    """``kind`` is ``location`` (where the speaker asks about) or ``destination`` (where they are going)."""

    name: str
    kind: str
    regex: re.Pattern[str]

    @classmethod
    def build(cls, name: str, kind: str, lead: str) -> "LocationPattern":
        return cls(name, kind, re.compile(lead + r"\s+" + _PLACE + _TAIL, re.IGNORECASE))


DEFAULT_PATTERNS: tuple[LocationPattern, ...] = (
    LocationPattern.build("weather", "location", r"\b(?:weather|forecast|temperature)\b.*?\b(?:in|for|at)"),
    LocationPattern.build("traffic-to", "destination", r"\btraffic\b.*?\b(?:to|towards)"),
    LocationPattern.build("traffic-in", "location", r"\btraffic\b.*?\b(?:in|around)"),
    LocationPattern.build("directions", "destination", r"\b(?:directions|how far is it|how long to get)\b.*?\bto"),
    LocationPattern.build("time-in", "location", r"\btime is it\b.*?\bin"),
)


class FindingKind(str, enum.Enum):
    AGREEMENT = "Agreement"
    DISAGREEMENT = "Disagreement"
    NO_DATA = "NoData"


@dataclass(frozen=True)
class LocationFinding:
    kind: FindingKind
    detail: str
    activity_id: str | None = None
    transcript: str | None = None
    mention: str | None = None
    mention_kind: str | None = None
    pattern: str | None = None
    device_serial: str | None = None
    device_place: dict[str, Any] | None = None
    device_timezone: str | None = None
    significance: str = "notable"
    sources: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "detail": self.detail,
            "activity_id": self.activity_id,
            "transcript": self.transcript,
            "mention": self.mention,
            "mention_kind": self.mention_kind,
            "pattern": self.pattern,
            "device_serial": self.device_serial,
            "device_place": self.device_place,
            "device_timezone": self.device_timezone,
            "significance": self.significance,
            "sources": list(self.sources),
        }


def extract_mentions(transcript: str, patterns: Sequence[LocationPattern] = DEFAULT_PATTERNS) -> list[tuple[LocationPattern, str]]:
    """(pattern, place) for each pattern that names a place; first match per pattern."""
    out = []
    for pattern in patterns:
        m = pattern.regex.search(transcript)
        if m:
            out.append((pattern, m.group("place").strip()))
    return out


def _norm(text: str | None) -> str:
    return " ".join((text or "").casefold().split())


def _device_for(case: EvidenceCase, serial: str) -> DeviceProfile | None:
    for pref in case.device_preferences():
        if pref.serial_number == serial:
            return pref
    return None


def _check(activity: Activity, pattern: LocationPattern, place: str, device: DeviceProfile | None) -> LocationFinding:
    base = dict(activity_id=activity.activity_id, transcript=activity.transcript, mention=place,
                mention_kind=pattern.kind, pattern=pattern.name, device_serial=activity.device_serial or None)
    activity_ref = f"activities:{activity.activity_id}"
    if device is None or device.postal_address is None:
        return LocationFinding(FindingKind.NO_DATA, "no configured address for the device", **base,
                               device_timezone=device.timezone if device else None,
                               significance="informational", sources=(activity_ref,))
    addr = device.postal_address
    place_info = {"city": addr.city, "county": addr.county, "country": addr.country}
    sources = (activity_ref, f"device-preferences:{device.serial_number}")
    known = {_norm(addr.city), _norm(addr.county)} - {""}
    if _norm(place) in known:
        return LocationFinding(FindingKind.AGREEMENT, f"{pattern.kind} {place!r} matches the device address", **base,
                               device_place=place_info, device_timezone=device.timezone,
                               significance="informational", sources=sources)
    if pattern.kind == "destination":
        detail = f"destination {place!r} differs from the device address {addr.city!r}; a trip away from home, not a contradiction"
        significance = "informational"
    else:
        detail = f"asked about {place!r} while the device is configured for {addr.city!r}"
        significance = "notable"
    return LocationFinding(FindingKind.DISAGREEMENT, detail, **base, device_place=place_info,
                           device_timezone=device.timezone, significance=significance, sources=sources)


def location_crosscheck(case: EvidenceCase, patterns: Sequence[LocationPattern] = DEFAULT_PATTERNS) -> list[LocationFinding]:
    """One finding per place mention; a single NoData finding when no transcript names a place.

    Findings describe consistency between two sources. They never claim where
    anyone actually was.
    """
    findings = []
    for act in sorted(case.activities(), key=lambda a: (a.timestamp, a.activity_id)):
        for pattern, place in extract_mentions(act.transcript, patterns):
            findings.append(_check(act, pattern, place, _device_for(case, act.device_serial)))
    if not findings:
        return [LocationFinding(FindingKind.NO_DATA, "no location mentions in activity transcripts",
                                significance="informational", sources=("activities",))]
    return findings
