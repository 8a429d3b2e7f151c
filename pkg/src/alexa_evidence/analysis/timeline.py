"""A single UTC timeline merged from activities, cards, list items and notifications."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from ..case import EvidenceCase
from ..model import ActivityStatus, render_enum
from ..timestamps import UnparseableTimestamp, normalize_timestamp, render_iso
from .interactions import Interaction

__all__ = ["EventSource", "SOURCE_RANK", "Timeline", "TimelineEvent", "build_timeline", "event_sort_key", "order_events"]


class EventSource(str, enum.Enum):
    ACTIVITY = "Activity"
    CARD = "Card"
    LIST_ITEM_CREATED = "ListItemCreated"
    LIST_ITEM_UPDATED = "ListItemUpdated"
    NOTIFICATION = "Notification"
    OTHER = "Other"


# tie-break order for events at the same millisecond
SOURCE_RANK = {
    EventSource.ACTIVITY: 0,
    EventSource.CARD: 1,
    EventSource.LIST_ITEM_CREATED: 2,
    EventSource.LIST_ITEM_UPDATED: 2,
    EventSource.NOTIFICATION: 3,
    EventSource.OTHER: 4,
}


@dataclass(frozen=True)
class TimelineEvent:
    at: int | None
    source: EventSource
    summary: str
    refs: tuple[str, ...] = ()
    device_serial: str | None = None
    endpoint_id: str | None = None  # names the endpoint for Other events
    raw_time: Any = None  # kept for unplaced events

    @property
    def source_label(self) -> str:
        if self.source is EventSource.OTHER and self.endpoint_id:
            return f"Other({self.endpoint_id})"
        return self.source.value

    def to_dict(self) -> dict[str, Any]:
        out = {
            "at": render_iso(self.at) if self.at is not None else None,
            "at_ms": self.at,
            "source": self.source_label,
            "summary": self.summary,
            "refs": list(self.refs),
            "device_serial": self.device_serial,
        }
        if self.at is None:
            out["raw_time"] = self.raw_time
        return out


def event_sort_key(event: TimelineEvent) -> tuple[Any, ...]:
    return (event.at, SOURCE_RANK[event.source], event.source_label, event.refs, event.summary,
            event.device_serial or "")


def order_events(events: Iterable[TimelineEvent]) -> list[TimelineEvent]:
    """Total order on placed events: time, then source rank, then identifiers."""
    return sorted(events, key=event_sort_key)


@dataclass(frozen=True)
class Timeline:
    events: tuple[TimelineEvent, ...]
    unplaced: tuple[TimelineEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.events) + len(self.unplaced)

    def to_dict(self) -> dict[str, Any]:
        return {"events": [e.to_dict() for e in self.events], "unplaced": [e.to_dict() for e in self.unplaced]}


def _activity_summary(transcript: str, status: ActivityStatus | str) -> str:
    text = f'"{transcript}"'
    if status is not ActivityStatus.SUCCESS:
        text += f" [{render_enum(status)}]"
    return text


def _notification_events(case: EvidenceCase) -> list[TimelineEvent]:
    out = []
    for body in case.raw_bodies("notifications"):
        entries = body.get("notifications", []) if isinstance(body, Mapping) else []
        for entry in entries if isinstance(entries, list) else []:
            if not isinstance(entry, Mapping):
                continue
            serial = entry.get("deviceSerialNumber")
            tz = case.device_timezone(serial) if isinstance(serial, str) else None
            raw = entry.get("createdDate")
            if raw is None:
                raw = entry.get("alarmTime")
            kind = entry.get("type", "notification")
            summary = f"{kind} {entry.get('status', '')}".strip()
            alarm = entry.get("alarmTime")
            if alarm is not None and raw is not alarm:
                try:
                    summary += f" for {render_iso(normalize_timestamp(alarm, tz).ms)}"
                except UnparseableTimestamp:
                    summary += f" for {alarm!r}"
            ref = (str(entry["id"]),) if "id" in entry else ()
            try:
                at = normalize_timestamp(raw, tz).ms if raw is not None else None
            except UnparseableTimestamp:
                at = None
            out.append(TimelineEvent(at, EventSource.NOTIFICATION, summary, ref,
                                     serial if isinstance(serial, str) else None, "notifications", raw))
    return out


def build_timeline(case: EvidenceCase, interactions: Sequence[Interaction] | None = None) -> Timeline:
    """Merge the case's timed artifacts into one ordered timeline.

    Cards already joined to an activity are represented by that activity.
    List item updates appear only when the update time differs from
    creation. Notifications without a usable time go to ``unplaced``.
    """
    joined_cards: set[str] = set()
    if interactions is not None:
        joined_cards = {i.card.card_id for i in interactions if i.card is not None and i.activity is not None}

    events: list[TimelineEvent] = []
    for act in case.activities():
        events.append(TimelineEvent(act.timestamp, EventSource.ACTIVITY,
                                    _activity_summary(act.transcript, act.activity_status),
                                    (act.activity_id, act.utterance_id), act.device_serial or None))
    for card in case.cards():
        if card.card_id in joined_cards:
            continue
        events.append(TimelineEvent(card.timestamp, EventSource.CARD, f"card: {card.title}", (card.card_id,),
                                    card.device_serial))
    for lst in case.named_lists():
        for item in lst.items:
            ref = (f"{lst.list_id}/{item.item_id}",)
            events.append(TimelineEvent(item.created_at, EventSource.LIST_ITEM_CREATED,
                                        f"{lst.name or lst.list_id}: added {item.text!r}", ref))
            if item.updated_at != item.created_at:
                state = "completed" if item.completed else "updated"
                events.append(TimelineEvent(item.updated_at, EventSource.LIST_ITEM_UPDATED,
                                            f"{lst.name or lst.list_id}: {state} {item.text!r}", ref))
    events.extend(_notification_events(case))

    placed = [e for e in events if e.at is not None]
    unplaced = sorted((e for e in events if e.at is None), key=lambda e: (e.source_label, e.refs, e.summary))
    return Timeline(tuple(order_events(placed)), tuple(unplaced))
