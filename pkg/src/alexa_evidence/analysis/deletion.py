"""Deletion verdicts from presence triples and list-item residue.

The three documented deletion paths act on (activity, card, audio) as:
history delete -> 000, card removal clears the card, voice delete clears the
audio. From an intact 111 that reaches {111, 110, 101, 100, 000}. Anything
else cannot come from those operations and is reported as anomalous.
"""

from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from ..case import AudioPresence, EvidenceCase
from ..timestamps import render_iso
from .interactions import DEFAULT_JOIN_WINDOW_MS, Interaction

__all__ = [
    "DeletionState",
    "DeletionVerdict",
    "Unresolved",
    "classify_case",
    "classify_deletion",
    "classify_triple",
    "infer_residue",
]


class DeletionState(str, enum.Enum):
    INTACT = "Intact"
    VOICE_RECORDING_DELETED = "VoiceRecordingDeleted"
    CARD_REMOVED = "CardRemoved"
    CARD_AND_VOICE_DELETED = "CardAndVoiceDeleted"
    INFERRED_HISTORY_DELETION = "InferredHistoryDeletion"
    ANOMALOUS = "Anomalous"


class Unresolved(Exception):
    """The verdict depends on whether a recording exists, and nobody asked."""

    def __init__(self, interaction_id: str, presence: str) -> None:
        self.interaction_id = interaction_id
        self.presence = presence
        super().__init__(f"{interaction_id}: audio not checked, presence {presence}")


# states whose combination never came out of a single documented deletion
COMPOSITE = frozenset({DeletionState.CARD_AND_VOICE_DELETED})


def _bit(value: bool | None) -> str:
    return "?" if value is None else str(int(value))


def classify_triple(activity: bool, card: bool, audio: bool | None, interaction_id: str = "") -> DeletionState:
    """Pure mapping of one presence triple; ``audio=None`` means never checked."""
    key = _bit(activity) + _bit(card) + _bit(audio)
    if activity:
        if audio is None:
            raise Unresolved(interaction_id, key)
        if card:
            return DeletionState.INTACT if audio else DeletionState.VOICE_RECORDING_DELETED
        return DeletionState.CARD_REMOVED if audio else DeletionState.CARD_AND_VOICE_DELETED
    if card:
        return DeletionState.ANOMALOUS
    if audio is None:
        raise Unresolved(interaction_id, key)
    return DeletionState.ANOMALOUS if audio else DeletionState.INFERRED_HISTORY_DELETION


@dataclass(frozen=True)
class DeletionVerdict:
    interaction_id: str
    state: DeletionState
    presence: str
    evidence: tuple[str, ...]
    beyond_ground_truth: bool = False
    timestamp: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "interaction_id": self.interaction_id,
            "state": self.state.value,
            "presence": self.presence,
            "evidence": list(self.evidence),
            "beyond_ground_truth": self.beyond_ground_truth,
            "timestamp": render_iso(self.timestamp) if self.timestamp is not None else None,
        }


def _evidence(inter: Interaction) -> list[str]:
    out = []
    if inter.activity is not None:
        out.append(f"activities: entry {inter.activity.activity_id} present")
    else:
        out.append("activities: no entry")
    if inter.card is not None:
        how = f" ({inter.join} join)" if inter.join else ""
        out.append(f"cards: card {inter.card.card_id} present{how}")
    else:
        out.append("cards: no card")
    uid = inter.activity.utterance_id if inter.activity else inter.interaction_id
    out.append({
        AudioPresence.PRESENT: f"utterance-audio: recording for {uid} returned",
        AudioPresence.ABSENT_CONFIRMED: f"utterance-audio: recording for {uid} not found",
        AudioPresence.NOT_CHECKED: "utterance-audio: not requested",
    }[inter.audio_present])
    return out


def classify_deletion(inter: Interaction) -> DeletionVerdict:
    """Verdict for one interaction.

    Residue-inferred interactions have no artifacts by construction; the
    residue itself is the evidence for the deletion. Raises
    :class:`Unresolved` when the verdict hinges on an unchecked recording.
    """
    if inter.residue:
        evidence = [f"{r['endpoint_id']}: {r['kind']} {r['ref']} at {render_iso(r['at'])} has no interaction "
                    f"within {r['window_ms']} ms" for r in inter.residue]
        return DeletionVerdict(inter.interaction_id, DeletionState.INFERRED_HISTORY_DELETION, "000",
                               tuple(evidence), False, inter.timestamp)
    a, c, audio = inter.presence
    state = classify_triple(a, c, audio, inter.interaction_id)
    presence = _bit(a) + _bit(c) + _bit(audio)
    return DeletionVerdict(inter.interaction_id, state, presence, tuple(_evidence(inter)),
                           state in COMPOSITE, inter.timestamp)


def infer_residue(
    case: EvidenceCase, interactions: Sequence[Interaction], window_ms: int = DEFAULT_JOIN_WINDOW_MS
) -> list[Interaction]:
    """Interactions implied by list items that no known interaction explains.

    A list item is a user action. When no interaction lies within
    ``window_ms`` of its creation, the command that created it is presumed
    deleted from history. Inference needs the activities endpoint
    to have been read successfully; otherwise every item would look orphaned.
    """
    if not any(r.endpoint_id == "activities" and r.ok for r in case.records):
        return []
    times = sorted(i.timestamp for i in interactions if i.timestamp is not None and not i.residue)
    out: list[Interaction] = []
    for lst in case.named_lists():
        for item in sorted(lst.items, key=lambda x: (x.created_at, x.item_id)):
            if _near(times, item.created_at, window_ms):
                continue
            ref = {
                "endpoint_id": "namedLists-items",
                "kind": "list item",
                "ref": f"{lst.list_id}/{item.item_id}",
                "list_name": lst.name,
                "text": item.text,
                "at": item.created_at,
                "window_ms": window_ms,
            }
            out.append(Interaction(f"residue:{lst.list_id}/{item.item_id}", timestamp=item.created_at,
                                   timestamp_source="namedLists-items", residue=(ref,)))
    return out


def _near(sorted_times: Sequence[int], at: int, window_ms: int) -> bool:
    k = bisect_left(sorted_times, at - window_ms)
    return k < len(sorted_times) and sorted_times[k] <= at + window_ms


def classify_case(
    interactions: Iterable[Interaction],
) -> tuple[list[DeletionVerdict], list[dict[str, str]]]:
    """Verdicts for every interaction, plus the ones left unresolved."""
    verdicts: list[DeletionVerdict] = []
    unresolved: list[dict[str, str]] = []
    for inter in interactions:
        try:
            verdicts.append(classify_deletion(inter))
        except Unresolved as exc:
            unresolved.append({"interaction_id": exc.interaction_id, "presence": exc.presence,
                               "reason": "audio not checked"})
    return verdicts, unresolved
