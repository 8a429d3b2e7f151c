"""Joining activities, cards and recordings into interactions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..case import AudioPresence, EvidenceCase
from ..model import Activity, Card, to_dict

__all__ = ["DEFAULT_JOIN_WINDOW_MS", "Interaction", "join_interactions", "match_by_proximity"]

DEFAULT_JOIN_WINDOW_MS = 5_000


@dataclass(frozen=True)
class Interaction:
    """One voice interaction as seen across the activity, card and audio endpoints.

    ``join`` says how activity and card were paired: ``linked`` (explicit
    activity id on the card), ``proximity`` (device and time), or ``None``
    for singletons. Residue-inferred interactions carry no artifacts, only
    the ``residue`` references that imply them.
    """

    interaction_id: str
    activity: Activity | None = None
    card: Card | None = None
    audio_present: AudioPresence = AudioPresence.NOT_CHECKED
    timestamp: int | None = None
    timestamp_source: str | None = None
    join: str | None = None
    residue: tuple[dict[str, Any], ...] = ()
    delta_ms: int | None = None

    @property
    def device_serial(self) -> str | None:
        if self.activity is not None:
            return self.activity.device_serial or None
        if self.card is not None:
            return self.card.device_serial
        return None

    @property
    def presence(self) -> tuple[bool, bool, bool | None]:
        """(activity, card, audio); audio is ``None`` when never checked."""
        audio = {AudioPresence.PRESENT: True, AudioPresence.ABSENT_CONFIRMED: False}.get(self.audio_present)
        return self.activity is not None, self.card is not None, audio

    def to_dict(self) -> dict[str, Any]:
        return {
            "interaction_id": self.interaction_id,
            "activity": to_dict(self.activity) if self.activity else None,
            "card": to_dict(self.card) if self.card else None,
            "audio_present": self.audio_present.value,
            "timestamp": self.timestamp,
            "timestamp_source": self.timestamp_source,
            "join": self.join,
            "delta_ms": self.delta_ms,
            "residue": list(self.residue),
        }


def _compatible(activity: Activity, card: Card, window_ms: int) -> bool:
    if card.device_serial and activity.device_serial and card.device_serial != activity.device_serial:
        return False
    return abs(activity.timestamp - card.timestamp) <= window_ms


def match_by_proximity(
    activities: Sequence[Activity], cards: Sequence[Card], window_ms: int
) -> list[tuple[int, int]]:
    """Pairs (activity index, card index) maximising the number of matches, then minimising total |Δt|.

    A pair is allowed only within ``window_ms`` and, when both sides name a
    device, on the same device. Infeasible pairs get a penalty larger than
    any feasible total, so the optimum never trades a match for a smaller sum.
    """
    if not activities or not cards:
        return []
    cost = np.empty((len(activities), len(cards)), dtype=np.float64)
    feasible = np.zeros_like(cost, dtype=bool)
    for i, act in enumerate(activities):
        for j, card in enumerate(cards):
            feasible[i, j] = _compatible(act, card, window_ms)
            cost[i, j] = abs(act.timestamp - card.timestamp)
    if not feasible.any():
        return []
    penalty = (window_ms + 1) * (min(cost.shape) + 1)
    cost[~feasible] = penalty
    rows, cols = linear_sum_assignment(cost)
    return sorted((int(i), int(j)) for i, j in zip(rows, cols) if feasible[i, j])


def join_interactions(case: EvidenceCase, window_ms: int = DEFAULT_JOIN_WINDOW_MS) -> list[Interaction]:
    """Every activity and card in the case, grouped into interactions.

    Cards naming an activity id are joined to that activity. The remaining
    cards without a link are matched to the remaining activities by
    proximity. Recordings are attached by utterance id; a recording whose
    utterance has neither activity nor card becomes its own interaction.
    """
    activities = sorted(case.activities(), key=lambda a: (a.timestamp, a.activity_id, a.utterance_id))
    cards = sorted(case.cards(), key=lambda c: (c.timestamp, c.card_id))
    by_activity_id = {a.activity_id: i for i, a in enumerate(activities)}

    card_for: dict[int, tuple[int, str]] = {}
    free_cards: list[int] = []
    for j, card in enumerate(cards):
        i = by_activity_id.get(card.linked_activity_id) if card.linked_activity_id else None
        if i is not None and i not in card_for:
            card_for[i] = (j, "linked")
        elif card.linked_activity_id is None:
            free_cards.append(j)
        # a card linked to an activity that is not in the case stays a singleton

    free_acts = [i for i in range(len(activities)) if i not in card_for]
    pairs = match_by_proximity([activities[i] for i in free_acts], [cards[j] for j in free_cards], window_ms)
    for a, c in pairs:
        card_for[free_acts[a]] = (free_cards[c], "proximity")

    used_cards = {j for j, _ in card_for.values()}
    out: list[Interaction] = []
    seen_ids: set[str] = set()

    def unique(key: str) -> str:
        base, n = key, 1
        while key in seen_ids:
            n += 1
            key = f"{base}#{n}"
        seen_ids.add(key)
        return key

    for i, act in enumerate(activities):
        card = None
        join = None
        delta = None
        if i in card_for:
            j, join = card_for[i]
            card = cards[j]
            delta = card.timestamp - act.timestamp
        uid = act.utterance_id
        audio = case.audio_presence(uid) if uid else AudioPresence.NOT_CHECKED
        out.append(Interaction(unique(uid or f"activity:{act.activity_id}"), act, card, audio,
                               act.timestamp, "activity", join, (), delta))
    for j, card in enumerate(cards):
        if j not in used_cards:
            out.append(Interaction(unique(f"card:{card.card_id}"), None, card, AudioPresence.NOT_CHECKED,
                                   card.timestamp, "card"))
    known = {a.utterance_id for a in activities}
    for uid in case.audio_utterance_ids():
        if uid not in known and case.audio_presence(uid) is AudioPresence.PRESENT:
            out.append(Interaction(unique(uid), None, None, AudioPresence.PRESENT))
    return out
