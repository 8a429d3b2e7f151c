"""Seedable account state behind the mock service, with the three deletion paths.

Every interaction carries a presence triple over (activity, card, audio).
The deletion operations act on it as follows:

* ``HistoryDelete`` removes all three.
* ``CardRemove`` removes only the card.
* ``VoiceDelete`` removes only the recording.

No operation touches any other endpoint, and nothing is ever restored.
"""

from __future__ import annotations

import copy
import enum
import hashlib
import threading
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Any, Iterable, Mapping

from ..canonical import json_digest
from ..model import (
    AccountIdentity,
    Activity,
    ActivityStatus,
    BluetoothState,
    Card,
    Contact,
    DeviceProfile,
    HouseholdMember,
    ListItem,
    NamedList,
    NamedListItems,
    SchemaMismatch,
    SmartHomeTopology,
    WifiDetail,
    from_dict,
    parse_artifact,
    to_dict,
    wire_body,
)
from ..registry import registry

__all__ = [
    "ALL",
    "DeletionKind",
    "DeletionOp",
    "InteractionState",
    "InvalidFixture",
    "MockState",
    "TimeRange",
    "UnknownTarget",
    "audio_bytes_for",
]

ALL = "ALL"


class DeletionKind(str, enum.Enum):
    HISTORY_DELETE = "HistoryDelete"
    CARD_REMOVE = "CardRemove"
    VOICE_DELETE = "VoiceDelete"


@dataclass(frozen=True)
class TimeRange:
    start_ms: int
    end_ms: int  # inclusive

    def __contains__(self, ms: int) -> bool:
        return self.start_ms <= ms <= self.end_ms


@dataclass(frozen=True)
class DeletionOp:
    kind: DeletionKind
    target: str | TimeRange  # interaction id, ALL, or a time range

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DeletionOp":
        target = data["target"]
        if isinstance(target, Mapping):
            target = TimeRange(int(target["start"]), int(target["end"]))
        return cls(DeletionKind(data["kind"]), target)

    def to_dict(self) -> dict[str, Any]:
        target: Any = self.target
        if isinstance(target, TimeRange):
            target = {"start": target.start_ms, "end": target.end_ms}
        return {"kind": self.kind.value, "target": target}


class UnknownTarget(KeyError):
    pass


class InvalidFixture(ValueError):
    pass


def audio_bytes_for(utterance_id: str, size: int = 256) -> bytes:
    """Deterministic stand-in recording for an utterance id."""
    seed = hashlib.sha256(utterance_id.encode("utf-8")).digest()
    body = (seed * (size // len(seed) + 1))[:size]
    return b"MOCKAUDIO\x00" + body


@dataclass
class InteractionState:
    interaction_id: str
    created_at: int
    activity: Activity | None = None
    card: Card | None = None
    audio: bytes | None = None

    @property
    def presence(self) -> str:
        return "".join("1" if x is not None else "0" for x in (self.activity, self.card, self.audio))

    def apply(self, kind: DeletionKind) -> None:
        if kind is DeletionKind.HISTORY_DELETE:
            self.activity = self.card = self.audio = None
        elif kind is DeletionKind.CARD_REMOVE:
            self.card = None
        elif kind is DeletionKind.VOICE_DELETE:
            self.audio = None


@dataclass
class MockState:
    identity: AccountIdentity
    members: list[HouseholdMember] = field(default_factory=list)
    devices: list[DeviceProfile] = field(default_factory=list)
    wifi: list[WifiDetail] = field(default_factory=list)
    bluetooth: list[BluetoothState] = field(default_factory=list)
    interactions: dict[str, InteractionState] = field(default_factory=dict)
    lists: list[NamedList] = field(default_factory=list)
    topology: SmartHomeTopology | None = None
    contacts: list[Contact] = field(default_factory=list)
    raw: dict[str, Any] = field(default_factory=dict)
    clock_ms: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    # --------------------------------------------------------------- fixtures

    @classmethod
    def from_fixture(cls, fixture: Mapping[str, Any]) -> "MockState":
        """Build a state from the canonical fixture form and validate it."""
        try:
            interactions: dict[str, InteractionState] = {}
            for entry in fixture.get("interactions", []):
                iid = entry["interaction_id"]
                if iid in interactions:
                    raise InvalidFixture(f"duplicate interaction id {iid!r}")
                activity = from_dict(Activity, entry["activity"]) if entry.get("activity") else None
                card = from_dict(Card, entry["card"]) if entry.get("card") else None
                created = entry.get("created_at")
                if created is None:
                    created = (activity or card).timestamp if (activity or card) else 0
                audio = audio_bytes_for(iid) if entry.get("audio") else None
                interactions[iid] = InteractionState(iid, int(created), activity, card, audio)
            topology = fixture.get("topology")
            state = cls(
                identity=from_dict(AccountIdentity, fixture["identity"]),
                members=[from_dict(HouseholdMember, m) for m in fixture.get("members", [])],
                devices=[from_dict(DeviceProfile, d) for d in fixture.get("devices", [])],
                wifi=[from_dict(WifiDetail, w) for w in fixture.get("wifi", [])],
                bluetooth=[from_dict(BluetoothState, b) for b in fixture.get("bluetooth", [])],
                interactions=interactions,
                lists=[from_dict(NamedList, lst) for lst in fixture.get("lists", [])],
                topology=from_dict(SmartHomeTopology, topology) if topology else None,
                contacts=[from_dict(Contact, c) for c in fixture.get("contacts", [])],
                raw=copy.deepcopy(dict(fixture.get("raw", {}))),
                clock_ms=int(fixture.get("clock_ms", 0)),
            )
        except InvalidFixture:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidFixture(f"malformed fixture: {type(exc).__name__}: {exc}") from exc
        state.validate()
        return state

    def to_fixture(self) -> dict[str, Any]:
        with self.lock:
            return {
                "clock_ms": self.clock_ms,
                "identity": to_dict(self.identity),
                "members": [to_dict(m) for m in self.members],
                "devices": [to_dict(d) for d in self.devices],
                "wifi": [to_dict(w) for w in self.wifi],
                "bluetooth": [to_dict(b) for b in self.bluetooth],
                "interactions": [
                    {
                        "interaction_id": i.interaction_id,
                        "created_at": i.created_at,
                        "activity": to_dict(i.activity) if i.activity else None,
                        "card": to_dict(i.card) if i.card else None,
                        "audio": i.audio is not None,
                    }
                    for i in self.interactions.values()
                ],
                "lists": [to_dict(lst) for lst in self.lists],
                "topology": to_dict(self.topology) if self.topology else None,
                "contacts": [to_dict(c) for c in self.contacts],
                "raw": copy.deepcopy(self.raw),
            }

    def validate(self) -> None:
        """Raise :class:`InvalidFixture` naming the first violated invariant."""
        for endpoint_id, bindings in self._typed_views():
            status, body = self.render(endpoint_id, bindings)
            if status != 200:
                continue
            try:
                parsed = parse_artifact(endpoint_id, body)
            except SchemaMismatch as exc:
                raise InvalidFixture(str(exc)) from None
            for flag in parsed.flags:
                if flag.severity == "violation":
                    raise InvalidFixture(f"{endpoint_id} {flag.path}: {flag.rule}: {flag.detail}")
        card_ids: set[str] = set()
        for inter in self.interactions.values():
            if inter.activity is not None and inter.activity.utterance_id != inter.interaction_id:
                raise InvalidFixture(f"interaction {inter.interaction_id!r}: activity utterance_id differs")
            if inter.card is not None:
                if inter.card.card_id in card_ids:
                    raise InvalidFixture(f"duplicate card id {inter.card.card_id!r}")
                card_ids.add(inter.card.card_id)

    def _typed_views(self) -> Iterable[tuple[str, dict[str, str]]]:
        for eid in ("activities", "cards", "bootstrap", "household", "device-preferences", "devices-v2", "namedLists"):
            yield eid, {}
        yield "contacts", {"user_id": self.identity.customer_id}
        if self.topology is not None:
            yield "phoenix", {}
        for w in self.wifi:
            yield "device-wifi-details", {"device_serial": w.device_serial}
        for b in self.bluetooth:
            yield "bluetooth", {"device_serial": b.device_serial}
        for lst in self.lists:
            yield "namedLists-items", {"list_id": lst.list_id}

    # ------------------------------------------------------------ interaction

    def add_interaction(
        self,
        interaction_id: str,
        transcript: str,
        *,
        at: int | None = None,
        device_serial: str | None = None,
        status: ActivityStatus | str = ActivityStatus.SUCCESS,
        with_card: bool = True,
        with_audio: bool = True,
    ) -> InteractionState:
        with self.lock:
            if interaction_id in self.interactions:
                raise InvalidFixture(f"interaction {interaction_id!r} exists")
            at = self.clock_ms if at is None else at
            device = next((d for d in self.devices if d.serial_number == device_serial), None)
            if device is None and self.devices:
                device = self.devices[0]
            serial = device.serial_number if device else (device_serial or "")
            dtype = device.device_type if device else ""
            activity = Activity(
                activity_id=f"act-{interaction_id}",
                utterance_id=interaction_id,
                transcript=transcript,
                timestamp=at,
                device_serial=serial,
                device_type=dtype,
                customer_id=self.identity.customer_id,
                activity_status=status,
                response_summary=None,
            )
            card = None
            if with_card:
                card = Card(f"card-{interaction_id}", "TextCard", transcript, at,
                            linked_activity_id=activity.activity_id, device_serial=serial or None)
            state = InteractionState(interaction_id, at, activity, card, audio_bytes_for(interaction_id) if with_audio else None)
            self.interactions[interaction_id] = state
            return state

    def add_list_item(self, list_name: str, item_id: str, text: str, at: int | None = None) -> None:
        with self.lock:
            at = self.clock_ms if at is None else at
            for i, lst in enumerate(self.lists):
                if lst.name == list_name:
                    item = ListItem(item_id, text, False, at, at)
                    self.lists[i] = replace(lst, items=lst.items + (item,), updated_at=max(lst.updated_at, at))
                    return
            raise UnknownTarget(list_name)

    def presence(self) -> dict[str, str]:
        with self.lock:
            return {iid: s.presence for iid, s in self.interactions.items()}

    # --------------------------------------------------------------- deletion

    def _resolve(self, target: str | TimeRange) -> list[InteractionState]:
        if isinstance(target, TimeRange):
            return [s for s in self.interactions.values() if s.created_at in target]
        if target == ALL:
            return list(self.interactions.values())
        if target not in self.interactions:
            raise UnknownTarget(target)
        return [self.interactions[target]]

    def apply_deletion(self, op: DeletionOp) -> dict[str, str]:
        """Apply one deletion; returns the new presence of each affected interaction.

        Range and ``ALL`` targets apply the operation's own kind to every
        matched interaction.
        """
        with self.lock:
            hit = self._resolve(op.target)
            for state in hit:
                state.apply(op.kind)
            return {s.interaction_id: s.presence for s in hit}

    # -------------------------------------------------------------- rendering

    def _activities(self) -> list[Activity]:
        acts = [s.activity for s in self.interactions.values() if s.activity is not None]
        return sorted(acts, key=lambda a: (-a.timestamp, a.activity_id))

    def _cards(self) -> list[Card]:
        cards = [s.card for s in self.interactions.values() if s.card is not None]
        return sorted(cards, key=lambda c: (-c.timestamp, c.card_id))

    def audio_for(self, utterance_id: str) -> bytes | None:
        with self.lock:
            state = self.interactions.get(utterance_id)
            return state.audio if state else None

    def render(self, endpoint_id: str, bindings: Mapping[str, str] | None = None) -> tuple[int, Any]:
        """(status, body) the service answers for one endpoint. Audio bodies are bytes."""
        b = bindings or {}
        with self.lock:
            if endpoint_id == "activities":
                return 200, wire_body("activities", self._activities())
            if endpoint_id == "cards":
                return 200, wire_body("cards", self._cards())
            if endpoint_id == "bootstrap":
                return 200, wire_body("bootstrap", [self.identity])
            if endpoint_id == "household":
                return 200, wire_body("household", self.members)
            if endpoint_id == "contacts":
                if b.get("user_id") != self.identity.customer_id:
                    return 404, {"error": "unknown user"}
                return 200, wire_body("contacts", self.contacts)
            if endpoint_id == "device-preferences":
                return 200, wire_body("device-preferences", self.devices)
            if endpoint_id == "devices-v2":
                return 200, wire_body("devices-v2", self.devices)
            if endpoint_id == "device-wifi-details":
                serial = b.get("device_serial")
                if not serial:
                    return 400, {"error": "deviceSerialNumber required"}
                for w in self.wifi:
                    if w.device_serial == serial:
                        return 200, wire_body("device-wifi-details", [w])
                return 404, {"error": "unknown device"}
            if endpoint_id == "bluetooth":
                serial = b.get("device_serial")
                states = [s for s in self.bluetooth if serial is None or s.device_serial == serial]
                return 200, wire_body("bluetooth", states)
            if endpoint_id == "namedLists":
                return 200, wire_body("namedLists", [replace(lst, items=()) for lst in self.lists])
            if endpoint_id == "namedLists-items":
                for lst in self.lists:
                    if lst.list_id == b.get("list_id"):
                        return 200, wire_body("namedLists-items", [NamedListItems(lst.list_id, lst.items)])
                return 404, {"error": "unknown list"}
            if endpoint_id == "phoenix":
                topo = self.topology or SmartHomeTopology((), ())
                return 200, wire_body("phoenix", [topo])
            if endpoint_id == "utterance-audio":
                uid = b.get("utterance_id")
                if not uid:
                    return 400, {"error": "id required"}
                data = self.audio_for(uid)
                return (200, data) if data is not None else (404, {"error": "no such recording"})
            return 200, copy.deepcopy(self.raw.get(endpoint_id, {}))

    def endpoint_digests(self, exclude: Iterable[str] = ("activities", "cards", "utterance-audio")) -> dict[str, str]:
        """Digest of every rendered body outside ``exclude``; used to check deletion isolation."""
        skip = set(exclude)
        out: dict[str, str] = {}
        with self.lock:
            views = dict.fromkeys(d.endpoint_id for d in registry() if not d.placeholders)
            for endpoint_id in views:
                if endpoint_id not in skip:
                    out[endpoint_id] = json_digest(self.render(endpoint_id)[1])
            for endpoint_id, bindings in self._typed_views():
                if endpoint_id in skip or not bindings:
                    continue
                key = endpoint_id + "?" + "&".join(f"{k}={v}" for k, v in sorted(bindings.items()))
                out[key] = json_digest(self.render(endpoint_id, bindings)[1])
        return dict(sorted(out.items()))


def reachable_presences(max_len: int = 3) -> set[str]:
    """Presence strings reachable from a fresh interaction by up to ``max_len`` deletions.

    Runs every operation sequence against a real one-interaction state.
    """
    seen: set[str] = set()
    for n in range(max_len + 1):
        for seq in product(DeletionKind, repeat=n):
            state = MockState(AccountIdentity("C1", "n", "e@x"))
            state.add_interaction("u1", "probe", at=0)
            seen.add(state.presence()["u1"])
            for kind in seq:
                seen.add(state.apply_deletion(DeletionOp(kind, "u1"))["u1"])
    return seen
