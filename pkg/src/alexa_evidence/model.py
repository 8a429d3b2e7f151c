"""Typed artifacts for the Alexa management API and their JSON parsers.

Each record type is a frozen dataclass described by one or more *field tables*:
a sequence of :class:`Field` entries mapping a Python attribute to a wire key
and a codec. The same table drives three conversions:

* ``decode_record`` - wire JSON object to record (used by :func:`parse_artifact`)
* ``encode_record`` - record back to wire JSON (used by the mock service)
* ``to_dict`` / ``from_dict`` - the canonical, snake_case artifact form

Wire keys that no field claims are kept verbatim in each record's ``extras``.
A known optional key sent as explicit ``null`` is also kept in ``extras`` so the
wire body can be rebuilt exactly.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, Iterable, Mapping, Sequence

from .canonical import sha256_hex
from .timestamps import EPOCH_SECONDS_CUTOFF, UnparseableTimestamp, normalize_timestamp, render_iso, resolve_timezone

__all__ = [
    "AccountIdentity",
    "Activity",
    "ActivityStatus",
    "Appliance",
    "ApplianceGroup",
    "ArtifactCategory",
    "BluetoothPairing",
    "BluetoothState",
    "Card",
    "Contact",
    "ContactSource",
    "DeviceProfile",
    "DistanceUnit",
    "HouseholdMember",
    "InvariantFlag",
    "ListItem",
    "NamedList",
    "NamedListItems",
    "PairedDevice",
    "Parsed",
    "PostalAddress",
    "RawPassthrough",
    "Role",
    "SchemaMismatch",
    "SmartHomeTopology",
    "TemperatureUnit",
    "UtteranceAudio",
    "WifiDetail",
    "from_dict",
    "parse_artifact",
    "render_enum",
    "to_dict",
    "to_wire",
    "typed_endpoints",
    "wire_body",
]


class ArtifactCategory(str, enum.Enum):
    ACCOUNT = "Account"
    ALEXA_ENABLED_DEVICE = "AlexaEnabledDevice"
    CUSTOMER_SETTING = "CustomerSetting"
    SKILL = "Skill"
    COMPATIBLE_DEVICE = "CompatibleDevice"
    USER_ACTIVITY = "UserActivity"
    AUDIO_DATA = "AudioData"
    UNCATEGORIZED = "Uncategorized"


class ActivityStatus(str, enum.Enum):
    SUCCESS = "SUCCESS"
    DISCARDED_NON_DEVICE_DIRECTED_INTENT = "DISCARDED_NON_DEVICE_DIRECTED_INTENT"


class Role(str, enum.Enum):
    ADULT = "ADULT"
    CHILD = "CHILD"


class ContactSource(str, enum.Enum):
    MANUAL = "MANUAL"
    IMPORTED = "IMPORTED"
    UNKNOWN = "UNKNOWN"


class TemperatureUnit(str, enum.Enum):
    CELSIUS = "CELSIUS"
    FAHRENHEIT = "FAHRENHEIT"


class DistanceUnit(str, enum.Enum):
    METRIC = "METRIC"
    IMPERIAL = "IMPERIAL"


def render_enum(value: enum.Enum | str | None) -> str | None:
    """Wire literal for an enum-or-preserved-literal value."""
    if isinstance(value, enum.Enum):
        return value.value
    return value


# --------------------------------------------------------------------------
# errors and flags


class SchemaMismatch(ValueError):
    """A required field is missing or has the wrong JSON type.

    The offending body is kept on the exception for manual triage.
    """

    def __init__(self, endpoint_id: str, path: str, expected: str, found: str, body: Any = None) -> None:
        self.endpoint_id = endpoint_id
        self.path = path
        self.expected = expected
        self.found = found
        self.body = body
        super().__init__(f"{endpoint_id}: {path}: expected {expected}, found {found}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "endpoint_id": self.endpoint_id,
            "path": self.path,
            "expected": self.expected,
            "found": self.found,
        }


class _Mismatch(Exception):
    def __init__(self, path: str, expected: str, found: str) -> None:
        self.path = path
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class InvariantFlag:
    path: str
    rule: str
    detail: str
    severity: str = "violation"

    def to_dict(self) -> dict[str, str]:
        return {"path": self.path, "rule": self.rule, "detail": self.detail, "severity": self.severity}


def _json_type(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    if isinstance(value, dict):
        return "object"
    return type(value).__name__


class _Context:
    def __init__(self, tz_hint: str | None) -> None:
        self.tz_hint = tz_hint
        self.time_formats: Counter[str] = Counter()


# --------------------------------------------------------------------------
# codecs


class Codec:
    expected = "value"

    def decode(self, value: Any, ctx: _Context, path: str) -> Any:
        raise NotImplementedError

    def encode(self, value: Any) -> Any:
        return value

    def to_canon(self, value: Any) -> Any:
        return value

    def from_canon(self, value: Any) -> Any:
        return value


class _Str(Codec):
    expected = "string"

    def __init__(self, nonempty: bool = False) -> None:
        self.nonempty = nonempty
        if nonempty:
            self.expected = "nonempty string"

    def decode(self, value, ctx, path):
        if not isinstance(value, str):
            raise _Mismatch(path, self.expected, _json_type(value))
        if self.nonempty and not value:
            raise _Mismatch(path, self.expected, "empty string")
        return value


class _Bool(Codec):
    expected = "boolean"

    def decode(self, value, ctx, path):
        if not isinstance(value, bool):
            raise _Mismatch(path, self.expected, _json_type(value))
        return value


class _Time(Codec):
    expected = "timestamp"

    def decode(self, value, ctx, path):
        try:
            result = normalize_timestamp(value, ctx.tz_hint)
        except UnparseableTimestamp:
            raise _Mismatch(path, self.expected, repr(value)) from None
        ctx.time_formats[result.interpretation] += 1
        return result.ms

    def encode(self, value):
        # small integers would read back as epoch seconds
        return value if abs(value) >= EPOCH_SECONDS_CUTOFF else render_iso(value)


class _StrList(Codec):
    expected = "array of strings"

    def decode(self, value, ctx, path):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise _Mismatch(path, self.expected, _json_type(value))
        return tuple(value)

    def encode(self, value):
        return list(value)

    to_canon = encode

    def from_canon(self, value):
        return tuple(value)


class _Choice(Codec):
    """Exact-match enum; unrecognized literals are preserved as plain strings."""

    expected = "string"

    def __init__(self, enum_cls: type[enum.Enum]) -> None:
        self.enum_cls = enum_cls

    def _lookup(self, literal: str) -> enum.Enum | str:
        try:
            return self.enum_cls(literal)
        except ValueError:
            return literal

    def decode(self, value, ctx, path):
        if not isinstance(value, str):
            raise _Mismatch(path, self.expected, _json_type(value))
        return self._lookup(value)

    def encode(self, value):
        return render_enum(value)

    to_canon = encode

    def from_canon(self, value):
        return None if value is None else self._lookup(value)


class _Nested(Codec):
    expected = "object"

    def __init__(self, cls: type) -> None:
        self.cls = cls

    def decode(self, value, ctx, path):
        return decode_record(self.cls, value, ctx, path)

    def encode(self, value):
        return encode_record(value)

    def to_canon(self, value):
        return to_dict(value)

    def from_canon(self, value):
        return from_dict(self.cls, value)


class _NestedList(_Nested):
    expected = "array of objects"

    def decode(self, value, ctx, path):
        if not isinstance(value, list):
            raise _Mismatch(path, self.expected, _json_type(value))
        return tuple(decode_record(self.cls, v, ctx, f"{path}[{i}]") for i, v in enumerate(value))

    def encode(self, value):
        return [encode_record(v) for v in value]

    def to_canon(self, value):
        return [to_dict(v) for v in value]

    def from_canon(self, value):
        return tuple(from_dict(self.cls, v) for v in value)


STR = _Str()
NONEMPTY = _Str(nonempty=True)
BOOL = _Bool()
TIME = _Time()
STRS = _StrList()


@dataclass(frozen=True)
class Field:
    attr: str
    wire: str
    codec: Codec
    required: bool = True


def _f(attr: str, wire: str, codec: Codec, required: bool = True) -> Field:
    return Field(attr, wire, codec, required)


# --------------------------------------------------------------------------
# record types


@dataclass(frozen=True)
class Activity:
    activity_id: str
    utterance_id: str
    transcript: str
    timestamp: int
    device_serial: str
    device_type: str
    customer_id: str
    activity_status: ActivityStatus | str
    response_summary: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Card:
    card_id: str
    card_type: str
    title: str
    timestamp: int
    subtitle: str | None = None
    linked_activity_id: str | None = None
    device_serial: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class UtteranceAudio:
    utterance_id: str
    audio_bytes: bytes
    content_digest: str

    @classmethod
    def from_bytes(cls, utterance_id: str, data: bytes) -> "UtteranceAudio":
        return cls(utterance_id, data, sha256_hex(data))

    def verify(self) -> bool:
        return sha256_hex(self.audio_bytes) == self.content_digest


@dataclass(frozen=True)
class PostalAddress:
    country: str | None = None
    county: str | None = None
    city: str | None = None
    postal_code: str | None = None
    street: str | None = None
    number: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class DeviceProfile:
    serial_number: str
    device_type: str
    device_account_id: str
    software_version: str | None = None
    mac_address: str | None = None
    friendly_name: str | None = None
    online: bool | None = None
    charging: bool | None = None
    locale: str | None = None
    timezone: str | None = None
    postal_address: PostalAddress | None = None
    temperature_unit: TemperatureUnit | str | None = None
    distance_unit: DistanceUnit | str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


_MAC_OCTETS = re.compile(r"^[0-9A-F]{2}(:[0-9A-F]{2}){5}$")


def normalize_mac(raw: str) -> str:
    """Uppercase, colon-separated form of a MAC address (input may use ``-`` or no separator)."""
    text = raw.strip().upper().replace("-", ":")
    if ":" not in text and len(text) == 12:
        text = ":".join(text[i : i + 2] for i in range(0, 12, 2))
    return text


@dataclass(frozen=True)
class WifiDetail:
    device_serial: str
    device_type: str
    mac_address: str
    essid: str
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def mac_normalized(self) -> str:
        return normalize_mac(self.mac_address)

    @property
    def mac_valid(self) -> bool:
        return bool(_MAC_OCTETS.match(self.mac_normalized))


@dataclass(frozen=True)
class PairedDevice:
    friendly_name: str
    connected: bool
    address: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class BluetoothPairing:
    device_serial: str
    paired_name: str
    connected: bool


@dataclass(frozen=True)
class BluetoothState:
    device_serial: str
    device_type: str
    paired_devices: tuple[PairedDevice, ...]
    friendly_name: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def pairings(self) -> tuple[BluetoothPairing, ...]:
        return tuple(BluetoothPairing(self.device_serial, p.friendly_name, p.connected) for p in self.paired_devices)


@dataclass(frozen=True)
class HouseholdMember:
    person_id: str
    first_name: str
    full_name: str
    role: Role | str
    email: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Contact:
    contact_id: str
    name: str
    phone_numbers: tuple[str, ...]
    emails: tuple[str, ...]
    postal_address: str | None = None
    source: ContactSource | str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def source_kind(self) -> ContactSource:
        return self.source if isinstance(self.source, ContactSource) else ContactSource.UNKNOWN


@dataclass(frozen=True)
class ListItem:
    item_id: str
    text: str
    completed: bool
    created_at: int
    updated_at: int
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class NamedList:
    list_id: str
    name: str
    created_at: int
    updated_at: int
    items: tuple[ListItem, ...] = ()
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class NamedListItems:
    """Body of the per-list items endpoint: one list id and its entries."""

    list_id: str
    items: tuple[ListItem, ...]
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ApplianceGroup:
    group_name: str
    member_device_ids: tuple[str, ...]
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Appliance:
    appliance_id: str
    name: str
    room: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SmartHomeTopology:
    groups: tuple[ApplianceGroup, ...]
    appliances: tuple[Appliance, ...]
    extras: dict[str, Any] = field(default_factory=dict)

    def dangling_members(self) -> tuple[tuple[str, str], ...]:
        """(group_name, member_id) pairs whose member is not a known appliance."""
        known = {a.appliance_id for a in self.appliances}
        return tuple(
            (g.group_name, m) for g in self.groups for m in g.member_device_ids if m not in known
        )


@dataclass(frozen=True)
class AccountIdentity:
    customer_id: str
    name: str
    email: str
    extras: dict[str, Any] = field(default_factory=dict)


# --------------------------------------------------------------------------
# field tables (the reference wire schema)

ACTIVITY_WIRE = (
    _f("activity_id", "activityId", STR),
    _f("utterance_id", "utteranceId", STR),
    _f("transcript", "transcript", STR),
    _f("timestamp", "creationTimestamp", TIME),
    _f("device_serial", "deviceSerialNumber", STR),
    _f("device_type", "deviceType", STR),
    _f("customer_id", "customerId", STR),
    _f("activity_status", "activityStatus", _Choice(ActivityStatus)),
    _f("response_summary", "responseSummary", STR, False),
)
CARD_WIRE = (
    _f("card_id", "id", STR),
    _f("card_type", "cardType", STR),
    _f("title", "title", STR),
    _f("subtitle", "subtitle", STR, False),
    _f("timestamp", "creationTimestamp", TIME),
    _f("linked_activity_id", "activityId", STR, False),
    _f("device_serial", "deviceSerialNumber", STR, False),
)
ADDRESS_WIRE = (
    _f("country", "countryCode", STR, False),
    _f("county", "county", STR, False),
    _f("city", "city", STR, False),
    _f("postal_code", "postalCode", STR, False),
    _f("street", "street", STR, False),
    _f("number", "houseNumber", STR, False),
)
DEVICE_WIRE = (
    _f("serial_number", "serialNumber", NONEMPTY),
    _f("device_type", "deviceType", STR),
    _f("device_account_id", "deviceAccountId", STR),
    _f("software_version", "softwareVersion", STR),
    _f("mac_address", "macAddress", STR, False),
    _f("friendly_name", "accountName", STR, False),
    _f("online", "online", BOOL, False),
    _f("charging", "charging", BOOL, False),
)
PREFERENCES_WIRE = (
    _f("serial_number", "deviceSerialNumber", NONEMPTY),
    _f("device_type", "deviceType", STR),
    _f("device_account_id", "deviceAccountId", STR),
    _f("locale", "locale", STR, False),
    _f("timezone", "timeZoneId", STR, False),
    _f("postal_address", "deviceAddressModel", _Nested(PostalAddress), False),
    _f("temperature_unit", "temperatureScaleUnit", _Choice(TemperatureUnit), False),
    _f("distance_unit", "distanceUnits", _Choice(DistanceUnit), False),
)
WIFI_WIRE = (
    _f("device_serial", "deviceSerialNumber", NONEMPTY),
    _f("device_type", "deviceType", STR),
    _f("mac_address", "macAddress", STR),
    _f("essid", "essid", STR),
)
PAIRED_WIRE = (
    _f("friendly_name", "friendlyName", STR),
    _f("connected", "connected", BOOL),
    _f("address", "address", STR, False),
)
BLUETOOTH_WIRE = (
    _f("device_serial", "deviceSerialNumber", NONEMPTY),
    _f("device_type", "deviceType", STR),
    _f("friendly_name", "friendlyName", STR, False),
    _f("paired_devices", "pairedDeviceList", _NestedList(PairedDevice)),
)
MEMBER_WIRE = (
    _f("person_id", "id", STR),
    _f("first_name", "firstName", STR),
    _f("full_name", "fullName", STR),
    _f("role", "role", _Choice(Role)),
    _f("email", "email", STR, False),
)
CONTACT_WIRE = (
    _f("contact_id", "id", STR),
    _f("name", "name", STR),
    _f("phone_numbers", "phoneNumbers", STRS),
    _f("emails", "emails", STRS),
    _f("postal_address", "address", STR, False),
    _f("source", "source", _Choice(ContactSource), False),
)
LIST_ITEM_WIRE = (
    _f("item_id", "id", STR),
    _f("text", "value", STR),
    _f("completed", "completed", BOOL),
    _f("created_at", "createdDateTime", TIME),
    _f("updated_at", "updatedDateTime", TIME),
)
NAMED_LIST_WIRE = (
    _f("list_id", "listId", STR),
    _f("name", "name", STR),
    _f("created_at", "createdDate", TIME),
    _f("updated_at", "updatedDate", TIME),
)
LIST_ITEMS_WIRE = (
    _f("list_id", "listId", STR),
    _f("items", "list", _NestedList(ListItem)),
)
GROUP_WIRE = (
    _f("group_name", "groupName", STR),
    _f("member_device_ids", "memberIds", STRS),
)
APPLIANCE_WIRE = (
    _f("appliance_id", "applianceId", STR),
    _f("name", "friendlyName", STR),
    _f("room", "room", STR, False),
)
TOPOLOGY_WIRE = (
    _f("groups", "applianceGroups", _NestedList(ApplianceGroup)),
    _f("appliances", "appliances", _NestedList(Appliance)),
)
IDENTITY_WIRE = (
    _f("customer_id", "customerId", NONEMPTY),
    _f("name", "customerName", STR),
    _f("email", "customerEmail", STR),
)

_WIRE: dict[type, tuple[Field, ...]] = {
    Activity: ACTIVITY_WIRE,
    Card: CARD_WIRE,
    PostalAddress: ADDRESS_WIRE,
    DeviceProfile: DEVICE_WIRE,
    WifiDetail: WIFI_WIRE,
    PairedDevice: PAIRED_WIRE,
    BluetoothState: BLUETOOTH_WIRE,
    HouseholdMember: MEMBER_WIRE,
    Contact: CONTACT_WIRE,
    ListItem: LIST_ITEM_WIRE,
    NamedList: NAMED_LIST_WIRE,
    NamedListItems: LIST_ITEMS_WIRE,
    ApplianceGroup: GROUP_WIRE,
    Appliance: APPLIANCE_WIRE,
    SmartHomeTopology: TOPOLOGY_WIRE,
    AccountIdentity: IDENTITY_WIRE,
}

# attributes absent from every wire table still need a canonical codec
_EXTRA_CANON: dict[type, dict[str, Codec]] = {
    DeviceProfile: {f.attr: f.codec for f in PREFERENCES_WIRE},
    NamedList: {"items": _NestedList(ListItem)},
}


def _canon_codecs(cls: type) -> dict[str, Codec]:
    codecs = {f.attr: f.codec for f in _WIRE[cls]}
    for attr, codec in _EXTRA_CANON.get(cls, {}).items():
        codecs.setdefault(attr, codec)
    return codecs


# --------------------------------------------------------------------------
# generic conversions


def decode_record(cls: type, obj: Any, ctx: _Context, path: str, table: Sequence[Field] | None = None) -> Any:
    if not isinstance(obj, dict):
        raise _Mismatch(path, "object", _json_type(obj))
    table = _WIRE[cls] if table is None else table
    kwargs: dict[str, Any] = {}
    extras: dict[str, Any] = {}
    claimed = set()
    for spec in table:
        claimed.add(spec.wire)
        value = obj.get(spec.wire)
        if value is None:
            if spec.required:
                raise _Mismatch(f"{path}.{spec.wire}", spec.codec.expected, "null" if spec.wire in obj else "missing")
            if spec.wire in obj:
                extras[spec.wire] = None
            continue
        kwargs[spec.attr] = spec.codec.decode(value, ctx, f"{path}.{spec.wire}")
    for key, value in obj.items():
        if key not in claimed:
            extras[key] = value
    return cls(**kwargs, extras=extras)


def encode_record(record: Any, table: Sequence[Field] | None = None) -> dict[str, Any]:
    table = _WIRE[type(record)] if table is None else table
    out: dict[str, Any] = {}
    for spec in table:
        value = getattr(record, spec.attr)
        if value is None:
            continue
        out[spec.wire] = spec.codec.encode(value)
    for key, value in record.extras.items():
        out.setdefault(key, value)
    return out


def to_wire(record: Any, table: Sequence[Field] | None = None) -> dict[str, Any]:
    """Render a record in the reference wire schema."""
    return encode_record(record, table)


def to_dict(record: Any) -> dict[str, Any]:
    """Canonical artifact form: snake_case attributes, enums as literals, extras kept."""
    codecs = _canon_codecs(type(record))
    out: dict[str, Any] = {}
    for fld in fields(record):
        value = getattr(record, fld.name)
        if fld.name == "extras":
            out["extras"] = dict(value)
        elif value is None:
            out[fld.name] = None
        else:
            out[fld.name] = codecs[fld.name].to_canon(value)
    return out


def from_dict(cls: type, data: Mapping[str, Any]) -> Any:
    codecs = _canon_codecs(cls)
    kwargs: dict[str, Any] = {}
    for fld in fields(cls):
        if fld.name not in data:
            continue
        value = data[fld.name]
        if fld.name == "extras":
            kwargs["extras"] = dict(value or {})
        elif value is None:
            kwargs[fld.name] = None
        else:
            kwargs[fld.name] = codecs[fld.name].from_canon(value)
    return cls(**kwargs)


# --------------------------------------------------------------------------
# endpoint parsing


@dataclass(frozen=True)
class _Envelope:
    cls: type
    key: str | None
    many: bool = True
    table: tuple[Field, ...] | None = None


_ENDPOINTS: dict[str, _Envelope] = {
    "activities": _Envelope(Activity, "activities"),
    "bluetooth": _Envelope(BluetoothState, "bluetoothStates"),
    "bootstrap": _Envelope(AccountIdentity, "authentication", many=False),
    "household": _Envelope(HouseholdMember, "accounts"),
    "cards": _Envelope(Card, "cards"),
    "contacts": _Envelope(Contact, "contacts"),
    "device-preferences": _Envelope(DeviceProfile, "devicePreferences", table=PREFERENCES_WIRE),
    "device-wifi-details": _Envelope(WifiDetail, None, many=False),
    "devices-v2": _Envelope(DeviceProfile, "devices"),
    "namedLists": _Envelope(NamedList, "lists"),
    "namedLists-items": _Envelope(NamedListItems, None, many=False),
    "phoenix": _Envelope(SmartHomeTopology, None, many=False),
}

_PAGINATION_KEYS = frozenset(
    {"nextToken", "continuationToken", "paginationToken", "nextPageToken", "startTime", "endTime"}
)


def typed_endpoints() -> frozenset[str]:
    return frozenset(_ENDPOINTS)


def envelope_table(endpoint_id: str) -> tuple[Field, ...] | None:
    env = _ENDPOINTS[endpoint_id]
    return env.table


@dataclass(frozen=True)
class Parsed:
    """Typed result of parsing one endpoint body."""

    endpoint_id: str
    artifacts: tuple[Any, ...]
    envelope_extras: dict[str, Any] = field(default_factory=dict)
    flags: tuple[InvariantFlag, ...] = ()
    time_formats: dict[str, int] = field(default_factory=dict)

    kind: ClassVar[str] = "typed"

    @property
    def artifact_type(self) -> str:
        return _ENDPOINTS[self.endpoint_id].cls.__name__

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "endpoint_id": self.endpoint_id,
            "artifact_type": self.artifact_type,
            "artifacts": [to_dict(a) for a in self.artifacts],
            "envelope_extras": self.envelope_extras,
            "flags": [f.to_dict() for f in self.flags],
            "time_formats": dict(sorted(self.time_formats.items())),
        }


@dataclass(frozen=True)
class RawPassthrough:
    endpoint_id: str
    body: Any

    kind: ClassVar[str] = "raw"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "endpoint_id": self.endpoint_id, "body": self.body}


def parse_artifact(endpoint_id: str, body: Any, tz_hint: str | None = None) -> Parsed | RawPassthrough:
    """Parse a JSON body from ``endpoint_id``.

    Endpoints without a typed parser come back as :class:`RawPassthrough`.
    Raises :class:`SchemaMismatch` (carrying the body) when a required field is
    missing or mistyped; nothing else escapes for any JSON input.
    """
    env = _ENDPOINTS.get(endpoint_id)
    if env is None:
        return RawPassthrough(endpoint_id, body)
    ctx = _Context(tz_hint)
    try:
        artifacts, envelope_extras = _decode_envelope(env, body, ctx)
    except _Mismatch as exc:
        raise SchemaMismatch(endpoint_id, exc.path, exc.expected, exc.found, body) from None
    flags = list(_check_all(endpoint_id, artifacts))
    for key in sorted(_PAGINATION_KEYS & set(envelope_extras)):
        flags.append(InvariantFlag(f"$.{key}", "pagination", "continuation field present; not followed", "warning"))
    return Parsed(endpoint_id, tuple(artifacts), envelope_extras, tuple(flags), dict(ctx.time_formats))


def _decode_envelope(env: _Envelope, body: Any, ctx: _Context) -> tuple[list[Any], dict[str, Any]]:
    if env.key is None:
        return [decode_record(env.cls, body, ctx, "$", env.table)], {}
    if not isinstance(body, dict):
        raise _Mismatch("$", "object", _json_type(body))
    if env.key not in body:
        raise _Mismatch(f"$.{env.key}", "array" if env.many else "object", "missing")
    inner = body[env.key]
    extras = {k: v for k, v in body.items() if k != env.key}
    path = f"$.{env.key}"
    if not env.many:
        return [decode_record(env.cls, inner, ctx, path, env.table)], extras
    if not isinstance(inner, list):
        raise _Mismatch(path, "array", _json_type(inner))
    return [decode_record(env.cls, item, ctx, f"{path}[{i}]", env.table) for i, item in enumerate(inner)], extras


def wire_body(endpoint_id: str, artifacts: Sequence[Any], envelope_extras: Mapping[str, Any] | None = None) -> Any:
    """Inverse of :func:`parse_artifact` for typed endpoints."""
    env = _ENDPOINTS[endpoint_id]
    encoded = [encode_record(a, env.table) for a in artifacts]
    if env.key is None:
        if len(encoded) != 1:
            raise ValueError(f"{endpoint_id} carries exactly one object")
        return encoded[0]
    body: dict[str, Any] = dict(envelope_extras or {})
    body[env.key] = encoded if env.many else encoded[0]
    return body


# --------------------------------------------------------------------------
# invariant checks (recorded as flags, never raised)


def _check_all(endpoint_id: str, artifacts: Sequence[Any]) -> Iterable[InvariantFlag]:
    env = _ENDPOINTS[endpoint_id]
    base = "$" if env.key is None else f"$.{env.key}"
    seen: dict[Any, int] = {}
    for i, art in enumerate(artifacts):
        path = base if not env.many else f"{base}[{i}]"
        yield from check_record(art, path)
        key = _unique_key(art)
        if key is not None:
            if key in seen:
                yield InvariantFlag(path, "unique", f"duplicate {key!r} (first at index {seen[key]})")
            else:
                seen[key] = i
    if endpoint_id == "bluetooth":
        pairs: set[tuple[str, str]] = set()
        for state in artifacts:
            for p in state.pairings():
                if (p.device_serial, p.paired_name) in pairs:
                    yield InvariantFlag(base, "unique", f"duplicate pairing {p.device_serial}/{p.paired_name}")
                pairs.add((p.device_serial, p.paired_name))


def _unique_key(art: Any) -> Any:
    if isinstance(art, Card):
        return ("card", art.card_id)
    if isinstance(art, NamedList):
        return ("list", art.list_id)
    return None


def check_record(art: Any, path: str = "$") -> list[InvariantFlag]:
    """Invariant violations on a single record (empty when it is consistent)."""
    out: list[InvariantFlag] = []
    if isinstance(art, (NamedList, ListItem)) and art.updated_at < art.created_at:
        out.append(InvariantFlag(path, "updated_at>=created_at", f"updated_at {art.updated_at} < created_at {art.created_at}"))
    if isinstance(art, (NamedList, NamedListItems)):
        ids = Counter(item.item_id for item in art.items)
        for item_id, n in sorted(ids.items()):
            if n > 1:
                out.append(InvariantFlag(path, "unique", f"item id {item_id!r} appears {n} times"))
        for j, item in enumerate(art.items):
            out.extend(check_record(item, f"{path}.items[{j}]"))
    if isinstance(art, WifiDetail) and not art.mac_valid:
        out.append(InvariantFlag(path, "mac_address", f"{art.mac_address!r} is not six hex octets"))
    if isinstance(art, DeviceProfile) and art.timezone is not None:
        try:
            resolve_timezone(art.timezone)
        except KeyError:
            out.append(InvariantFlag(path, "timezone", f"{art.timezone!r} not in tz database"))
    if isinstance(art, Contact) and not (art.name or art.phone_numbers or art.emails):
        out.append(InvariantFlag(path, "contact_nonempty", "name, phone numbers and emails all empty"))
    if isinstance(art, SmartHomeTopology):
        for group, member in art.dangling_members():
            out.append(InvariantFlag(path, "dangling_member", f"group {group!r} references unknown {member!r}", "warning"))
    return out
