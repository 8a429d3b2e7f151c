"""The known Alexa management API surface.

One descriptor per discovered ``/api/...`` path, plus the contacts endpoint on
the comms host and the utterance audio endpoint. Path templates use a fixed
placeholder vocabulary; see :data:`PLACEHOLDERS`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping
from urllib.parse import parse_qsl, quote, unquote, urlsplit

from .model import ArtifactCategory, typed_endpoints

__all__ = [
    "ALEXA_HOST",
    "COMMS_HOST",
    "EndpointDescriptor",
    "MissingBinding",
    "PLACEHOLDERS",
    "TABLE_ROWS",
    "get",
    "match_url",
    "registry",
]

ALEXA_HOST = "alexa.amazon.com"
COMMS_HOST = "alexa-comms-mobile-service.amazon.co.uk"

PLACEHOLDERS = frozenset({"device_serial", "device_type", "list_id", "user_id", "utterance_id"})

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


class MissingBinding(KeyError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"missing binding for placeholder {{{self.name}}}"


@dataclass(frozen=True)
class EndpointDescriptor:
    endpoint_id: str
    host: str
    path_template: str
    category: ArtifactCategory
    notes: str = ""
    json_body: bool = True

    @property
    def typed_parser(self) -> bool:
        return self.endpoint_id in typed_endpoints()

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(_PLACEHOLDER.findall(self.path_template)))

    def render(self, bindings: Mapping[str, str] | None = None) -> str:
        """Fill placeholders; raises :class:`MissingBinding` for any unbound or empty one."""
        bindings = bindings or {}

        def fill(match: re.Match[str]) -> str:
            name = match.group(1)
            value = bindings.get(name)
            if value is None or value == "":
                raise MissingBinding(name)
            return quote(str(value), safe="")

        return _PLACEHOLDER.sub(fill, self.path_template)

    def to_dict(self) -> dict[str, object]:
        return {
            "endpoint_id": self.endpoint_id,
            "host": self.host,
            "path_template": self.path_template,
            "category": self.category.value,
            "typed_parser": self.typed_parser,
            "json_body": self.json_body,
            "notes": self.notes,
        }


C = ArtifactCategory

# (endpoint_id, path_template, category, notes) for each discovered /api path, in table order.
TABLE_ROWS: tuple[tuple[str, str, ArtifactCategory, str], ...] = (
    ("activities", "/api/activities", C.USER_ACTIVITY, "voice interaction history"),
    ("activity-privacy-link", "/api/activity/privacy-link", C.UNCATEGORIZED, ""),
    ("allowed-providers", "/api/allowed-providers", C.UNCATEGORIZED, ""),
    ("amazon-music-benefits", "/api/amazon-music-benefits", C.UNCATEGORIZED, ""),
    ("app-version-info", "/api/app-version-info", C.UNCATEGORIZED, ""),
    ("available-mid-field", "/api/available-mid-field", C.UNCATEGORIZED, ""),
    (
        "bluetooth",
        "/api/bluetooth?deviceSerialNumber={device_serial}&deviceType={device_type}",
        C.COMPATIBLE_DEVICE,
        "paired devices; queried once per Echo device",
    ),
    ("bootstrap", "/api/bootstrap", C.ACCOUNT, "name, email and customer id"),
    ("cards", "/api/cards", C.USER_ACTIVITY, "tile rendering of recent interactions"),
    ("communications-providers", "/api/communications/providers", C.UNCATEGORIZED, ""),
    ("customer-status", "/api/customer-status", C.UNCATEGORIZED, ""),
    ("detect-first-run-devices", "/api/detect-first-run-devices", C.UNCATEGORIZED, ""),
    ("device-preferences", "/api/device-preferences", C.CUSTOMER_SETTING, "locale, time zone, address, units"),
    (
        "device-wifi-details",
        "/api/device-wifi-details?deviceSerialNumber={device_serial}&deviceType={device_type}",
        C.CUSTOMER_SETTING,
        "MAC address and ESSID of one device",
    ),
    ("devices-v2", "/api/devices-v2/device", C.ALEXA_ENABLED_DEVICE, "software version, MAC, online state"),
    ("dnd-device-status-list", "/api/dnd/device-status-list", C.UNCATEGORIZED, ""),
    ("dnd-schedule", "/api/dnd/schedule", C.UNCATEGORIZED, ""),
    ("feature-alert", "/api/feature-alert", C.UNCATEGORIZED, ""),
    ("feature-alert-location", "/api/feature-alert-location", C.UNCATEGORIZED, ""),
    ("featureaccess-v3", "/api/featureaccess-v3", C.UNCATEGORIZED, ""),
    (
        "device-gadgets",
        "/api/gadgets/{device_serial}/{device_type}/device-gadgets",
        C.UNCATEGORIZED,
        "source shows XXX/YYYY; bound to serial/type, unconfirmed",
    ),
    ("get-customer-pfm", "/api/get-customer-pfm", C.UNCATEGORIZED, ""),
    ("get-languages", "/api/get-languages", C.UNCATEGORIZED, ""),
    ("video-skills", "/api/video-skills/videoSkills", C.SKILL, ""),
    ("household", "/api/household", C.ACCOUNT, "members with ADULT/CHILD role"),
    ("kedevice", "/api/kedevice", C.UNCATEGORIZED, ""),
    ("language", "/api/language", C.UNCATEGORIZED, ""),
    ("lemur-access", "/api/lemur/access/", C.UNCATEGORIZED, ""),
    ("lists-fetchUserPreference", "/api/lists/fetchUserPreference", C.UNCATEGORIZED, ""),
    ("lists-linkedPartners", "/api/lists/linkedPartners", C.UNCATEGORIZED, ""),
    ("lists-listPartners", "/api/lists/listPartners", C.UNCATEGORIZED, ""),
    ("media-historical-queues", "/api/media/historical-queues", C.USER_ACTIVITY, "music history"),
    ("metrics-batch", "/api/metrics-batch", C.UNCATEGORIZED, ""),
    ("music-account-details", "/api/music-account-details", C.UNCATEGORIZED, ""),
    ("music-curated", "/api/music/curated", C.UNCATEGORIZED, ""),
    ("music-settings", "/api/music/settings", C.UNCATEGORIZED, ""),
    ("namedLists", "/api/namedLists", C.USER_ACTIVITY, "index of lists; To-do and Shopping always exist"),
    (
        "namedLists-items",
        "/api/namedLists/{list_id}/items",
        C.USER_ACTIVITY,
        "source shows ZZZ; bound to list ids from namedLists",
    ),
    ("notifications", "/api/notifications", C.USER_ACTIVITY, "alarms, timers, reminders"),
    ("np-player", "/api/np/player", C.USER_ACTIVITY, "now playing"),
    ("np-queue", "/api/np/queue", C.USER_ACTIVITY, "play queue"),
    ("partner-authorization-details", "/api/partner-authorization/details", C.UNCATEGORIZED, ""),
    ("phoenix", "/api/phoenix", C.COMPATIBLE_DEVICE, "smart home groups and appliances"),
    ("salmon-preferences", "/api/salmon/preferences", C.UNCATEGORIZED, ""),
    ("server-image", "/api/server-image", C.UNCATEGORIZED, ""),
    ("strings", "/api/strings", C.UNCATEGORIZED, ""),
    ("third-party", "/api/third-party", C.CUSTOMER_SETTING, "third-party services"),
    ("traffic-settings", "/api/traffic/settings", C.CUSTOMER_SETTING, "commute origin/destination"),
    ("wake-word", "/api/wake-word", C.UNCATEGORIZED, ""),
    ("wake-words-locale", "/api/wake-words-locale", C.UNCATEGORIZED, ""),
)


@lru_cache(maxsize=1)
def _build() -> tuple[EndpointDescriptor, ...]:
    rows = [EndpointDescriptor(eid, ALEXA_HOST, path, cat, notes) for eid, path, cat, notes in TABLE_ROWS]
    rows.append(
        EndpointDescriptor("contacts", COMMS_HOST, "/user/{user_id}/contacts", C.ACCOUNT, "address book; comms host")
    )
    rows.append(
        EndpointDescriptor(
            "utterance-audio",
            ALEXA_HOST,
            "/api/utterance/audio/data?id={utterance_id}",
            C.AUDIO_DATA,
            "raw voice recording; not JSON",
            json_body=False,
        )
    )
    return tuple(rows)


def registry() -> list[EndpointDescriptor]:
    """All descriptors in a fixed order. Descriptors are immutable."""
    return list(_build())


def get(endpoint_id: str) -> EndpointDescriptor | None:
    return _by_id().get(endpoint_id)


@lru_cache(maxsize=1)
def _by_id() -> dict[str, EndpointDescriptor]:
    return {d.endpoint_id: d for d in _build()}


@lru_cache(maxsize=1)
def _matchers() -> tuple[tuple[re.Pattern[str], dict[str, str], EndpointDescriptor], ...]:
    out = []
    for desc in _build():
        path, _, query = desc.path_template.partition("?")
        parts = []
        pos = 0
        for m in _PLACEHOLDER.finditer(path):
            parts.append(re.escape(path[pos : m.start()]))
            parts.append(f"(?P<{m.group(1)}>[^/]+)")
            pos = m.end()
        parts.append(re.escape(path[pos:].rstrip("/")))
        pattern = re.compile("^" + "".join(parts) + "/?$")
        query_map = {}
        for key, value in parse_qsl(query, keep_blank_values=True):
            m = _PLACEHOLDER.fullmatch(value)
            if m:
                query_map[key] = m.group(1)
        out.append((pattern, query_map, desc))
    return tuple(out)


def match_url(url: str) -> tuple[EndpointDescriptor, dict[str, str]] | None:
    """Find the descriptor whose path template matches ``url``; host is not checked.

    Query placeholders are bound when present in the URL but are not required
    for a match.
    """
    parts = urlsplit(url)
    path = parts.path or "/"
    query = dict(parse_qsl(parts.query, keep_blank_values=True))
    for pattern, query_map, desc in _matchers():
        m = pattern.match(path)
        if not m:
            continue
        bindings = {k: unquote(v) for k, v in m.groupdict().items()}
        for key, name in query_map.items():
            if key in query:
                bindings[name] = query[key]
        return desc, bindings
    return None
