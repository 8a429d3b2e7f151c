"""Intercepting-proxy XML export ingestion.

Pipeline: :func:`parse_export` (XML to raw items, malformed items set aside
with their byte offsets) -> :func:`filter_and_simplify` (host allowlist and
JSON MIME filter, conversion to :class:`ApiRecord`) -> :func:`dedupe`.
:func:`ingest` runs all three and returns a report in which every input item
is accounted for.
"""

from __future__ import annotations

import base64
import binascii
import fnmatch
import gzip
import logging
import re
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, NamedTuple, Sequence
from urllib.parse import urlsplit
from xml.parsers import expat

from .records import ApiRecord, is_json_mime
from .timestamps import UnparseableTimestamp, normalize_timestamp

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_ALLOWLIST",
    "CaptureExport",
    "CaptureItem",
    "DedupeReport",
    "IngestReport",
    "IngestResult",
    "NotAnExport",
    "Reject",
    "dedupe",
    "filter_and_simplify",
    "ingest",
    "parse_export",
]

DEFAULT_ALLOWLIST = ("alexa.amazon.com", "alexa.amazon.co.uk", "alexa-comms-mobile-service.amazon.co.uk")
AUDIO_PATH_PREFIX = "/api/utterance/audio/data"

_ITEM_FIELDS = ("url", "method", "status", "mimetype", "response", "time", "host")

# abbreviations the proxy writes in its <time> element
_ZONE_OFFSETS = {
    "UTC": 0, "GMT": 0, "Z": 0, "WET": 0, "BST": 60, "IST": 60, "WEST": 60,
    "CET": 60, "CEST": 120, "EET": 120, "EEST": 180,
    "EST": -300, "EDT": -240, "CST": -360, "CDT": -300, "MST": -420, "MDT": -360, "PST": -480, "PDT": -420,
}
_MONTHS = {m: i for i, m in enumerate(
    ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"), start=1)}
_PROXY_TIME = re.compile(r"^\w{3} (\w{3}) +(\d{1,2}) (\d{2}):(\d{2}):(\d{2}) (\w+) (\d{4})$")


class NotAnExport(ValueError):
    """The input is not XML in the proxy export dialect."""


@dataclass(frozen=True)
class CaptureItem:
    index: int
    offset: int
    url: str
    method: str
    status: int
    mimetype: str
    response_base64: bool
    response_payload: str
    time: str | None = None
    host: str | None = None

    @property
    def hostname(self) -> str:
        return (urlsplit(self.url).hostname or self.host or "").lower()

    def raw_response(self) -> bytes:
        """Decode the stored response (base64 only when flagged)."""
        if self.response_base64:
            return base64.b64decode(self.response_payload, validate=True)
        return self.response_payload.encode("utf-8")

    def response_parts(self) -> tuple[dict[str, str], bytes]:
        """Split a full HTTP response into (lowercased headers, body)."""
        raw = self.raw_response()
        if not raw.startswith(b"HTTP/"):
            return {}, raw
        head, sep, body = raw.partition(b"\r\n\r\n")
        if not sep:
            head, sep, body = raw.partition(b"\n\n")
        headers: dict[str, str] = {}
        for line in head.decode("iso-8859-1").splitlines()[1:]:
            name, colon, value = line.partition(":")
            if colon:
                headers[name.strip().lower()] = value.strip()
        encoding = headers.get("content-encoding", "").lower()
        if encoding == "gzip":
            body = gzip.decompress(body)
        elif encoding == "deflate":
            body = zlib.decompress(body)
        return headers, body


@dataclass(frozen=True)
class Reject:
    index: int
    offset: int
    reason: str
    fields: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class CaptureExport:
    items: tuple[CaptureItem, ...]
    rejects: tuple[Reject, ...] = ()

    @property
    def total(self) -> int:
        return len(self.items) + len(self.rejects)


class _ExportBuilder:
    def __init__(self, parser: expat.XMLParserType) -> None:
        self.parser = parser
        self.depth = 0
        self.root: str | None = None
        self.index = 0
        self.offset = 0
        self.current: dict[str, str] | None = None
        self.attrs: dict[str, dict[str, str]] = {}
        self.field_name: str | None = None
        self.text: list[str] = []
        self.items: list[CaptureItem] = []
        self.rejects: list[Reject] = []

    def start(self, name: str, attrs: dict[str, str]) -> None:
        self.depth += 1
        if self.depth == 1:
            self.root = name
        elif self.depth == 2 and name == "item":
            self.current = {}
            self.attrs = {}
            self.offset = self.parser.CurrentByteIndex
        elif self.depth == 3 and self.current is not None:
            self.field_name = name
            self.attrs[name] = attrs
            self.text = []

    def chars(self, data: str) -> None:
        if self.field_name is not None:
            self.text.append(data)

    def end(self, name: str) -> None:
        if self.depth == 3 and self.field_name is not None and self.current is not None:
            self.current[self.field_name] = "".join(self.text)
            self.field_name = None
        elif self.depth == 2 and self.current is not None:
            self._finish_item()
            self.current = None
        self.depth -= 1

    def _finish_item(self) -> None:
        assert self.current is not None
        raw = self.current
        index, offset = self.index, self.offset
        self.index += 1
        kept = {k: raw[k] for k in _ITEM_FIELDS if k in raw and k != "response"}

        def reject(reason: str) -> None:
            self.rejects.append(Reject(index, offset, reason, kept))

        url = raw.get("url", "").strip()
        if not url:
            return reject("missing url")
        parts = urlsplit(url)
        if not parts.scheme or not parts.netloc:
            return reject("url is not absolute")
        method = raw.get("method", "").strip()
        if not method:
            return reject("missing method")
        status_text = raw.get("status", "").strip()
        if not status_text:
            return reject("no response status")
        try:
            status = int(status_text)
        except ValueError:
            return reject(f"status {status_text!r} is not an integer")
        if not 100 <= status <= 599:
            return reject(f"status {status} outside 100..599")
        b64 = self.attrs.get("response", {}).get("base64", "false").lower() == "true"
        self.items.append(
            CaptureItem(
                index=index,
                offset=offset,
                url=url,
                method=method.upper(),
                status=status,
                mimetype=raw.get("mimetype", "").strip(),
                response_base64=b64,
                response_payload=raw.get("response", ""),
                time=raw.get("time", "").strip() or None,
                host=raw.get("host", "").strip() or None,
            )
        )


def parse_export(xml_bytes: bytes) -> CaptureExport:
    """Read a proxy export: ``<items>`` root with repeated ``<item>`` children.

    Raises :class:`NotAnExport` when the root is missing or is not ``items``,
    or the document is not well-formed XML.
    """
    parser = expat.ParserCreate()
    builder = _ExportBuilder(parser)
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.chars
    try:
        parser.Parse(xml_bytes, True)
    except expat.ExpatError as exc:
        raise NotAnExport(f"malformed XML: {exc}") from exc
    if builder.root is None:
        raise NotAnExport("no root element")
    if builder.root != "items":
        raise NotAnExport(f"root element is <{builder.root}>, expected <items>")
    return CaptureExport(tuple(builder.items), tuple(builder.rejects))


def parse_proxy_time(text: str | None) -> int | None:
    """Epoch ms from the proxy's ``Tue Aug 06 15:54:00 BST 2019`` form (or ISO / epoch)."""
    if not text:
        return None
    m = _PROXY_TIME.match(text.strip())
    if m:
        mon, day, hh, mm, ss, zone, year = m.groups()
        if mon not in _MONTHS or zone.upper() not in _ZONE_OFFSETS:
            return None
        offset = timezone(timedelta(minutes=_ZONE_OFFSETS[zone.upper()]))
        try:
            moment = datetime(int(year), _MONTHS[mon], int(day), int(hh), int(mm), int(ss), tzinfo=offset)
        except ValueError:
            return None
        return int(moment.timestamp()) * 1000
    try:
        return normalize_timestamp(text).ms
    except UnparseableTimestamp:
        return None


def _host_allowed(host: str, allowlist: Sequence[str]) -> bool:
    return any(fnmatch.fnmatchcase(host, pattern.lower()) for pattern in allowlist)


class FilterStats(NamedTuple):
    dropped_host: int
    dropped_mime: int
    undecodable: int


def _filter(export: CaptureExport, allowlist: Sequence[str]) -> tuple[list[ApiRecord], FilterStats]:
    if not allowlist:
        raise ValueError("domain allowlist must not be empty")
    records: list[ApiRecord] = []
    dropped_host = dropped_mime = undecodable = 0
    for item in export.items:
        if not _host_allowed(item.hostname, allowlist):
            dropped_host += 1
            continue
        is_audio = urlsplit(item.url).path.startswith(AUDIO_PATH_PREFIX)
        try:
            headers, body = item.response_parts()
        except (binascii.Error, ValueError, OSError, EOFError, zlib.error) as exc:
            logger.warning("item %d at byte %d: undecodable response (%s)", item.index, item.offset, exc)
            undecodable += 1
            continue
        mime = headers.get("content-type") or item.mimetype
        if not (is_audio or is_json_mime(item.mimetype) or is_json_mime(headers.get("content-type"))):
            dropped_mime += 1
            continue
        records.append(
            ApiRecord.from_bytes(
                item.url,
                item.method,
                item.status,
                mime,
                body,
                captured_at=parse_proxy_time(item.time),
            )
        )
    return records, FilterStats(dropped_host, dropped_mime, undecodable)


def filter_and_simplify(export: CaptureExport, domain_allowlist: Sequence[str] = DEFAULT_ALLOWLIST) -> list[ApiRecord]:
    """Keep allowlisted hosts with JSON responses (or utterance audio) as ApiRecords."""
    return _filter(export, domain_allowlist)[0]


class DedupeReport(NamedTuple):
    kept: int
    dup_removed: int
    empty_removed: int


class DedupeResult(NamedTuple):
    records: list[ApiRecord]
    report: DedupeReport


def dedupe(records: Iterable[ApiRecord]) -> DedupeResult:
    """Drop empty bodies and repeated (canonical url, body digest) pairs.

    Of a duplicate group the earliest capture survives (position breaks ties);
    survivors keep their input order.
    """
    records = list(records)
    empty = 0
    best: dict[tuple[str, str], int] = {}
    for pos, rec in enumerate(records):
        if rec.is_empty:
            empty += 1
            continue
        key = (rec.canonical_url, rec.body_digest)
        if key not in best or _earlier(rec, pos, records[best[key]], best[key]):
            best[key] = pos
    keep = sorted(best.values())
    kept = [records[i] for i in keep]
    dups = len(records) - empty - len(kept)
    return DedupeResult(kept, DedupeReport(len(kept), dups, empty))


def _earlier(a: ApiRecord, pos_a: int, b: ApiRecord, pos_b: int) -> bool:
    inf = float("inf")
    ka = (a.captured_at if a.captured_at is not None else inf, pos_a)
    kb = (b.captured_at if b.captured_at is not None else inf, pos_b)
    return ka < kb


@dataclass(frozen=True)
class IngestReport:
    total: int
    rejected: int
    dropped_host: int
    dropped_mime: int
    undecodable: int
    dup_removed: int
    empty_removed: int
    kept: int

    @property
    def balanced(self) -> bool:
        removed = (self.rejected + self.dropped_host + self.dropped_mime + self.undecodable
                   + self.dup_removed + self.empty_removed)
        return self.kept + removed == self.total

    def to_dict(self) -> dict[str, int | bool]:
        return {
            "total": self.total,
            "rejected": self.rejected,
            "dropped_host": self.dropped_host,
            "dropped_mime": self.dropped_mime,
            "undecodable": self.undecodable,
            "dup_removed": self.dup_removed,
            "empty_removed": self.empty_removed,
            "kept": self.kept,
            "balanced": self.balanced,
        }


class IngestResult(NamedTuple):
    export: CaptureExport
    records: list[ApiRecord]
    report: IngestReport


def ingest(xml_bytes: bytes, domain_allowlist: Sequence[str] = DEFAULT_ALLOWLIST) -> IngestResult:
    export = parse_export(xml_bytes)
    filtered, stats = _filter(export, domain_allowlist)
    records, dd = dedupe(filtered)
    report = IngestReport(
        total=export.total,
        rejected=len(export.rejects),
        dropped_host=stats.dropped_host,
        dropped_mime=stats.dropped_mime,
        undecodable=stats.undecodable,
        dup_removed=dd.dup_removed,
        empty_removed=dd.empty_removed,
        kept=dd.kept,
    )
    return IngestResult(export, records, report)
