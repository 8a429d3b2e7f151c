"""Evidence cases: sealed, digest-manifested sets of raw records and parsed artifacts.

On-disk layout of one case directory::

    manifest.json            written last; digests of everything below
    capture.jsonl            one ApiRecord per line, canonical JSON
    audio/<digest>.bin       raw utterance recordings
    parsed/<endpoint_id>.json
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence
from urllib.parse import parse_qsl, urlsplit

from . import __version__
from .canonical import canonical_json, json_digest, sha256_hex
from .model import (
    AccountIdentity,
    Activity,
    BluetoothState,
    Card,
    Contact,
    DeviceProfile,
    HouseholdMember,
    InvariantFlag,
    NamedList,
    NamedListItems,
    Parsed,
    RawPassthrough,
    SchemaMismatch,
    SmartHomeTopology,
    UtteranceAudio,
    WifiDetail,
    parse_artifact,
)
from .records import ApiRecord
from .registry import match_url
from .timestamps import normalize_timestamp, render_iso

__all__ = [
    "AudioPresence",
    "CaseIntegrityError",
    "CaseSource",
    "EvidenceCase",
    "ParseOutcome",
    "load_case",
    "write_case",
]

SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
CAPTURE = "capture.jsonl"
AUDIO_ENDPOINT = "utterance-audio"


class CaseSource(str, enum.Enum):
    LIVE = "LiveAcquisition"
    CAPTURE = "CaptureImport"
    MOCK = "MockAcquisition"


class AudioPresence(str, enum.Enum):
    PRESENT = "Present"
    ABSENT_CONFIRMED = "AbsentConfirmed"
    NOT_CHECKED = "NotChecked"


class CaseIntegrityError(RuntimeError):
    """A sealed case no longer matches its manifest."""


@dataclass(frozen=True)
class ParseOutcome:
    record_index: int
    endpoint_id: str
    result: Parsed | RawPassthrough | SchemaMismatch | None  # None: nothing to parse

    def to_dict(self, record: ApiRecord) -> dict[str, Any]:
        out: dict[str, Any] = {"record_index": self.record_index, "url": record.url, "status": record.status}
        if isinstance(self.result, SchemaMismatch):
            out["outcome"] = {"kind": "mismatch", **self.result.to_dict()}
        elif self.result is not None:
            out["outcome"] = self.result.to_dict()
        elif record.failure:
            out["outcome"] = {"kind": "http_failure", "failure": record.failure}
        elif record.endpoint_id == AUDIO_ENDPOINT:
            out["outcome"] = {"kind": "audio", "utterance_id": utterance_id_of(record.url), "digest": record.body_digest}
        else:
            out["outcome"] = {"kind": "unparsed", "body_encoding": record.body_encoding}
        return out


def utterance_id_of(url: str) -> str | None:
    return dict(parse_qsl(urlsplit(url).query)).get("id")


def _resolve_endpoint(record: ApiRecord) -> ApiRecord:
    if record.endpoint_id is not None:
        return record
    hit = match_url(record.url)
    return replace(record, endpoint_id=hit[0].endpoint_id) if hit else record


def _parse(index: int, record: ApiRecord, tz_hint: str | None) -> ParseOutcome | None:
    if record.endpoint_id is None:
        return None
    if not record.ok or not record.is_json or record.endpoint_id == AUDIO_ENDPOINT:
        return ParseOutcome(index, record.endpoint_id, None)
    try:
        result: Parsed | RawPassthrough | SchemaMismatch = parse_artifact(record.endpoint_id, record.response_body, tz_hint)
    except SchemaMismatch as exc:
        result = exc
    return ParseOutcome(index, record.endpoint_id, result)


@dataclass(frozen=True)
class EvidenceCase:
    """An immutable snapshot of one account: raw records plus everything parsed from them."""

    case_id: str
    source: CaseSource
    records: tuple[ApiRecord, ...]
    created_at: int | None = None
    config: dict[str, Any] = field(default_factory=dict)
    tool_version: str = __version__
    tz_hint: str | None = None

    @classmethod
    def build(
        cls,
        case_id: str,
        source: CaseSource,
        records: Iterable[ApiRecord],
        *,
        created_at: int | None = None,
        config: Mapping[str, Any] | None = None,
        tz_hint: str | None = None,
    ) -> "EvidenceCase":
        resolved = tuple(_resolve_endpoint(r) for r in records)
        return cls(case_id, CaseSource(source), resolved, created_at, dict(config or {}), __version__, tz_hint)

    # ---------------------------------------------------------------- parsing

    @cached_property
    def outcomes(self) -> tuple[ParseOutcome, ...]:
        out = []
        for i, rec in enumerate(self.records):
            outcome = _parse(i, rec, self.tz_hint)
            if outcome is not None:
                out.append(outcome)
        return tuple(out)

    def parsed(self, endpoint_id: str) -> list[Parsed]:
        return [o.result for o in self.outcomes if o.endpoint_id == endpoint_id and isinstance(o.result, Parsed)]

    def artifacts(self, endpoint_id: str) -> list[Any]:
        return [a for p in self.parsed(endpoint_id) for a in p.artifacts]

    def raw_bodies(self, endpoint_id: str) -> list[Any]:
        return [o.result.body for o in self.outcomes
                if o.endpoint_id == endpoint_id and isinstance(o.result, RawPassthrough)]

    @property
    def mismatches(self) -> list[SchemaMismatch]:
        return [o.result for o in self.outcomes if isinstance(o.result, SchemaMismatch)]

    @property
    def flags(self) -> list[tuple[str, InvariantFlag]]:
        return [(o.endpoint_id, f) for o in self.outcomes if isinstance(o.result, Parsed) for f in o.result.flags]

    @property
    def http_failures(self) -> list[ApiRecord]:
        return [r for r in self.records if r.failure]

    def endpoint_ids(self) -> list[str]:
        return sorted({r.endpoint_id for r in self.records if r.endpoint_id and r.ok})

    # -------------------------------------------------------------- accessors

    def activities(self) -> list[Activity]:
        return self.artifacts("activities")

    def cards(self) -> list[Card]:
        return self.artifacts("cards")

    def devices(self) -> list[DeviceProfile]:
        return self.artifacts("devices-v2")

    def device_preferences(self) -> list[DeviceProfile]:
        return self.artifacts("device-preferences")

    def wifi_details(self) -> list[WifiDetail]:
        return self.artifacts("device-wifi-details")

    def bluetooth_states(self) -> list[BluetoothState]:
        return self.artifacts("bluetooth")

    def household(self) -> list[HouseholdMember]:
        return self.artifacts("household")

    def contacts(self) -> list[Contact]:
        return self.artifacts("contacts")

    def identity(self) -> AccountIdentity | None:
        found = self.artifacts("bootstrap")
        return found[0] if found else None

    def topology(self) -> SmartHomeTopology | None:
        found = self.artifacts("phoenix")
        return found[0] if found else None

    def named_lists(self) -> list[NamedList]:
        """Index entries merged with their per-list items, in index order."""
        items: dict[str, NamedListItems] = {}
        for entry in self.artifacts("namedLists-items"):
            items.setdefault(entry.list_id, entry)
        out = []
        for lst in self.artifacts("namedLists"):
            found = items.pop(lst.list_id, None)
            out.append(replace(lst, items=found.items) if found else lst)
        for list_id, entry in items.items():
            times = [i.created_at for i in entry.items] or [0]
            out.append(NamedList(list_id, "", min(times), max(i.updated_at for i in entry.items) if entry.items else 0,
                                 entry.items, {"_inferred_from_items": True}))
        return out

    def device_timezone(self, serial: str) -> str | None:
        for pref in self.device_preferences():
            if pref.serial_number == serial and pref.timezone:
                return pref.timezone
        return None

    # ------------------------------------------------------------------ audio

    def audio_records(self) -> list[ApiRecord]:
        return [r for r in self.records if r.endpoint_id == AUDIO_ENDPOINT]

    def audio_presence(self, utterance_id: str) -> AudioPresence:
        seen_absent = False
        for rec in self.audio_records():
            if utterance_id_of(rec.url) != utterance_id:
                continue
            if rec.ok:
                return AudioPresence.PRESENT
            if rec.status in (404, 410):
                seen_absent = True
        return AudioPresence.ABSENT_CONFIRMED if seen_absent else AudioPresence.NOT_CHECKED

    def audio(self, utterance_id: str) -> UtteranceAudio | None:
        for rec in self.audio_records():
            if rec.ok and utterance_id_of(rec.url) == utterance_id:
                return UtteranceAudio(utterance_id, rec.body_bytes(), rec.body_digest)
        return None

    def audio_utterance_ids(self) -> list[str]:
        return sorted({u for r in self.audio_records() if (u := utterance_id_of(r.url))})


# --------------------------------------------------------------------- disk


def record_digest(record: ApiRecord) -> str:
    data = record.to_dict()
    data.pop("captured_at", None)
    return json_digest(data)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _json_file(value: Any) -> bytes:
    return (canonical_json(value, indent=2) + "\n").encode("utf-8")


def write_case(case: EvidenceCase, directory: str | os.PathLike[str], *, overwrite: bool = False) -> dict[str, Any]:
    """Write all raw records, then derived files, then seal with the manifest.

    Returns the manifest. Refuses to touch an already sealed directory unless
    ``overwrite`` is set.
    """
    root = Path(directory)
    if (root / MANIFEST).exists() and not overwrite:
        raise FileExistsError(f"{root} already holds a sealed case")
    root.mkdir(parents=True, exist_ok=True)
    if overwrite:
        (root / MANIFEST).unlink(missing_ok=True)
        for sub in ("parsed", "audio"):
            for old in (root / sub).glob("*") if (root / sub).is_dir() else ():
                old.unlink()

    capture = "".join(canonical_json(r.to_dict()) + "\n" for r in case.records).encode("utf-8")
    _atomic_write(root / CAPTURE, capture)

    files: dict[str, str] = {}
    for rec in case.audio_records():
        if rec.ok:
            blob = rec.body_bytes()
            rel = f"audio/{rec.body_digest}.bin"
            _atomic_write(root / rel, blob)
            files[rel] = sha256_hex(blob)

    grouped: dict[str, list[dict[str, Any]]] = {}
    for outcome in case.outcomes:
        grouped.setdefault(outcome.endpoint_id, []).append(outcome.to_dict(case.records[outcome.record_index]))
    for endpoint_id, entries in sorted(grouped.items()):
        rel = f"parsed/{endpoint_id}.json"
        data = _json_file({"schema_version": SCHEMA_VERSION, "endpoint_id": endpoint_id, "entries": entries})
        _atomic_write(root / rel, data)
        files[rel] = sha256_hex(data)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "case_id": case.case_id,
        "created_at": render_iso(case.created_at) if case.created_at is not None else None,
        "tool_version": case.tool_version,
        "source": case.source.value,
        "tz_hint": case.tz_hint,
        "config": case.config,
        "records": [
            {
                "index": i,
                "endpoint_id": r.endpoint_id,
                "url": r.url,
                "status": r.status,
                "failure": r.failure,
                "body_digest": r.body_digest,
                "record_digest": record_digest(r),
                "captured_at": r.captured_at,
            }
            for i, r in enumerate(case.records)
        ],
        "files": dict(sorted(files.items())),
        "summary": {
            "records": len(case.records),
            "http_failures": len(case.http_failures),
            "schema_mismatches": len(case.mismatches),
            "invariant_flags": len(case.flags),
        },
    }
    _atomic_write(root / MANIFEST, _json_file(manifest))
    return manifest


def read_manifest(directory: str | os.PathLike[str]) -> dict[str, Any]:
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise CaseIntegrityError(f"{directory} is not a sealed case (no {MANIFEST})")
    return json.loads(path.read_text("utf-8"))


def load_case(directory: str | os.PathLike[str]) -> EvidenceCase:
    """Reopen a sealed case, verifying every digest in its manifest."""
    root = Path(directory)
    manifest = read_manifest(root)
    lines = (root / CAPTURE).read_text("utf-8").splitlines() if (root / CAPTURE).exists() else []
    entries = manifest["records"]
    if len(lines) != len(entries):
        raise CaseIntegrityError(f"{CAPTURE} has {len(lines)} records, manifest lists {len(entries)}")
    records = []
    for line, entry in zip(lines, entries):
        rec = ApiRecord.from_dict(json.loads(line))
        if record_digest(rec) != entry["record_digest"] or rec.captured_at != entry["captured_at"]:
            raise CaseIntegrityError(f"record {entry['index']} does not match manifest")
        if not rec.verify():
            raise CaseIntegrityError(f"record {entry['index']} body digest mismatch")
        records.append(rec)
    for rel, digest in manifest["files"].items():
        path = root / rel
        if not path.exists() or sha256_hex(path.read_bytes()) != digest:
            raise CaseIntegrityError(f"{rel} missing or altered")
    created = manifest.get("created_at")
    created_ms = normalize_timestamp(created).ms if created else None
    return EvidenceCase(
        manifest["case_id"],
        CaseSource(manifest["source"]),
        tuple(records),
        created_ms,
        manifest.get("config") or {},
        manifest.get("tool_version", __version__),
        manifest.get("tz_hint"),
    )


def seal_records(
    directory: str | os.PathLike[str],
    records: Sequence[ApiRecord],
    source: CaseSource,
    *,
    case_id: str | None = None,
    created_at: int | None = None,
    config: Mapping[str, Any] | None = None,
    overwrite: bool = False,
) -> tuple[EvidenceCase, dict[str, Any]]:
    case = EvidenceCase.build(case_id or Path(directory).name, source, records, created_at=created_at, config=config)
    return case, write_case(case, directory, overwrite=overwrite)
