"""HTTP acquisition against the Alexa management API (or the bundled mock)."""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import httpx

from .case import AUDIO_ENDPOINT, CaseSource, EvidenceCase
from .model import Parsed, RawPassthrough, SchemaMismatch, UtteranceAudio, parse_artifact
from .records import ApiRecord
from .redact import mask_identifier
from .registry import EndpointDescriptor, MissingBinding, get, registry

logger = logging.getLogger(__name__)

__all__ = [
    "AcquisitionReport",
    "AlexaClient",
    "FetchResult",
    "HttpFailure",
    "MissingBinding",
    "Session",
    "TransportError",
    "UnknownEndpoint",
    "acquire_case",
    "fetch",
    "fetch_audio",
]

DEVICE_PLACEHOLDERS = frozenset({"device_serial", "device_type"})


class TransportError(RuntimeError):
    """Network-level failure: no HTTP response was received."""

    def __init__(self, detail: str) -> None:
        self.detail = detail
        super().__init__(detail)


class UnknownEndpoint(KeyError):
    pass


class HttpFailure(RuntimeError):
    """Non-2xx response. The record is still evidence and travels with the error."""

    def __init__(self, record: ApiRecord) -> None:
        self.record = record
        self.status = record.status
        super().__init__(f"HTTP {record.status} for {record.url}")


@dataclass(frozen=True)
class Session:
    base_url: str
    auth_token: str = field(repr=False)
    user_id: str | None = None
    # host -> base URL, for endpoints served from another host (e.g. contacts)
    host_urls: Mapping[str, str] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"Session(base_url={self.base_url!r}, auth_token={mask_identifier(self.auth_token)!r})"

    def base_for(self, descriptor: EndpointDescriptor) -> str:
        return self.host_urls.get(descriptor.host, self.base_url).rstrip("/")

    def to_dict(self) -> dict[str, Any]:
        """Config echo; the token is always masked."""
        return {
            "base_url": self.base_url,
            "auth_token": mask_identifier(self.auth_token),
            "user_id": self.user_id,
            "host_urls": dict(self.host_urls),
        }


@dataclass(frozen=True)
class FetchResult:
    record: ApiRecord
    parsed: Parsed | RawPassthrough | SchemaMismatch | None

    @property
    def http_failure(self) -> bool:
        return self.record.failure is not None

    def __iter__(self):
        return iter((self.record, self.parsed))


@dataclass
class AcquisitionReport:
    attempted: int = 0
    succeeded: int = 0
    http_failures: list[dict[str, Any]] = field(default_factory=list)
    transport_errors: list[dict[str, str]] = field(default_factory=list)
    schema_mismatches: list[dict[str, Any]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.http_failures or self.transport_errors or self.schema_mismatches)

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "http_failures": self.http_failures,
            "transport_errors": self.transport_errors,
            "schema_mismatches": self.schema_mismatches,
            "warnings": self.warnings,
            "partial": self.partial,
        }


def _now_ms() -> int:
    return int(time.time() * 1000)


class AlexaClient:
    """Fetches registry endpoints for one session.

    ``parallelism`` bounds concurrent requests during acquisition; ``delay_ms``
    is slept before every request.
    """

    def __init__(
        self,
        session: Session,
        *,
        timeout: float = 10.0,
        delay_ms: int = 0,
        parallelism: int = 1,
        clock: Callable[[], int] = _now_ms,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.session = session
        self.timeout = timeout
        self.delay_ms = delay_ms
        self.parallelism = max(1, parallelism)
        self.clock = clock
        self._transport = transport
        self._local = threading.local()
        self._clients: list[httpx.Client] = []
        self._lock = threading.Lock()

    def __enter__(self) -> "AlexaClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def close(self) -> None:
        with self._lock:
            for c in self._clients:
                c.close()
            self._clients.clear()

    def _http(self) -> httpx.Client:
        client = getattr(self._local, "client", None)
        if client is None:
            client = httpx.Client(timeout=self.timeout, transport=self._transport, follow_redirects=False)
            self._local.client = client
            with self._lock:
                self._clients.append(client)
        return client

    def url_for(self, descriptor: EndpointDescriptor, bindings: Mapping[str, str] | None = None) -> str:
        return self.session.base_for(descriptor) + descriptor.render(bindings)

    def _get(self, url: str) -> httpx.Response:
        if self.delay_ms:
            time.sleep(self.delay_ms / 1000)
        headers = {"Accept": "application/json, */*"}
        if self.session.auth_token:
            headers["Authorization"] = f"Bearer {self.session.auth_token}"
        try:
            return self._http().get(url, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc

    def fetch(self, endpoint_id: str, bindings: Mapping[str, str] | None = None) -> FetchResult:
        """GET one endpoint; non-2xx responses come back as records tagged with ``failure``."""
        descriptor = get(endpoint_id)
        if descriptor is None:
            raise UnknownEndpoint(endpoint_id)
        url = self.url_for(descriptor, bindings)
        response = self._get(url)
        status = response.status_code
        failure = None if 200 <= status < 300 else f"http_{status}"
        record = ApiRecord.from_bytes(
            url,
            "GET",
            status,
            response.headers.get("content-type", ""),
            response.content,
            captured_at=self.clock(),
            endpoint_id=endpoint_id,
            failure=failure,
        )
        parsed: Parsed | RawPassthrough | SchemaMismatch | None = None
        if failure is None and record.is_json and descriptor.json_body:
            try:
                parsed = parse_artifact(endpoint_id, record.response_body)
            except SchemaMismatch as exc:
                parsed = exc
        return FetchResult(record, parsed)

    def fetch_audio(self, utterance_id: str) -> UtteranceAudio:
        """Raw recording bytes; raises :class:`HttpFailure` when the server has none."""
        result = self.fetch(AUDIO_ENDPOINT, {"utterance_id": utterance_id})
        if result.http_failure:
            raise HttpFailure(result.record)
        return UtteranceAudio(utterance_id, result.record.body_bytes(), result.record.body_digest)

    # ------------------------------------------------------------ acquisition

    def _run(self, plan: Sequence[tuple[str, dict[str, str]]], report: AcquisitionReport) -> list[FetchResult]:
        def one(task: tuple[str, dict[str, str]]) -> FetchResult | TransportError:
            try:
                return self.fetch(*task)
            except TransportError as exc:
                return exc

        if self.parallelism == 1:
            outcomes = [one(t) for t in plan]
        else:
            with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
                outcomes = list(pool.map(one, plan))
        results = []
        for (endpoint_id, bindings), outcome in zip(plan, outcomes):
            report.attempted += 1
            if isinstance(outcome, TransportError):
                report.transport_errors.append({"endpoint_id": endpoint_id, "detail": outcome.detail})
                continue
            results.append(outcome)
            rec = outcome.record
            if rec.failure:
                report.http_failures.append({"endpoint_id": endpoint_id, "url": rec.url, "status": rec.status})
            else:
                report.succeeded += 1
            if isinstance(outcome.parsed, SchemaMismatch):
                report.schema_mismatches.append(outcome.parsed.to_dict())
            elif isinstance(outcome.parsed, Parsed):
                for flag in outcome.parsed.flags:
                    if flag.rule == "pagination":
                        report.warnings.append(f"{endpoint_id}: {flag.detail}")
        return results

    def acquire_case(
        self,
        bindings: Mapping[str, str] | None = None,
        *,
        case_id: str = "case",
        source: CaseSource = CaseSource.MOCK,
        config: Mapping[str, Any] | None = None,
    ) -> tuple[EvidenceCase, AcquisitionReport]:
        """Fetch the whole registry in a fixed order.

        Unparameterised endpoints first (registry order); then per-device,
        per-list and per-user endpoints fanned out over the serials, list ids
        and user id discovered in the first pass; then one audio request per
        utterance id seen in the activities.
        """
        extra = dict(bindings or {})
        report = AcquisitionReport()
        descriptors = registry()

        first = [(d.endpoint_id, dict(extra)) for d in descriptors if not d.placeholders]
        results = self._run(first, report)

        devices = _discover_devices(results)
        list_ids = _discover_lists(results)
        user_id = extra.get("user_id") or self.session.user_id or _discover_user(results)

        second: list[tuple[str, dict[str, str]]] = []
        for d in descriptors:
            names = set(d.placeholders)
            if not names or d.endpoint_id == AUDIO_ENDPOINT:
                continue
            for binding in _binding_sets(names, devices, list_ids, user_id, extra):
                second.append((d.endpoint_id, binding))
        results += self._run(second, report)

        utterances = sorted({a.utterance_id for r in results if r.record.endpoint_id == "activities"
                             and isinstance(r.parsed, Parsed) for a in r.parsed.artifacts if a.utterance_id})
        if extra.get("utterance_id"):
            utterances = sorted(set(utterances) | {extra["utterance_id"]})
        third = [(AUDIO_ENDPOINT, {**extra, "utterance_id": u}) for u in utterances]
        results += self._run(third, report)

        if report.attempted and not results:
            raise TransportError(f"all {report.attempted} requests failed at transport level: "
                                 f"{report.transport_errors[0]['detail']}")

        echo = {"session": self.session.to_dict(), "parallelism": self.parallelism, "delay_ms": self.delay_ms}
        echo.update(config or {})
        case = EvidenceCase.build(
            case_id,
            source,
            [r.record for r in results],
            created_at=min((r.record.captured_at for r in results if r.record.captured_at is not None), default=None),
            config=echo,
        )
        return case, report


def _binding_sets(
    names: set[str],
    devices: Sequence[tuple[str, str]],
    list_ids: Sequence[str],
    user_id: str | None,
    extra: Mapping[str, str],
) -> Iterable[dict[str, str]]:
    sets: list[dict[str, str]] = [dict(extra)]
    if names & DEVICE_PLACEHOLDERS:
        sets = [{**s, "device_serial": serial, "device_type": dtype} for s in sets for serial, dtype in devices]
    if "list_id" in names:
        sets = [{**s, "list_id": lid} for s in sets for lid in list_ids]
    if "user_id" in names:
        sets = [{**s, "user_id": user_id} for s in sets] if user_id else []
    return [s for s in sets if all(s.get(n) for n in names)]


def _parsed_artifacts(results: Iterable[FetchResult], endpoint_id: str) -> list[Any]:
    return [a for r in results if r.record.endpoint_id == endpoint_id and isinstance(r.parsed, Parsed)
            for a in r.parsed.artifacts]


def _discover_devices(results: Sequence[FetchResult]) -> list[tuple[str, str]]:
    found: dict[str, str] = {}
    for endpoint_id in ("devices-v2", "device-preferences"):
        for dev in _parsed_artifacts(results, endpoint_id):
            found.setdefault(dev.serial_number, dev.device_type)
    return sorted(found.items())


def _discover_lists(results: Sequence[FetchResult]) -> list[str]:
    return sorted({lst.list_id for lst in _parsed_artifacts(results, "namedLists")})


def _discover_user(results: Sequence[FetchResult]) -> str | None:
    ids = _parsed_artifacts(results, "bootstrap")
    return ids[0].customer_id if ids else None


# module-level conveniences mirroring the client methods


def fetch(session: Session, endpoint_id: str, bindings: Mapping[str, str] | None = None, **kw: Any) -> FetchResult:
    with AlexaClient(session, **kw) as client:
        return client.fetch(endpoint_id, bindings)


def fetch_audio(session: Session, utterance_id: str, **kw: Any) -> UtteranceAudio:
    if not utterance_id:
        raise MissingBinding("utterance_id")
    with AlexaClient(session, **kw) as client:
        return client.fetch_audio(utterance_id)


def acquire_case(session: Session, bindings: Mapping[str, str] | None = None, **kw: Any) -> tuple[EvidenceCase, AcquisitionReport]:
    case_kw = {k: kw.pop(k) for k in ("case_id", "source", "config") if k in kw}
    with AlexaClient(session, **kw) as client:
        return client.acquire_case(bindings, **case_kw)
