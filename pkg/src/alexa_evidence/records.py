"""ApiRecord: one captured or fetched endpoint response, the unit of raw evidence."""

from __future__ import annotations

import base64
import json
from dataclasses import asdict, dataclass
from typing import Any, Mapping
from urllib.parse import urlsplit, urlunsplit

from .canonical import json_digest, sha256_hex

__all__ = ["ApiRecord", "canonical_url", "is_json_mime"]

_DEFAULT_PORTS = {"http": 80, "https": 443}


def is_json_mime(mime: str | None) -> bool:
    """True for ``application/json``, ``+json`` suffixes and the proxy's bare ``JSON`` label."""
    return bool(mime) and "json" in mime.lower()


def canonical_url(url: str) -> str:
    """Lowercase scheme and host, drop default port and fragment, keep path and query."""
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    netloc = host
    if parts.port is not None and parts.port != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{parts.port}"
    return urlunsplit((scheme, netloc, parts.path or "/", parts.query, ""))


@dataclass(frozen=True)
class ApiRecord:
    url: str
    method: str
    status: int
    mime_type: str
    response_body: Any
    body_encoding: str  # "json" -> response_body is the parsed value; "base64" -> text
    body_digest: str
    captured_at: int | None = None
    endpoint_id: str | None = None
    failure: str | None = None

    def __post_init__(self) -> None:
        if self.body_encoding not in ("json", "base64"):
            raise ValueError(f"unknown body_encoding {self.body_encoding!r}")
        if not 100 <= self.status <= 599:
            raise ValueError(f"status {self.status} outside 100..599")
        parts = urlsplit(self.url)
        if not parts.scheme or not parts.netloc:
            raise ValueError(f"not an absolute URL: {self.url!r}")

    @classmethod
    def from_bytes(
        cls,
        url: str,
        method: str,
        status: int,
        mime_type: str,
        body: bytes,
        *,
        captured_at: int | None = None,
        endpoint_id: str | None = None,
        failure: str | None = None,
    ) -> "ApiRecord":
        """Build a record, keeping JSON MIME bodies parsed when they decode cleanly."""
        if is_json_mime(mime_type) and body:
            try:
                value = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, ValueError):
                pass
            else:
                return cls(url, method, status, mime_type, value, "json", json_digest(value),
                           captured_at, endpoint_id, failure)
        return cls(url, method, status, mime_type, base64.b64encode(body).decode("ascii"), "base64",
                   sha256_hex(body), captured_at, endpoint_id, failure)

    @property
    def is_json(self) -> bool:
        return self.body_encoding == "json"

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    def body_bytes(self) -> bytes:
        if self.is_json:
            return json.dumps(self.response_body, ensure_ascii=False).encode("utf-8")
        return base64.b64decode(self.response_body)

    def compute_digest(self) -> str:
        if self.is_json:
            return json_digest(self.response_body)
        return sha256_hex(base64.b64decode(self.response_body))

    def verify(self) -> bool:
        return self.compute_digest() == self.body_digest

    @property
    def is_empty(self) -> bool:
        """Empty bytes, or a JSON body of null, "", [] or {}."""
        if self.is_json:
            return self.response_body in (None, "", [], {})
        return self.response_body == ""

    @property
    def canonical_url(self) -> str:
        return canonical_url(self.url)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ApiRecord":
        return cls(**data)
