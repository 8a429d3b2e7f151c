"""Canonical JSON encoding and content digests."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(value: Any, *, indent: int | None = None) -> str:
    """Stable-key-order JSON text. Compact unless ``indent`` is given."""
    if indent is None:
        return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return json.dumps(value, sort_keys=True, ensure_ascii=False, indent=indent)


def canonical_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def json_digest(value: Any) -> str:
    return sha256_hex(canonical_bytes(value))
