"""Render-time masking of identifiers, emails and secrets.

Stored evidence is never masked; these helpers only apply to human-readable
output.
"""

from __future__ import annotations

import re
from typing import Any
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

MASK = "*****"
_SECRET_PARAM = re.compile(r"(?i)(token|session|csrf|auth|secret|signature|sig|key|cookie)")
_EMAIL = re.compile(r"^([^@\s]+)@([^@\s]+)$")

# canonical field names that carry personal identifiers
PII_FIELDS = frozenset({
    "serial_number", "device_serial", "device_account_id", "customer_id", "email", "mac_address",
    "person_id", "auth_token",
    # the same fields under their wire names
    "serialNumber", "deviceSerialNumber", "deviceAccountId", "customerId", "customerEmail", "macAddress",
})


def mask_identifier(value: str) -> str:
    """``G090LF1190000002GD`` -> ``G090*****02GD``; the mask length hides the true length."""
    n = len(value)
    if n >= 12:
        keep = 4
    elif n >= 8:
        keep = 3
    elif n >= 4:
        keep = 1
    else:
        return "*" * n
    return value[:keep] + MASK + value[-keep:]


def mask_email(value: str) -> str:
    m = _EMAIL.match(value)
    if not m:
        return mask_identifier(value)
    local, domain = m.groups()
    if len(local) <= 3:
        return local[:1] + MASK + "@" + domain
    return local[:2] + MASK + local[-1] + "@" + domain


def mask_value(field_name: str, value: Any) -> Any:
    if not isinstance(value, str) or not value:
        return value
    if "email" in field_name.lower():
        return mask_email(value)
    return mask_identifier(value)


def redact_url(url: str) -> str:
    """Replace secret-looking query parameter values with a mask."""
    parts = urlsplit(url)
    if not parts.query:
        return url
    pairs = [(k, MASK if _SECRET_PARAM.search(k) else v) for k, v in parse_qsl(parts.query, keep_blank_values=True)]
    return urlunsplit((parts.scheme, parts.netloc, parts.path, urlencode(pairs, safe="*"), parts.fragment))


def redact_tree(value: Any) -> Any:
    """Mask PII fields anywhere inside a JSON-like structure (for display only)."""
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if k in PII_FIELDS and isinstance(v, str):
                out[k] = mask_value(k, v)
            elif k == "url" and isinstance(v, str):
                out[k] = redact_url(v)
            else:
                out[k] = redact_tree(v)
        return out
    if isinstance(value, list):
        return [redact_tree(v) for v in value]
    return value
