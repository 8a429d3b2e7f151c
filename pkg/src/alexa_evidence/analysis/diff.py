"""Structured comparison of two evidence cases, endpoint by endpoint.

Each endpoint's content is a list of items: the canonical form of every
typed artifact, or the raw body for passthrough endpoints. Lists are
compared as multisets first. Leftover items are paired by similarity and
compared field by field; whatever stays unpaired is a membership change.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterator

from ..canonical import canonical_json
from ..case import AUDIO_ENDPOINT, EvidenceCase
from ..model import Parsed, RawPassthrough, SchemaMismatch, to_dict

__all__ = ["DiffEntry", "DiffKind", "SnapshotDiff", "diff_snapshots", "diff_values", "endpoint_items"]


class DiffKind(str, enum.Enum):
    FIELD_CHANGED = "FieldChanged"
    ITEMS_DIFFER = "ItemsDiffer"
    ORDER_ONLY = "OrderOnly"
    PRESENCE_DIFFER = "PresenceDiffer"


_IDENTITY_HINTS = ("serial", "version", "type", "account", "customer", "email", "mac")


def is_identifier(key: str) -> bool:
    """Serials, ids, versions and similar; reported so readers can tell identity churn from content change."""
    k = key.lower()
    return k.endswith("id") or any(h in k for h in _IDENTITY_HINTS)


@dataclass(frozen=True)
class DiffEntry:
    endpoint_id: str
    kind: DiffKind
    path: str
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def significance(self) -> str:
        return "low" if self.kind is DiffKind.ORDER_ONLY else "normal"

    def to_dict(self) -> dict[str, Any]:
        return {"endpoint_id": self.endpoint_id, "kind": self.kind.value, "path": self.path,
                "significance": self.significance, "details": self.details}

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.endpoint_id, self.path, self.kind.value, canonical_json(self.details))

    def swapped(self) -> "DiffEntry":
        """The same difference seen from the other side."""
        swap = {"a": "b", "b": "a"}
        details = {}
        for key, value in self.details.items():
            if key.startswith(("a_", "b_")):
                key = swap[key[0]] + key[1:]
            elif key in swap:
                key = swap[key]
            if key == "only_in":
                value = swap[value]
            details[key] = value
        return DiffEntry(self.endpoint_id, self.kind, self.path, details)


@dataclass(frozen=True)
class SnapshotDiff:
    case_a: str
    case_b: str
    entries: tuple[DiffEntry, ...]

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def by_kind(self, kind: DiffKind) -> list[DiffEntry]:
        return [e for e in self.entries if e.kind is kind]

    def to_dict(self) -> dict[str, Any]:
        counts = Counter(e.kind.value for e in self.entries)
        return {"case_a": self.case_a, "case_b": self.case_b, "counts": dict(sorted(counts.items())),
                "entries": [e.to_dict() for e in self.entries]}


def endpoint_items(case: EvidenceCase) -> dict[str, list[Any]]:
    """endpoint id -> comparable items, in record order. Failed fetches and audio are left out."""
    out: dict[str, list[Any]] = {}
    for outcome in case.outcomes:
        eid = outcome.endpoint_id
        if eid is None or eid == AUDIO_ENDPOINT:
            continue
        result = outcome.result
        if isinstance(result, Parsed):
            items = [to_dict(a) for a in result.artifacts]
        elif isinstance(result, RawPassthrough):
            items = [result.body]
        elif isinstance(result, SchemaMismatch):
            items = [result.body]
        else:
            continue
        out.setdefault(eid, []).extend(items)
    return out


def _canon(value: Any) -> str:
    return canonical_json(value)


def _similarity(a: Any, b: Any) -> int:
    if isinstance(a, dict) and isinstance(b, dict):
        return sum(1 for k in a.keys() & b.keys() if k != "extras" and a[k] == b[k])
    return 0


def _pair(rest_a: list[tuple[int, Any]], rest_b: list[tuple[int, Any]]) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Greedy pairing by shared-field count. Ties break on item content, so the result does not depend on which side is A."""
    candidates = []
    for ia, (_, va) in enumerate(rest_a):
        ca = _canon(va)
        for ib, (_, vb) in enumerate(rest_b):
            score = _similarity(va, vb)
            if score > 0:
                cb = _canon(vb)
                candidates.append((-score, min(ca, cb), max(ca, cb), ia, ib))
    candidates.sort(key=lambda c: c[:3])
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    for _, _, _, ia, ib in candidates:
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        pairs.append((ia, ib))
    left_a = [i for i in range(len(rest_a)) if i not in used_a]
    left_b = [i for i in range(len(rest_b)) if i not in used_b]
    # a lone leftover on each side is the same slot, changed
    if len(left_a) == 1 and len(left_b) == 1 and type(rest_a[left_a[0]][1]) is type(rest_b[left_b[0]][1]) \
            and isinstance(rest_a[left_a[0]][1], (dict, list)):
        pairs.append((left_a[0], left_b[0]))
        left_a, left_b = [], []
    return pairs, left_a, left_b


def diff_values(endpoint_id: str, a: Any, b: Any, path: str = "$") -> Iterator[DiffEntry]:
    if a == b and type(a) is type(b):
        return
    if isinstance(a, dict) and isinstance(b, dict):
        for key in sorted(a.keys() | b.keys()):
            sub = f"{path}.{key}"
            if key not in b:
                yield DiffEntry(endpoint_id, DiffKind.FIELD_CHANGED, sub, {"a": a[key], "b": None, "b_absent": True,
                                                                         "identifier": is_identifier(key)})
            elif key not in a:
                yield DiffEntry(endpoint_id, DiffKind.FIELD_CHANGED, sub, {"a": None, "b": b[key], "a_absent": True,
                                                                         "identifier": is_identifier(key)})
            else:
                yield from _diff_child(endpoint_id, a[key], b[key], sub, key)
        return
    if isinstance(a, list) and isinstance(b, list):
        yield from diff_lists(endpoint_id, a, b, path)
        return
    yield DiffEntry(endpoint_id, DiffKind.FIELD_CHANGED, path, {"a": a, "b": b, "identifier": False})


def _diff_child(endpoint_id: str, a: Any, b: Any, path: str, key: str) -> Iterator[DiffEntry]:
    if isinstance(a, (dict, list)) and type(a) is type(b):
        yield from diff_values(endpoint_id, a, b, path)
    elif a != b or type(a) is not type(b):
        yield DiffEntry(endpoint_id, DiffKind.FIELD_CHANGED, path, {"a": a, "b": b, "identifier": is_identifier(key)})


def _uncommon(canon: list[str], values: list[Any], common: Counter[str]) -> list[tuple[int, Any]]:
    budget = Counter(common)
    out = []
    for i, (c, v) in enumerate(zip(canon, values)):
        if budget[c]:
            budget[c] -= 1
        else:
            out.append((i, v))
    return out


def diff_lists(endpoint_id: str, a: list[Any], b: list[Any], path: str) -> Iterator[DiffEntry]:
    ca = [_canon(x) for x in a]
    cb = [_canon(x) for x in b]
    if ca == cb:
        return
    count_a, count_b = Counter(ca), Counter(cb)
    if count_a == count_b:
        yield DiffEntry(endpoint_id, DiffKind.ORDER_ONLY, path, {"a_order": a, "b_order": b})
        return
    common = count_a & count_b
    rest_a, rest_b = _uncommon(ca, a, common), _uncommon(cb, b, common)
    pairs, left_a, left_b = _pair(rest_a, rest_b)
    for ia, ib in pairs:
        yield from diff_values(endpoint_id, rest_a[ia][1], rest_b[ib][1], f"{path}[*]")
    for ia in left_a:
        yield DiffEntry(endpoint_id, DiffKind.ITEMS_DIFFER, f"{path}[*]", {"only_in": "a", "item": rest_a[ia][1]})
    for ib in left_b:
        yield DiffEntry(endpoint_id, DiffKind.ITEMS_DIFFER, f"{path}[*]", {"only_in": "b", "item": rest_b[ib][1]})


def diff_snapshots(case_a: EvidenceCase, case_b: EvidenceCase) -> SnapshotDiff:
    """Differences between two cases. Symmetric up to a/b labels; empty for identical content."""
    items_a, items_b = endpoint_items(case_a), endpoint_items(case_b)
    entries: list[DiffEntry] = []
    for eid in sorted(items_a.keys() | items_b.keys()):
        if eid not in items_b:
            entries.append(DiffEntry(eid, DiffKind.PRESENCE_DIFFER, "$", {"only_in": "a", "items": len(items_a[eid])}))
        elif eid not in items_a:
            entries.append(DiffEntry(eid, DiffKind.PRESENCE_DIFFER, "$", {"only_in": "b", "items": len(items_b[eid])}))
        else:
            entries.extend(diff_lists(eid, items_a[eid], items_b[eid], "$"))
    entries.sort(key=DiffEntry.sort_key)
    return SnapshotDiff(case_a.case_id, case_b.case_id, tuple(entries))
