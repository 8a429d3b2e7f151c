"""Builders shared by the test modules."""

from __future__ import annotations

import base64
import json
import random
from dataclasses import dataclass

from alexa_evidence.analysis import EventSource, TimelineEvent

from alexa_evidence.client import Session, acquire_case
from alexa_evidence.mock import MockAlexaServer, MockState

TOKEN = "test-token"


def export_item(
    url: str,
    body: bytes | None = b'{"ok":true}',
    *,
    method: str = "GET",
    status: str = "200",
    mimetype: str = "JSON",
    host: str = "alexa.amazon.com",
    time: str = "Tue Aug 06 15:53:20 BST 2019",
    omit: tuple[str, ...] = (),
) -> str:
    """One proxy-export <item>, with any child elements in ``omit`` left out."""
    parts = {
        "time": f"<time>{time}</time>",
        "url": f"<url><![CDATA[{url}]]></url>",
        "host": f'<host ip="1.2.3.4">{host}</host>',
        "method": f"<method><![CDATA[{method}]]></method>",
        "status": f"<status>{status}</status>",
        "mimetype": f"<mimetype>{mimetype}</mimetype>",
    }
    if body is not None:
        parts["response"] = f'<response base64="true"><![CDATA[{base64.b64encode(body).decode()}]]></response>'
    return "<item>" + "".join(v for k, v in parts.items() if k not in omit) + "</item>"


def export_xml(items: list[str]) -> bytes:
    return ('<?xml version="1.0"?>\n<items burpVersion="2.1">' + "\n".join(items) + "</items>").encode()


def acquire_state(state: MockState, case_id: str = "case"):
    with MockAlexaServer(state) as srv:
        return acquire_case(Session(srv.url, TOKEN), case_id=case_id)


@dataclass
class Planted:
    xml: bytes
    expected: dict[str, int]


def synthetic_export(n: int, seed: int = 7) -> Planted:
    """An export of ``n`` items with known numbers of each defect.

    Expected bucket counts come from the planting itself, not from the parser.
    """
    rng = random.Random(seed)
    kinds = ["good"] * n
    slots = list(range(n))
    rng.shuffle(slots)
    quotas = {"malformed": n // 20, "offhost": n // 10, "nonjson": n // 20, "empty": n // 20, "dup": n // 10}
    pos = 0
    for kind, count in quotas.items():
        for i in slots[pos:pos + count]:
            kinds[i] = kind
        pos += count
    items: list[str] = []
    seen_good: list[tuple[str, bytes]] = []
    expected = dict.fromkeys(["rejected", "dropped_host", "dropped_mime", "undecodable", "dup_removed",
                              "empty_removed", "kept"], 0)
    for i, kind in enumerate(kinds):
        url = f"https://alexa.amazon.com/api/activities?startTime={i}"
        body = json.dumps({"activities": [], "n": i}).encode()
        if kind == "dup" and seen_good:
            url, body = rng.choice(seen_good)
            expected["dup_removed"] += 1
        elif kind == "malformed":
            items.append(export_item(url, body, omit=(rng.choice(["url", "status", "method"]),)))
            expected["rejected"] += 1
            continue
        elif kind == "offhost":
            items.append(export_item("https://tracker.example.net/p", body, host="tracker.example.net"))
            expected["dropped_host"] += 1
            continue
        elif kind == "nonjson":
            items.append(export_item("https://alexa.amazon.com/logo.png", b"\x89PNG", mimetype="PNG"))
            expected["dropped_mime"] += 1
            continue
        elif kind == "empty":
            items.append(export_item(f"https://alexa.amazon.com/api/cards?i={i}", b""))
            expected["empty_removed"] += 1
            continue
        else:
            seen_good.append((url, body))
            expected["kept"] += 1
        items.append(export_item(url, body))
    return Planted(export_xml(items), expected)


def json_record(endpoint_id: str, body, *, status: int = 200) -> "ApiRecord":
    from alexa_evidence.records import ApiRecord
    from alexa_evidence.registry import get

    d = get(endpoint_id)
    url = "https://" + d.host + d.render({p: "x" for p in d.placeholders})
    return ApiRecord.from_bytes(url, "GET", status, "application/json", json.dumps(body).encode(),
                                endpoint_id=endpoint_id, failure=None if status == 200 else f"http_{status}")


def audio_record(utterance_id: str, present: bool = True) -> "ApiRecord":
    from alexa_evidence.records import ApiRecord

    url = f"https://alexa.amazon.com/api/utterance/audio/data?id={utterance_id}"
    if present:
        return ApiRecord.from_bytes(url, "GET", 200, "audio/mpeg", b"ID3" + utterance_id.encode(),
                                    endpoint_id="utterance-audio")
    return ApiRecord.from_bytes(url, "GET", 404, "application/json", b'{"error":"gone"}',
                                endpoint_id="utterance-audio", failure="http_404")


def make_case(case_id: str = "t", *, activities=(), cards=(), audio=None, lists=(), extra=()):
    """A case built from typed artifacts; ``audio`` maps utterance id to presence."""
    from alexa_evidence.case import CaseSource, EvidenceCase
    from alexa_evidence.model import NamedListItems, wire_body

    records = [json_record("activities", wire_body("activities", list(activities))),
               json_record("cards", wire_body("cards", list(cards)))]
    if lists:
        records.append(json_record("namedLists", wire_body("namedLists", [
            type(lst)(lst.list_id, lst.name, lst.created_at, lst.updated_at) for lst in lists])))
        for lst in lists:
            records.append(json_record("namedLists-items",
                                       wire_body("namedLists-items", [NamedListItems(lst.list_id, lst.items)])))
    for uid, present in (audio or {}).items():
        records.append(audio_record(uid, present))
    records.extend(extra)
    return EvidenceCase.build(case_id, CaseSource.MOCK, records)


# timeline ordering oracle, written independently of the production sort key

RANK = ["Activity", "Card", "ListItemCreated", "Notification", "Other"]


def _rank(e: TimelineEvent) -> int:
    label = e.source.value
    return RANK.index("ListItemCreated") if label.startswith("ListItem") else RANK.index(label)


def oracle_cmp(a: TimelineEvent, b: TimelineEvent) -> int:
    """Field-by-field comparator written independently of the production sort key."""
    for x, y in ((a.at, b.at), (_rank(a), _rank(b)), (a.source_label, b.source_label),
                 (list(a.refs), list(b.refs)), (a.summary, b.summary), (a.device_serial or "", b.device_serial or "")):
        if x != y:
            return -1 if x < y else 1
    return 0


def random_events(rng: random.Random, n: int) -> list[TimelineEvent]:
    sources = list(EventSource)
    out = []
    for k in range(n):
        src = rng.choice(sources)
        out.append(TimelineEvent(
            at=rng.randrange(0, 50),  # small range forces many ties
            source=src,
            summary=rng.choice(["a", "b", "c"]),
            refs=(f"r{rng.randrange(5)}",),
            device_serial=rng.choice([None, "S1", "S2"]),
            endpoint_id=rng.choice(["notifications", "x"]) if src is EventSource.OTHER else None,
        ))
    return out


