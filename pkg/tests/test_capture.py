from __future__ import annotations

import random
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from alexa_evidence.capture import NotAnExport, dedupe, filter_and_simplify, ingest, parse_export
from alexa_evidence.records import ApiRecord
from helpers import export_item, export_xml, synthetic_export


def test_two_item_export():
    xml = export_xml([
        export_item("https://alexa.amazon.com/api/activities", b'{"activities":[]}'),
        export_item("https://alexa.amazon.com/api/cards", b'{"cards":[]}'),
    ])
    result = ingest(xml)
    assert [r.url for r in result.records] == ["https://alexa.amazon.com/api/activities",
                                               "https://alexa.amazon.com/api/cards"]
    assert result.records[0].response_body == {"activities": []}
    assert result.records[0].captured_at is not None
    assert result.report.kept == 2 and result.report.balanced


def test_empty_export():
    result = ingest(export_xml([]))
    assert result.records == [] and result.report.total == 0 and result.report.balanced


@pytest.mark.parametrize("raw", [b"", b"not xml", b"<html><body/></html>", b"<items><item>"])
def test_not_an_export(raw):
    with pytest.raises(NotAnExport):
        parse_export(raw)


def test_missing_url_rejected_with_offset():
    xml = export_xml([
        export_item("https://alexa.amazon.com/api/activities"),
        export_item("https://alexa.amazon.com/api/cards", omit=("url",)),
    ])
    export = parse_export(xml)
    assert len(export.items) == 1
    (reject,) = export.rejects
    assert reject.index == 1 and "url" in reject.reason
    # independent oracles: the second <item> tag in the bytes, and ElementTree's view of it
    assert reject.offset == xml.find(b"<item>", xml.find(b"<item>") + 1)
    second = ET.fromstring(xml).findall("item")[1]
    assert second.find("url") is None
    assert reject.fields["status"] == second.findtext("status")


def test_host_and_mime_filters():
    xml = export_xml([
        export_item("https://alexa.amazon.com/api/activities"),
        export_item("https://ads.example.com/x", host="ads.example.com"),
        export_item("https://alexa.amazon.com/logo.png", b"\x89PNG", mimetype="PNG"),
        export_item("https://alexa.amazon.com/api/utterance/audio/data?id=u1", b"ID3", mimetype="audio/mpeg"),
    ])
    export = parse_export(xml)
    kept = filter_and_simplify(export)
    assert [r.url.split("/")[-1] for r in kept] == ["activities", "data?id=u1"]
    assert filter_and_simplify(export, ["elsewhere.com"]) == []


def test_undecodable_body_counted():
    good = export_item("https://alexa.amazon.com/api/cards")
    bad = good.replace('<response base64="true"><![CDATA[', '<response base64="true"><![CDATA[@@', 1)
    assert bad != good
    report = ingest(export_xml([bad])).report
    assert report.undecodable == 1 and report.kept == 0 and report.balanced


def _rec(url: str, body: bytes, at: int | None = None) -> ApiRecord:
    return ApiRecord.from_bytes(url, "GET", 200, "application/json", body, captured_at=at)


def test_dedupe_keeps_earliest_and_drops_empty():
    recs = [
        _rec("https://h/api/a?x=1&y=2", b'{"v":1}', at=20),
        _rec("HTTPS://H:443/api/a?x=1&y=2#frag", b'{"v":1}', at=10),  # same canonical url
        _rec("https://h/api/b", b"", at=5),
        _rec("https://h/api/c", b"null", at=5),
        _rec("https://h/api/a?x=1&y=2", b'{"v":2}', at=30),
    ]
    out = dedupe(recs)
    assert out.report == (2, 1, 2)
    assert [r.captured_at for r in out.records] == [10, 30]


def test_dedupe_planted_pairs():
    rng = random.Random(3)
    base = [_rec(f"https://h/api/e{i}", f'{{"i":{i}}}'.encode(), at=i) for i in range(90)]
    dups = [_rec(r.url, r.body_bytes(), at=1000 + k) for k, r in enumerate(rng.sample(base, 10))]
    mixed = base + dups
    rng.shuffle(mixed)
    first = dedupe(mixed)
    assert first.report.kept == 90 and first.report.dup_removed == 10
    assert sorted(r.url for r in first.records) == sorted(r.url for r in base)
    assert all(r.captured_at < 1000 for r in first.records)
    again = dedupe(first.records)
    assert again.records == first.records and again.report.dup_removed == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=120), st.integers(min_value=0, max_value=10_000))
def test_conservation_property(n, seed):
    planted = synthetic_export(n, seed)
    result = ingest(planted.xml)
    report = result.report.to_dict()
    assert report.pop("balanced") is True
    assert report.pop("total") == n
    assert report == planted.expected
    assert dedupe(result.records).records == result.records
