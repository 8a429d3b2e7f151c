from __future__ import annotations

from hypothesis import given, strategies as st

from alexa_evidence.canonical import canonical_json
from alexa_evidence.records import ApiRecord, canonical_url
from alexa_evidence.redact import mask_email, mask_identifier, redact_tree, redact_url


def test_record_round_trip_and_digest():
    rec = ApiRecord.from_bytes("https://alexa.amazon.com/api/x", "GET", 200, "application/json", b'{"b":1,"a":2}',
                               captured_at=5)
    assert rec.response_body == {"a": 2, "b": 1} and rec.verify()
    assert ApiRecord.from_dict(rec.to_dict()) == rec
    binary = ApiRecord.from_bytes("https://h/a", "GET", 200, "audio/mpeg", b"\x00\xff")
    assert binary.body_bytes() == b"\x00\xff" and ApiRecord.from_dict(binary.to_dict()) == binary


def test_empty_bodies():
    for body in (b"", b"null", b"{}", b"[]"):
        assert ApiRecord.from_bytes("https://h/a", "GET", 200, "application/json", body).is_empty


def test_canonical_url():
    assert canonical_url("HTTPS://Alexa.Amazon.com:443/api/x?a=1#f") == "https://alexa.amazon.com/api/x?a=1"
    assert canonical_url("http://h:8080") == "http://h:8080/"


def test_masks():
    assert mask_identifier("G090XG12345602GD") == "G090*****02GD"
    assert mask_email("dj.bob4@gmx.net").endswith("@gmx.net") and "bob" not in mask_email("dj.bob4@gmx.net")
    assert "s3cr3t" not in redact_url("https://h/a?access_token=s3cr3t&x=1")
    tree = redact_tree({"deviceSerialNumber": "G090XG12345602GD", "nested": [{"email": "a@b.c"}], "n": 3})
    assert tree["deviceSerialNumber"] != "G090XG12345602GD" and tree["nested"][0]["email"] != "a@b.c"
    assert tree["n"] == 3


@given(st.text(min_size=4, max_size=40))
def test_mask_hides_the_middle(value):
    masked = mask_identifier(value)
    assert masked != value or len(value) < 4
    assert len(masked) != len(value) or "*" in masked


@given(st.dictionaries(st.text(max_size=4), st.integers(), max_size=5))
def test_canonical_json_is_order_independent(d):
    assert canonical_json(d) == canonical_json(dict(reversed(list(d.items()))))
