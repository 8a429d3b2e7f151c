from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from alexa_evidence.model import (
    Activity,
    ActivityStatus,
    Card,
    ListItem,
    NamedList,
    Parsed,
    RawPassthrough,
    Role,
    SchemaMismatch,
    from_dict,
    parse_artifact,
    to_dict,
    typed_endpoints,
    wire_body,
)

ACTIVITY = {
    "activityId": "A1#1565106800000#G090",
    "utteranceId": "u-1",
    "transcript": "alexa what's the weather",
    "creationTimestamp": 1565106821000,
    "deviceSerialNumber": "G090XG12345602GD",
    "deviceType": "A32DOYMUN6DTXA",
    "customerId": "A1P2QRS3TLPH",
    "activityStatus": "SUCCESS",
    "domainAttributes": {"nBestList": []},
}


def test_activity_parse_and_extras():
    parsed = parse_artifact("activities", {"activities": [ACTIVITY], "startTime": None})
    assert isinstance(parsed, Parsed)
    (act,) = parsed.artifacts
    assert act.activity_status is ActivityStatus.SUCCESS
    assert act.timestamp == 1565106821000
    assert act.extras == {"domainAttributes": {"nBestList": []}}
    assert wire_body("activities", parsed.artifacts, parsed.envelope_extras) == {
        "activities": [ACTIVITY], "startTime": None}


def test_unknown_status_literal_preserved():
    body = {"activities": [dict(ACTIVITY, activityStatus="SOMETHING_NEW")]}
    (act,) = parse_artifact("activities", body).artifacts
    assert act.activity_status == "SOMETHING_NEW"
    assert to_dict(act)["activity_status"] == "SOMETHING_NEW"


def test_household_child_role():
    body = {"accounts": [{"id": "p1", "firstName": "Ann", "fullName": "Ann B", "role": "CHILD"}]}
    (m,) = parse_artifact("household", body).artifacts
    assert m.role is Role.CHILD


def test_raw_passthrough_for_untyped_endpoint():
    body = {"wakeWords": [{"wakeWord": "ALEXA"}]}
    out = parse_artifact("wake-word", body)
    assert isinstance(out, RawPassthrough)
    assert out.body == body


def test_missing_required_field_raises_with_body():
    body = {"activities": [{k: v for k, v in ACTIVITY.items() if k != "transcript"}]}
    with pytest.raises(SchemaMismatch) as info:
        parse_artifact("activities", body)
    assert info.value.path == "$.activities[0].transcript"
    assert info.value.body is body


def test_named_list_updated_before_created_is_flagged():
    body = {"lists": [{"listId": "l1", "name": "x", "createdDate": 2000, "updatedDate": 1000}]}
    parsed = parse_artifact("namedLists", body)
    assert [f.rule for f in parsed.flags] == ["updated_at>=created_at"]


def test_duplicate_card_ids_flagged():
    card = {"id": "c1", "cardType": "TextCard", "title": "t", "creationTimestamp": 1}
    parsed = parse_artifact("cards", {"cards": [card, card]})
    assert any(f.rule == "unique" for f in parsed.flags)


def test_pagination_key_warns():
    parsed = parse_artifact("activities", {"activities": [], "nextToken": "abc"})
    assert [f.rule for f in parsed.flags] == ["pagination"]


def test_iso_times_use_hint():
    body = {"lists": [{"listId": "l1", "name": "x", "createdDate": "2019-08-06T15:00:00",
                       "updatedDate": "2019-08-06T15:00:00"}]}
    parsed = parse_artifact("namedLists", body, tz_hint="Europe/London")
    assert parsed.artifacts[0].created_at == 1565100000000
    assert parsed.time_formats == {"iso_local:Europe/London": 2}


# -- properties

text = st.text(max_size=12)
ms = st.integers(min_value=0, max_value=4_000_000_000_000)

activities = st.builds(
    Activity, text, text, text, ms, text, text, text,
    st.one_of(st.sampled_from(list(ActivityStatus)), st.sampled_from(["X", "Y_Z"])),
    st.one_of(st.none(), text),
)
cards = st.builds(Card, text, text, text, ms, st.one_of(st.none(), text), st.one_of(st.none(), text),
                  st.one_of(st.none(), text))
items = st.builds(ListItem, text, text, st.booleans(), ms, ms)
lists = st.builds(NamedList, text, text, ms, ms, st.tuples(items, items).map(tuple))


@settings(max_examples=60)
@given(st.one_of(activities, cards, items, lists))
def test_canonical_round_trip(record):
    d = to_dict(record)
    assert from_dict(type(record), json.loads(json.dumps(d))) == record


@settings(max_examples=60)
@given(st.lists(activities, max_size=4))
def test_wire_round_trip(acts):
    body = json.loads(json.dumps(wire_body("activities", acts)))
    assert list(parse_artifact("activities", body).artifacts) == acts


@settings(max_examples=60)
@given(activities)
def test_enum_fields_serialize_as_literals(act):
    value = to_dict(act)["activity_status"]
    assert isinstance(value, str)
    assert value == getattr(act.activity_status, "value", act.activity_status)


json_values = st.recursive(
    st.one_of(st.none(), st.booleans(), st.integers(), st.text(max_size=5)),
    lambda kids: st.one_of(st.lists(kids, max_size=3), st.dictionaries(st.text(max_size=8), kids, max_size=4)),
    max_leaves=12,
)


@settings(max_examples=200)
@given(st.sampled_from(sorted(typed_endpoints())), json_values)
def test_parse_is_total(endpoint_id, body):
    # arbitrary JSON either parses or raises SchemaMismatch; nothing else escapes
    try:
        parse_artifact(endpoint_id, body)
    except SchemaMismatch:
        pass


@settings(max_examples=100)
@given(st.dictionaries(st.sampled_from(list(ACTIVITY)), json_values, max_size=9))
def test_parse_total_on_near_miss_activity(fields):
    try:
        parse_artifact("activities", {"activities": [dict(ACTIVITY, **fields)]})
    except SchemaMismatch:
        pass
