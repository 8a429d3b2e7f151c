from __future__ import annotations

import copy
import json
from itertools import product

import httpx
import pytest

from alexa_evidence.mock import (
    ALL,
    DeletionKind,
    DeletionOp,
    InvalidFixture,
    MockAlexaServer,
    MockState,
    ScenarioError,
    TimeRange,
    UnknownTarget,
    default_fixture,
    default_state,
    observe,
    reachable_presences,
    run_script,
    scenario_script,
    trace_to_jsonl,
    weather_scenario,
)
from alexa_evidence.mock.scenario import load_script
from alexa_evidence.model import AccountIdentity
from helpers import TOKEN

AUTH = {"Authorization": f"Bearer {TOKEN}"}


def test_fixture_round_trip():
    fixture = default_fixture()
    assert MockState.from_fixture(fixture).to_fixture() == fixture
    # JSON-safe
    assert MockState.from_fixture(json.loads(json.dumps(fixture))).to_fixture() == fixture


@pytest.mark.parametrize("breakage", [
    lambda f: f.pop("identity"),
    lambda f: f["interactions"].append(copy.deepcopy(f["interactions"][0])),
    lambda f: f["lists"][0].update(updated_at=f["lists"][0]["created_at"] - 1),
    lambda f: f["wifi"][0].update(mac_address="zz"),
    lambda f: f["devices"][0].update(serial_number=""),
    lambda f: f["interactions"][0]["activity"].update(utterance_id="other"),
])
def test_invalid_fixture_names_the_problem(breakage):
    fixture = default_fixture()
    breakage(fixture)
    with pytest.raises(InvalidFixture):
        MockState.from_fixture(fixture)


def _fresh(kind: DeletionKind) -> str:
    state = MockState(AccountIdentity("C1", "n", "e@x"))
    state.add_interaction("u1", "probe", at=0)
    return state.apply_deletion(DeletionOp(kind, "u1"))["u1"]


def test_single_deletions_match_documented_effects():
    assert _fresh(DeletionKind.HISTORY_DELETE) == "000"
    assert _fresh(DeletionKind.CARD_REMOVE) == "101"
    assert _fresh(DeletionKind.VOICE_DELETE) == "110"


def _oracle_closure() -> set[str]:
    # bitmask model of the three documented operations, independent of MockState
    effect = {"HistoryDelete": (0, 0, 0), "CardRemove": (1, 0, 1), "VoiceDelete": (1, 1, 0)}
    seen = set()
    for n in range(4):
        for seq in product(effect, repeat=n):
            bits = (1, 1, 1)
            for op in seq:
                bits = tuple(a & b for a, b in zip(bits, effect[op]))
            seen.add("".join(map(str, bits)))
    return seen


def test_reachable_set_matches_bitmask_oracle():
    assert reachable_presences(3) == _oracle_closure() == {"111", "110", "101", "100", "000"}


def test_range_and_all_targets(state):
    times = sorted(s.created_at for s in state.interactions.values())
    hit = state.apply_deletion(DeletionOp(DeletionKind.CARD_REMOVE, TimeRange(times[0], times[1])))
    assert len(hit) == 2 and set(hit.values()) == {"101"}
    hit = state.apply_deletion(DeletionOp(DeletionKind.VOICE_DELETE, ALL))
    assert len(hit) == len(state.interactions)
    with pytest.raises(UnknownTarget):
        state.apply_deletion(DeletionOp(DeletionKind.VOICE_DELETE, "nope"))


@pytest.mark.parametrize("kind", list(DeletionKind))
def test_deletion_isolation(kind):
    # nothing outside activities/cards/audio changes, named lists included
    state = default_state()
    before = state.endpoint_digests()
    state.apply_deletion(DeletionOp(kind, ALL))
    assert state.endpoint_digests() == before


def test_deletions_are_monotone(state):
    # presence bits only ever go from 1 to 0
    for kind in [DeletionKind.VOICE_DELETE, DeletionKind.CARD_REMOVE, DeletionKind.HISTORY_DELETE]:
        before = state.presence()
        after = state.apply_deletion(DeletionOp(kind, "u-0004"))
        for b, a in zip(before["u-0004"], after["u-0004"]):
            assert int(a) <= int(b)


@pytest.mark.parametrize("kind,expected", [
    ("HistoryDelete", {"activities": False, "cards": False, "history": False, "utterance": False}),
    ("CardRemove", {"activities": True, "cards": False, "history": True, "utterance": True}),
    ("VoiceDelete", {"activities": True, "cards": True, "history": True, "utterance": False}),
])
def test_weather_scenario(kind, expected):
    trace = scenario_script(weather_scenario(kind))
    before, after = trace[3], trace[-1]
    assert before["interactions"]["u-weather"] == dict.fromkeys(expected, True)
    assert after["interactions"]["u-weather"] == expected
    assert before["endpoint_digests"] == after["endpoint_digests"]
    # other interactions are untouched
    others = {k: v for k, v in after["interactions"].items() if k != "u-weather"}
    assert others == {k: v for k, v in before["interactions"].items() if k != "u-weather"}


def test_scenario_is_deterministic_and_empty_script_is_empty():
    script = weather_scenario("VoiceDelete")
    assert trace_to_jsonl(scenario_script(script)) == trace_to_jsonl(scenario_script(script))
    assert scenario_script([]) == []
    assert load_script("") == []
    assert load_script(json.dumps(script)) == script
    assert load_script("\n".join(json.dumps(s) for s in script)) == script


@pytest.mark.parametrize("steps", [
    [{"op": "explode"}],
    [{"op": "interact", "id": "x"}],
    [{"op": "advance", "ms": -1}],
    [{"op": "delete", "kind": "Shred", "target": "u-0001"}],
    [{"op": "delete", "kind": "CardRemove", "target": "missing"}],
    [{"op": "seed", "fixture": {"identity": {}}}],
])
def test_scenario_errors_carry_step_index(steps):
    with pytest.raises(ScenarioError) as info:
        run_script([{"op": "advance", "ms": 0}] + steps)
    assert info.value.index == 1


def test_observe_matches_http_view(state, server):
    state.apply_deletion(DeletionOp(DeletionKind.CARD_REMOVE, "u-0002"))
    view = observe(state)["interactions"]["u-0002"]
    cards = httpx.get(server.url + "/api/cards", headers=AUTH).json()["cards"]
    assert view["cards"] is False and all(c["id"] != "card-u-0002" for c in cards)


def test_admin_routes_and_auth(state, server):
    with httpx.Client(base_url=server.url, headers=AUTH) as http:
        r = http.post("/__mock/interact", json={"id": "u-new", "transcript": "hello"})
        assert r.status_code == 200 and r.json()["presence"] == "111"
        r = http.post("/__mock/delete", json={"kind": "VoiceDelete", "target": "u-new"})
        assert r.json() == {"affected": {"u-new": "110"}}
        assert http.post("/__mock/delete", json={"kind": "VoiceDelete", "target": "zz"}).status_code == 404
        assert http.post("/__mock/delete", content=b"{").status_code == 400
        assert http.get("/__mock/presence").json()["u-new"] == "110"
        assert http.get("/api/not-a-thing").status_code == 404
    assert httpx.get(server.url + "/api/activities").status_code == 401
    assert httpx.post(server.url + "/__mock/delete", json={}).status_code == 401


def test_token_allowlist():
    with MockAlexaServer(default_state(), tokens=["good"]) as srv:
        assert httpx.get(srv.url + "/api/bootstrap", headers={"Authorization": "Bearer bad"}).status_code == 401
        assert httpx.get(srv.url + "/api/bootstrap", headers={"Authorization": "Bearer good"}).status_code == 200
