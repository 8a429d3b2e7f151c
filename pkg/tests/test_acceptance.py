"""The eight acceptance criteria, each timed against its limit.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line, shown even without ``-s``.
"""

from __future__ import annotations

import json
import os
import random
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from functools import cmp_to_key
from itertools import product
from pathlib import Path

import pytest

from alexa_evidence.analysis import (
    DeletionState,
    DiffKind,
    analyze_case,
    build_timeline,
    classify_triple,
    diff_snapshots,
    join_interactions,
    order_events,
)
from alexa_evidence.capture import dedupe, ingest
from alexa_evidence.mock import (
    DeletionKind,
    MockState,
    default_state,
    generation_fixtures,
    reachable_presences,
    run_script,
    weather_scenario,
)
from alexa_evidence.model import Activity, ActivityStatus, Card, ListItem, NamedList
from alexa_evidence.registry import registry
from helpers import acquire_state, make_case, oracle_cmp, random_events, synthetic_export

REGISTRY_SIZE = 52  # 50 discovered /api rows, plus contacts and utterance audio


@contextmanager
def criterion(request, number: int, name: str, limit_s: float):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(status: str, elapsed: float, note: str = "") -> None:
        line = f"ACCEPTANCE {number} {status} {name} ({elapsed:.3f}s, limit {limit_s}s){note}"
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)

    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        emit("FAIL", time.perf_counter() - start, f": {type(exc).__name__}: {exc}".splitlines()[0])
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= limit_s:
        emit("FAIL", elapsed, ": over time limit")
        pytest.fail(f"criterion {number} took {elapsed:.3f}s, limit {limit_s}s")
    emit("PASS", elapsed)


def _verdict(case, interaction_id: str):
    result = analyze_case(case)
    return {v.interaction_id: v for v in result.verdicts}.get(interaction_id)


def test_1_deletion_matrix(request):
    with criterion(request, 1, "deletion matrix reproduction", 5.0):
        expectations = {
            DeletionKind.HISTORY_DELETE: ({"activities": False, "cards": False, "utterance": False}, None),
            DeletionKind.CARD_REMOVE: ({"activities": True, "cards": False, "utterance": True},
                                       DeletionState.CARD_REMOVED),
            DeletionKind.VOICE_DELETE: ({"activities": True, "cards": True, "utterance": False},
                                        DeletionState.VOICE_RECORDING_DELETED),
        }
        for kind, (seen, verdict) in expectations.items():
            steps = weather_scenario(kind)
            trace, final = run_script(steps)
            before, after = trace[3], trace[-1]
            assert before["label"] == "before" and after["label"] == "after"
            assert {k: before["interactions"]["u-weather"][k] for k in seen} == dict.fromkeys(seen, True)
            assert {k: after["interactions"]["u-weather"][k] for k in seen} == seen
            # named lists (and every other endpoint) untouched
            assert before["endpoint_digests"] == after["endpoint_digests"]
            assert any(k.startswith("namedLists") for k in after["endpoint_digests"])

            before_state = run_script(steps[:3])[1]
            case_before, _ = acquire_state(before_state, "before")
            assert _verdict(case_before, "u-weather").state is DeletionState.INTACT
            case_after, _ = acquire_state(final, "after")
            got = _verdict(case_after, "u-weather")
            if verdict is None:
                # nothing of the interaction remains to classify
                assert got is None
                assert "u-weather" not in {a.utterance_id for a in case_after.activities()}
            else:
                assert got.state is verdict


def test_2_closure_oracle(request):
    with criterion(request, 2, "closure oracle equivalence", 1.0):
        # independent model: each operation clears a fixed subset of (activity, card, audio)
        clears = {DeletionKind.HISTORY_DELETE: "000", DeletionKind.CARD_REMOVE: "101", DeletionKind.VOICE_DELETE: "110"}
        oracle = set()
        for n in range(4):
            for seq in product(DeletionKind, repeat=n):
                bits = "111"
                for op in seq:
                    bits = "".join("1" if b == m == "1" else "0" for b, m in zip(bits, clears[op]))
                oracle.add(bits)
        reachable = reachable_presences(3)
        assert reachable == oracle == {"111", "110", "101", "100", "000"}
        anomalous = {"".join(map(str, t)) for t in product((0, 1), repeat=3)
                     if classify_triple(*(bool(x) for x in t)) is DeletionState.ANOMALOUS}
        assert anomalous == {"011", "010", "001"}
        assert not anomalous & reachable


def test_3_ingest_conservation(request):
    with criterion(request, 3, "ingest conservation", 5.0):
        planted = synthetic_export(500, seed=2019)
        result = ingest(planted.xml)
        report = result.report.to_dict()
        assert report["total"] == 500 and report["balanced"]
        removed = sum(report[k] for k in ("rejected", "dropped_host", "dropped_mime", "undecodable",
                                          "dup_removed", "empty_removed"))
        assert report["kept"] + removed == 500
        assert {k: report[k] for k in planted.expected} == planted.expected
        assert all(planted.expected[k] > 0 for k in ("rejected", "dropped_host", "dup_removed", "empty_removed"))
        again = dedupe(result.records)
        assert again.records == result.records and again.report.dup_removed == again.report.empty_removed == 0


def test_4_registry_completeness(request):
    with criterion(request, 4, "registry completeness", 0.1):
        rows = registry()
        assert len(rows) == REGISTRY_SIZE
        ids = {d.endpoint_id for d in rows}
        assert {"contacts", "utterance-audio"} <= ids


def test_5_generation_diff(request):
    with criterion(request, 5, "device generation diff", 5.0):
        older, newer = generation_fixtures()
        a, _ = acquire_state(MockState.from_fixture(older), "older")
        b, _ = acquire_state(MockState.from_fixture(newer), "newer")
        diff = diff_snapshots(a, b)

        def changed(endpoint: str, leaf: str) -> set:
            return {frozenset((e.details["a"], e.details["b"])) for e in diff.by_kind(DiffKind.FIELD_CHANGED)
                    if e.endpoint_id == endpoint and e.path.endswith("." + leaf)}

        assert frozenset(("641574820", "2584225924")) in changed("devices-v2", "software_version")
        assert frozenset(("A3S5BH2HU6VAYF", "A32DOYMUN6DTXA")) in changed("devices-v2", "device_type")
        bedroom = [e for e in diff.by_kind(DiffKind.ITEMS_DIFFER)
                   if e.endpoint_id == "phoenix" and isinstance(e.details["item"], dict)
                   and e.details["item"].get("group_name") == "Bedroom"]
        assert len(bedroom) == 1 and bedroom[0].details["only_in"] == "a"
        assert not diff_snapshots(a, a) and not diff_snapshots(b, b)


def test_6_timeline_determinism(request):
    with criterion(request, 6, "timeline determinism", 5.0):
        rng = random.Random(1000)
        events = random_events(rng, 1000)
        want = sorted(events, key=cmp_to_key(oracle_cmp))
        for _ in range(10):
            shuffled = events[:]
            rng.shuffle(shuffled)
            assert order_events(shuffled) == want

        state = default_state()
        for iid in list(state.interactions)[4:]:
            del state.interactions[iid]
        case, _ = acquire_state(state, "four")
        activities = [e for e in build_timeline(case, join_interactions(case)).events if e.source.value == "Activity"]
        assert [e.refs[1] for e in activities] == ["u-0001", "u-0002", "u-0003", "u-0004"]
        # 15:53 -> 15:54 local (BST) is 14:53 -> 14:54 UTC
        assert [time.strftime("%H:%M", time.gmtime(e.at / 1000)) for e in activities] == \
            ["14:53", "14:53", "14:53", "14:54"]


def test_7_residue_inference(request):
    with criterion(request, 7, "residue inference", 1.0):
        milk = ListItem("i-milk", "milk", False, 1_000_500, 1_000_500)
        bleach = ListItem("i-bleach", "bleach", False, 2_000_000, 2_000_000)
        shopping = NamedList("list-shop", "Shopping", 0, 2_000_000, (milk, bleach))
        act = Activity("a1", "u1", "add milk to my shopping list", 1_000_000, "S1", "T", "C", ActivityStatus.SUCCESS)
        card = Card("c1", "TextCard", "Shopping list", 1_000_000, linked_activity_id="a1")
        case = make_case(activities=[act], cards=[card], audio={"u1": True}, lists=[shopping])
        result = analyze_case(case)
        inferred = [v for v in result.verdicts if v.state is DeletionState.INFERRED_HISTORY_DELETION]
        assert len(inferred) == 1
        assert inferred[0].interaction_id == "residue:list-shop/i-bleach"
        assert any("list-shop/i-bleach" in line for line in inferred[0].evidence)
        assert {v.interaction_id: v.state for v in result.verdicts}["u1"] is DeletionState.INTACT


def _cli() -> list[str]:
    exe = shutil.which("alexa-evidence")
    return [exe] if exe else [sys.executable, "-m", "alexa_evidence"]


def test_8_end_to_end(request, tmp_path):
    with criterion(request, 8, "end-to-end mock, acquire, analyze", 30.0):
        env = {**os.environ, "PYTHONUNBUFFERED": "1"}
        mock = subprocess.Popen(_cli() + ["mock", "--port", "0", "--json"], stdout=subprocess.PIPE, text=True,
                                env=env)
        try:
            url = json.loads(mock.stdout.readline())["url"]
            case = tmp_path / "case"
            acquire = subprocess.run(_cli() + ["acquire", "--base-url", url, "--token", "e2e", "--case", str(case),
                                               "--mock-source"], capture_output=True, text=True, env=env, timeout=25)
            assert acquire.returncode == 0, acquire.stderr
            analyze = subprocess.run(_cli() + ["analyze", "--case", str(case)], capture_output=True, text=True,
                                     env=env, timeout=25)
            assert analyze.returncode == 0, analyze.stderr
        finally:
            mock.terminate()
            mock.wait(timeout=10)
        manifest = json.loads((case / "manifest.json").read_text())
        assert manifest["records"] and manifest["files"]
        findings = case / "reports" / "findings.json"
        timeline = case / "reports" / "timeline.csv"
        assert findings.stat().st_size > 0 and json.loads(findings.read_text())["verdicts"]
        assert len(timeline.read_text().splitlines()) > 1
        assert Path(case / "capture.jsonl").stat().st_size > 0
