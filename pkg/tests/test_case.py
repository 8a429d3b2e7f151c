from __future__ import annotations

import json

import pytest

from alexa_evidence.capture import ingest
from alexa_evidence.case import (
    AudioPresence,
    CaseIntegrityError,
    CaseSource,
    EvidenceCase,
    load_case,
    read_manifest,
    seal_records,
    write_case,
)
from alexa_evidence.records import ApiRecord
from helpers import export_item, export_xml


def test_write_load_round_trip(default_case, tmp_path):
    manifest = write_case(default_case, tmp_path / "c")
    loaded = load_case(tmp_path / "c")
    assert loaded.records == default_case.records
    assert loaded.case_id == default_case.case_id and loaded.source is CaseSource.MOCK
    assert manifest == read_manifest(tmp_path / "c")
    assert manifest["summary"]["records"] == len(default_case.records)
    assert any(k.startswith("audio/") for k in manifest["files"])


def test_sealed_case_is_not_overwritten(default_case, tmp_path):
    write_case(default_case, tmp_path)
    with pytest.raises(FileExistsError):
        write_case(default_case, tmp_path)
    write_case(default_case, tmp_path, overwrite=True)
    load_case(tmp_path)


def test_tampering_is_detected(default_case, tmp_path):
    write_case(default_case, tmp_path)
    capture = tmp_path / "capture.jsonl"
    lines = capture.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["status"] = 500
    lines[0] = json.dumps(rec)
    capture.write_text("\n".join(lines) + "\n")
    with pytest.raises(CaseIntegrityError):
        load_case(tmp_path)


def test_tampered_derived_file_is_detected(default_case, tmp_path):
    write_case(default_case, tmp_path)
    target = next((tmp_path / "parsed").glob("*.json"))
    target.write_text(target.read_text() + " ")
    with pytest.raises(CaseIntegrityError):
        load_case(tmp_path)


def test_unsealed_directory(tmp_path):
    with pytest.raises(CaseIntegrityError):
        load_case(tmp_path)


def test_capture_records_get_endpoint_ids(tmp_path):
    xml = export_xml([
        export_item("https://alexa.amazon.com/api/activities", b'{"activities":[]}'),
        export_item("https://alexa.amazon.com/api/mystery", b'{"a":1}'),
    ])
    records = ingest(xml).records
    case, manifest = seal_records(tmp_path / "cap", records, CaseSource.CAPTURE)
    assert [r.endpoint_id for r in case.records] == ["activities", None]
    assert case.case_id == "cap" and manifest["source"] == CaseSource.CAPTURE.value
    assert case.activities() == []


def test_schema_mismatch_is_kept_not_raised():
    rec = ApiRecord.from_bytes("https://alexa.amazon.com/api/activities", "GET", 200, "application/json",
                               b'{"activities":[{"activityId":1}]}')
    case = EvidenceCase.build("c", CaseSource.CAPTURE, [rec])
    (mismatch,) = case.mismatches
    assert mismatch.endpoint_id == "activities"
    assert case.activities() == []


def test_audio_presence_states(default_case, state):
    uid = next(iter(state.interactions))
    assert default_case.audio_presence(uid) is AudioPresence.PRESENT
    assert default_case.audio(uid).verify()
    assert default_case.audio_presence("never-asked") is AudioPresence.NOT_CHECKED
    missing = ApiRecord.from_bytes("https://alexa.amazon.com/api/utterance/audio/data?id=gone", "GET", 404,
                                   "application/json", b'{"error":"x"}', failure="http_404")
    case = EvidenceCase.build("c", CaseSource.MOCK, [missing])
    assert case.audio_presence("gone") is AudioPresence.ABSENT_CONFIRMED
