"""Whole-case analysis and the report files it produces."""

from __future__ import annotations

import csv
import io
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..canonical import canonical_json
from ..case import EvidenceCase
from ..timestamps import render_iso
from .deletion import DeletionVerdict, classify_case, infer_residue
from .diff import SnapshotDiff
from .interactions import DEFAULT_JOIN_WINDOW_MS, Interaction, join_interactions
from .location import LocationFinding, location_crosscheck
from .timeline import Timeline, build_timeline

__all__ = [
    "AnalysisResult",
    "REPORT_SCHEMA_VERSION",
    "analyze_case",
    "timeline_csv",
    "write_diff",
    "write_reports",
]

REPORT_SCHEMA_VERSION = 1
TIMELINE_COLUMNS = ("at", "source", "summary", "refs", "device_serial", "schema_version")


@dataclass(frozen=True)
class AnalysisResult:
    case_id: str
    join_window_ms: int
    interactions: tuple[Interaction, ...]
    verdicts: tuple[DeletionVerdict, ...]
    unresolved: tuple[dict[str, str], ...]
    timeline: Timeline
    locations: tuple[LocationFinding, ...]
    case_flags: tuple[dict[str, Any], ...] = ()

    def findings(self) -> dict[str, Any]:
        counts = Counter(v.state.value for v in self.verdicts)
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "case_id": self.case_id,
            "join_window_s": self.join_window_ms / 1000,
            "summary": {
                "interactions": len(self.interactions),
                "verdicts": dict(sorted(counts.items())),
                "unresolved": len(self.unresolved),
                "timeline_events": len(self.timeline.events),
                "unplaced_events": len(self.timeline.unplaced),
                "location_findings": len(self.locations),
            },
            "verdicts": [v.to_dict() for v in self.verdicts],
            "unresolved": list(self.unresolved),
            "interactions": [i.to_dict() for i in self.interactions],
            "location_crosscheck": [f.to_dict() for f in self.locations],
            "case_flags": list(self.case_flags),
        }


def analyze_case(case: EvidenceCase, join_window_ms: int = DEFAULT_JOIN_WINDOW_MS) -> AnalysisResult:
    """Joins, verdicts, timeline and location checks for one sealed case."""
    joined = join_interactions(case, join_window_ms)
    residue = infer_residue(case, joined, join_window_ms)
    interactions = joined + residue
    verdicts, unresolved = classify_case(interactions)
    flags = [{"endpoint_id": eid, "path": f.path, "rule": f.rule, "detail": f.detail, "severity": f.severity}
             for eid, f in case.flags]
    flags += [dict(m.to_dict(), severity="schema_mismatch") for m in case.mismatches]
    flags += [{"endpoint_id": r.endpoint_id, "path": r.url, "rule": "http_failure", "detail": r.failure,
               "severity": "http"} for r in case.http_failures]
    return AnalysisResult(
        case.case_id,
        join_window_ms,
        tuple(interactions),
        tuple(verdicts),
        tuple(unresolved),
        build_timeline(case, joined),
        tuple(location_crosscheck(case)),
        tuple(flags),
    )


def timeline_csv(timeline: Timeline) -> str:
    """CSV with a header row; unplaced events follow the placed ones with an empty ``at``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMELINE_COLUMNS)
    for event in (*timeline.events, *timeline.unplaced):
        writer.writerow([
            render_iso(event.at) if event.at is not None else "",
            event.source_label,
            event.summary,
            ";".join(event.refs),
            event.device_serial or "",
            REPORT_SCHEMA_VERSION,
        ])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def write_reports(result: AnalysisResult, out_dir: str | os.PathLike[str]) -> dict[str, Path]:
    """findings.json and timeline.csv (plus timeline.json with the unplaced section). Overwrites."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"findings": out / "findings.json", "timeline": out / "timeline.csv", "timeline_json": out / "timeline.json"}
    _write(paths["findings"], canonical_json(result.findings(), indent=2) + "\n")
    _write(paths["timeline"], timeline_csv(result.timeline))
    timeline_doc = {"schema_version": REPORT_SCHEMA_VERSION, "case_id": result.case_id, **result.timeline.to_dict()}
    _write(paths["timeline_json"], canonical_json(timeline_doc, indent=2) + "\n")
    return paths


def write_diff(diff: SnapshotDiff, path: str | os.PathLike[str]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    _write(target, canonical_json({"schema_version": REPORT_SCHEMA_VERSION, **diff.to_dict()}, indent=2) + "\n")
    return target
