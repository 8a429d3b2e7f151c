"""Investigator outputs from sealed cases: interactions, deletion verdicts, timelines, location checks, diffs."""

from __future__ import annotations

from .deletion import (
    DeletionState,
    DeletionVerdict,
    Unresolved,
    classify_case,
    classify_deletion,
    classify_triple,
    infer_residue,
)
from .diff import DiffEntry, DiffKind, SnapshotDiff, diff_snapshots
from .interactions import DEFAULT_JOIN_WINDOW_MS, Interaction, join_interactions, match_by_proximity
from .location import FindingKind, LocationFinding, location_crosscheck
from .reports import AnalysisResult, analyze_case, timeline_csv, write_diff, write_reports
from .timeline import EventSource, Timeline, TimelineEvent, build_timeline, order_events

__all__ = [
    "AnalysisResult",
    "DEFAULT_JOIN_WINDOW_MS",
    "DeletionState",
    "DeletionVerdict",
    "DiffEntry",
    "DiffKind",
    "EventSource",
    "FindingKind",
    "Interaction",
    "LocationFinding",
    "SnapshotDiff",
    "Timeline",
    "TimelineEvent",
    "Unresolved",
    "analyze_case",
    "build_timeline",
    "classify_case",
    "classify_deletion",
    "classify_triple",
    "diff_snapshots",
    "infer_residue",
    "join_interactions",
    "location_crosscheck",
    "match_by_proximity",
    "order_events",
    "timeline_csv",
    "write_diff",
    "write_reports",
]
