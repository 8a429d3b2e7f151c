"""Seedable stand-in for the Alexa management API, with the three deletion paths."""

from __future__ import annotations

from .fixtures import default_fixture, default_state, generation_fixtures
from .scenario import ScenarioError, observe, run_script, scenario_script, trace_to_jsonl, weather_scenario
from .server import MockAlexaServer
from .state import (
    ALL,
    DeletionKind,
    DeletionOp,
    InteractionState,
    InvalidFixture,
    MockState,
    TimeRange,
    UnknownTarget,
    audio_bytes_for,
    reachable_presences,
)

__all__ = [
    "ALL",
    "DeletionKind",
    "DeletionOp",
    "InteractionState",
    "InvalidFixture",
    "MockAlexaServer",
    "MockState",
    "ScenarioError",
    "TimeRange",
    "UnknownTarget",
    "audio_bytes_for",
    "default_fixture",
    "default_state",
    "generation_fixtures",
    "observe",
    "reachable_presences",
    "run_script",
    "scenario_script",
    "trace_to_jsonl",
    "weather_scenario",
]
