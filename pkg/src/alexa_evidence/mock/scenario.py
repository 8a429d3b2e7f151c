"""Replayable deletion experiments against a mock state.

A script is a list of steps, each a dict with an ``op`` key:

* ``seed``: ``{"op": "seed", "fixture": {...}}``; without a fixture the default one is used.
* ``interact``: ``{"op": "interact", "id": ..., "transcript": ..., "at"?: ms, "device_serial"?: ...,
  "card"?: bool, "audio"?: bool}``; ``at`` defaults to the frozen clock.
* ``advance``: ``{"op": "advance", "ms": n}`` moves the frozen clock.
* ``snapshot``: ``{"op": "snapshot", "label"?: ...}`` observes every interaction via
  activities, cards, the history view and the utterance endpoint.
* ``delete``: ``{"op": "delete", "kind": ..., "target": id | "ALL" | {"start", "end"}}``.

Each step yields one trace entry. The trace contains no wall-clock data, so
replaying a script always yields the same trace.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Sequence

from ..canonical import canonical_json
from ..model import parse_artifact
from .fixtures import default_state
from .state import DeletionKind, DeletionOp, InvalidFixture, MockState

__all__ = [
    "ScenarioError",
    "WEATHER_COMMAND",
    "load_script",
    "observe",
    "run_script",
    "scenario_script",
    "trace_to_jsonl",
    "validate_steps",
    "weather_scenario",
]

WEATHER_COMMAND = "What's the weather in Edinburgh?"

_OPS = {"seed", "interact", "advance", "snapshot", "delete"}


class ScenarioError(ValueError):
    """A step is malformed or cannot be applied."""

    def __init__(self, index: int, detail: str) -> None:
        self.index = index
        self.detail = detail
        super().__init__(f"step {index}: {detail}")


def observe(state: MockState) -> dict[str, Any]:
    """What each access path shows right now, keyed by interaction id.

    The history view is rendered from the same store as the activities
    endpoint, so both paths go through the service's own rendering rather
    than peeking at the state directly.
    """
    with state.lock:
        _, act_body = state.render("activities")
        _, card_body = state.render("cards")
        seen_utterances = {a.utterance_id for a in parse_artifact("activities", act_body).artifacts}
        seen_cards = {c.card_id for c in parse_artifact("cards", card_body).artifacts}
        per: dict[str, dict[str, bool]] = {}
        for iid in sorted(state.interactions):
            inter = state.interactions[iid]
            card_id = inter.card.card_id if inter.card else f"card-{iid}"
            status, _ = state.render("utterance-audio", {"utterance_id": iid})
            per[iid] = {
                "activities": iid in seen_utterances,
                "cards": card_id in seen_cards,
                "history": iid in seen_utterances,
                "utterance": status == 200,
            }
        return {"interactions": per, "endpoint_digests": state.endpoint_digests()}


def _require(step: Mapping[str, Any], key: str, index: int) -> Any:
    if key not in step:
        raise ScenarioError(index, f"{step.get('op')} step needs {key!r}")
    return step[key]


def validate_steps(steps: Sequence[Mapping[str, Any]]) -> None:
    for i, step in enumerate(steps):
        if not isinstance(step, Mapping):
            raise ScenarioError(i, "step must be an object")
        op = step.get("op")
        if op not in _OPS:
            raise ScenarioError(i, f"unknown op {op!r}")
        if op == "interact":
            _require(step, "id", i)
            _require(step, "transcript", i)
        elif op == "advance":
            ms = _require(step, "ms", i)
            if not isinstance(ms, int) or isinstance(ms, bool) or ms < 0:
                raise ScenarioError(i, "advance ms must be a non-negative integer")
        elif op == "delete":
            try:
                DeletionOp.from_dict(step)
            except (KeyError, ValueError, TypeError) as exc:
                raise ScenarioError(i, f"bad deletion: {exc}") from None


def run_script(
    steps: Sequence[Mapping[str, Any]], state: MockState | None = None
) -> tuple[list[dict[str, Any]], MockState | None]:
    """Replay ``steps``; returns the trace and the final state.

    Steps before the first ``seed`` act on ``state``; when that is ``None``
    they act on a fresh default state.
    """
    validate_steps(steps)
    trace: list[dict[str, Any]] = []
    for i, step in enumerate(steps):
        op = step["op"]
        entry: dict[str, Any] = {"step": i, "op": op}
        if op == "seed":
            try:
                state = MockState.from_fixture(step["fixture"]) if step.get("fixture") else default_state()
            except InvalidFixture as exc:
                raise ScenarioError(i, str(exc)) from None
            entry["clock_ms"] = state.clock_ms
            entry["presence"] = state.presence()
            trace.append(entry)
            continue
        if state is None:
            state = default_state()
        if op == "interact":
            try:
                inter = state.add_interaction(
                    step["id"],
                    step["transcript"],
                    at=step.get("at"),
                    device_serial=step.get("device_serial"),
                    with_card=step.get("card", True),
                    with_audio=step.get("audio", True),
                )
            except InvalidFixture as exc:
                raise ScenarioError(i, str(exc)) from None
            entry.update(id=inter.interaction_id, at=inter.created_at, presence=inter.presence)
        elif op == "advance":
            with state.lock:
                state.clock_ms += step["ms"]
            entry["clock_ms"] = state.clock_ms
        elif op == "snapshot":
            entry["label"] = step.get("label")
            entry.update(observe(state))
        elif op == "delete":
            deletion = DeletionOp.from_dict(step)
            try:
                entry["affected"] = state.apply_deletion(deletion)
            except KeyError as exc:
                raise ScenarioError(i, f"unknown target {exc}") from None
            entry["deletion"] = deletion.to_dict()
        trace.append(entry)
    return trace, state


def scenario_script(steps: Sequence[Mapping[str, Any]]) -> list[dict[str, Any]]:
    """Deterministic trace of a script; an empty script gives an empty trace."""
    return run_script(steps)[0]


def weather_scenario(kind: DeletionKind | str, interaction_id: str = "u-weather") -> list[dict[str, Any]]:
    """One new weather command, observed before and after a single deletion."""
    kind = DeletionKind(kind)
    return [
        {"op": "seed"},
        {"op": "interact", "id": interaction_id, "transcript": WEATHER_COMMAND},
        {"op": "advance", "ms": 60_000},
        {"op": "snapshot", "label": "before"},
        {"op": "delete", "kind": kind.value, "target": interaction_id},
        {"op": "advance", "ms": 60_000},
        {"op": "snapshot", "label": "after"},
    ]


def trace_to_jsonl(trace: Iterable[Mapping[str, Any]]) -> str:
    return "".join(canonical_json(entry) + "\n" for entry in trace)


def load_script(text: str) -> list[dict[str, Any]]:
    """Parse a script given as a JSON array or JSONL."""
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return json.loads(text)
    return [json.loads(line) for line in text.splitlines() if line.strip()]
