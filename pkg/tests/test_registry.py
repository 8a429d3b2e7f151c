from __future__ import annotations

import pytest

from alexa_evidence.model import ArtifactCategory
from alexa_evidence.registry import PLACEHOLDERS, MissingBinding, get, match_url, registry

REGISTRY_SIZE = 52  # discovered /api table rows plus contacts and utterance audio


def test_golden_size_and_unique_ids():
    rows = registry()
    assert len(rows) == REGISTRY_SIZE
    assert len({d.endpoint_id for d in rows}) == REGISTRY_SIZE


def test_lookup():
    act = get("activities")
    assert act.path_template == "/api/activities"
    assert act.category is ArtifactCategory.USER_ACTIVITY
    assert act.typed_parser
    assert get("utterance-audio").json_body is False
    assert get("contacts") is not None
    assert get("nonexistent") is None


def test_placeholders_are_known():
    for d in registry():
        assert set(d.placeholders) <= PLACEHOLDERS, d.endpoint_id


def test_render_and_match_round_trip():
    for d in registry():
        bindings = {p: f"v-{p}" for p in d.placeholders}
        url = d.render(bindings)
        found = match_url(url)
        assert found is not None and found[0].endpoint_id == d.endpoint_id, url
        assert found[1] == bindings


def test_missing_binding():
    desc = next(d for d in registry() if d.placeholders)
    with pytest.raises(MissingBinding):
        desc.render({})
    with pytest.raises(MissingBinding):
        desc.render({p: "" for p in desc.placeholders})
