from __future__ import annotations

from datetime import datetime, timezone

import pytest
import pytz
from dateutil import parser as dtparser
from hypothesis import given, strategies as st

from alexa_evidence.timestamps import (
    EPOCH_SECONDS_CUTOFF,
    UnparseableTimestamp,
    normalize_timestamp,
    render_iso,
)


def oracle_local(text: str, zone: str) -> int:
    """Independent conversion through pytz + dateutil."""
    naive = dtparser.isoparse(text)
    aware = pytz.timezone(zone).localize(naive)
    delta = aware.astimezone(pytz.utc) - datetime(1970, 1, 1, tzinfo=pytz.utc)
    return delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000


def test_epoch_seconds_and_millis():
    assert normalize_timestamp(1500000000).ms == 1500000000000
    assert normalize_timestamp(1500000000000).ms == 1500000000000
    assert normalize_timestamp("1500000000").interpretation == "epoch_s"
    assert normalize_timestamp(1565106780123).interpretation == "epoch_ms"


def test_utc_epoch_zero():
    assert normalize_timestamp("1970-01-01T00:00:00Z").ms == 0


def test_local_time_with_hint_matches_oracle():
    got = normalize_timestamp("2019-08-06T15:54:00", "Europe/London")
    assert render_iso(got.ms) == "2019-08-06T14:54:00.000Z"
    assert got.ms == oracle_local("2019-08-06T15:54:00", "Europe/London")
    assert got.interpretation == "iso_local:Europe/London"


def test_naive_without_hint_is_utc():
    assert normalize_timestamp("2019-08-06T15:54:00").ms == oracle_local("2019-08-06T15:54:00", "UTC")


def test_explicit_offset_wins_over_hint():
    a = normalize_timestamp("2019-08-06T15:54:00+02:00", "Europe/London").ms
    assert a == int(datetime(2019, 8, 6, 13, 54, tzinfo=timezone.utc).timestamp() * 1000)


@pytest.mark.parametrize("raw", [None, True, "", "yesterday", float("nan"), [], {}])
def test_unparseable(raw):
    with pytest.raises(UnparseableTimestamp):
        normalize_timestamp(raw)


@given(st.integers(min_value=0, max_value=4_000_000_000_000))
def test_render_then_parse_is_identity(ms):
    assert normalize_timestamp(render_iso(ms)).ms == ms


@given(st.integers(min_value=EPOCH_SECONDS_CUTOFF, max_value=4_000_000_000_000))
def test_normalizing_epoch_ms_is_idempotent(ms):
    once = normalize_timestamp(ms).ms
    assert normalize_timestamp(once).ms == once == ms


@given(st.integers(min_value=-10**10, max_value=EPOCH_SECONDS_CUTOFF - 1),
       st.integers(min_value=-10**10, max_value=EPOCH_SECONDS_CUTOFF - 1))
def test_seconds_preserve_order(a, b):
    ma, mb = normalize_timestamp(a).ms, normalize_timestamp(b).ms
    assert (a < b) == (ma < mb)


@given(st.datetimes(min_value=datetime(1990, 1, 1), max_value=datetime(2035, 1, 1)),
       st.sampled_from(["Europe/London", "America/New_York", "Asia/Kolkata", "UTC"]))
def test_local_matches_oracle(dt, zone):
    text = dt.replace(microsecond=(dt.microsecond // 1000) * 1000).isoformat()
    tz = pytz.timezone(zone)
    try:
        tz.localize(dt, is_dst=None)
    except (pytz.AmbiguousTimeError, pytz.NonExistentTimeError):
        return  # the two libraries resolve DST gaps differently by design
    assert normalize_timestamp(text, zone).ms == oracle_local(text, zone)
