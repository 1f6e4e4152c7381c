from __future__ import annotations

import random

import pytest

from netintent.clock import VirtualClock, parse_duration_ms, parse_epoch
from netintent.errors import ValidationError


def test_epoch_requires_offset():
    with pytest.raises(ValidationError):
        parse_epoch("2025-01-06T16:26:00")
    parse_epoch("2025-01-06T16:26:00+05:30")


def test_monotone():
    clock = VirtualClock(epoch=parse_epoch("2025-01-06T00:00:00+00:00"))
    clock.advance_to(5000)
    with pytest.raises(ValidationError):
        clock.advance_to(4000)


def test_weekday_minute_matches_datetime_for_any_offset():
    rng = random.Random(3)
    offsets = ["+00:00", "+05:30", "-08:00", "+13:45"]
    for _ in range(200):
        epoch = f"2025-01-{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}{rng.choice(offsets)}"
        clock = VirtualClock(epoch=parse_epoch(epoch))
        at_ms = rng.randint(0, 14 * 24 * 3600 * 1000)
        weekday, minute = clock.weekday_minute(at_ms)
        dt = clock.datetime_at(at_ms)
        assert weekday == dt.weekday()
        assert minute == dt.hour * 60 + dt.minute


def test_duration_parsing():
    assert parse_duration_ms("90s") == 90_000
    assert parse_duration_ms("3m") == 180_000
    assert parse_duration_ms("2h") == 7_200_000
    assert parse_duration_ms("500ms") == 500
    assert parse_duration_ms("1500") == 1500
    assert parse_duration_ms("0s") == 0
    assert parse_duration_ms("-1s") == -1000  # rejection happens at the clock
    with pytest.raises(ValidationError):
        parse_duration_ms("one minute")
    with pytest.raises(ValidationError):
        parse_duration_ms("0.0001s")
