from __future__ import annotations

import random

import pytest

from netintent.clock import VirtualClock, parse_epoch
from netintent.errors import LifecycleError, NotFoundError
from netintent.tools.policy import PolicyChange, TimeWindow
from netintent.tools.scheduler import PolicyScheduler

from conftest import make_sim

WEEKDAYS = {"start": "16:27", "end": "16:30", "days": ["mon", "tue", "wed", "thu", "fri"]}


def plus20(slice_name="streaming", field="ambr_dl"):
    return PolicyChange("chg-t", slice_name, field, "percent_delta", 20.0)


def minute_steps(sim, scheduler, minutes):
    """Advance minute-by-minute without telemetry, evaluating the scheduler."""
    for _ in range(minutes):
        now = sim.clock.advance_to(sim.clock.now_ms + 60_000)
        scheduler.evaluate(now)


class TestWindowReplay:
    def test_use_case_2_trace(self):
        """Replay oracle: epoch Mon 16:26; window [16:27, 16:30) weekdays."""
        sim = make_sim()  # epoch Mon 2025-01-06 16:26
        scheduler = PolicyScheduler(sim, sim.clock)
        scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        slc = sim.get_slice("streaming")
        assert slc.ambr_dl == 100000
        minute_steps(sim, scheduler, 1)  # 16:27
        assert slc.ambr_dl == 120000
        assert all(s.session_ambr_dl == 120000 for s in sim.active_sessions("streaming"))
        minute_steps(sim, scheduler, 2)  # 16:29
        assert slc.ambr_dl == 120000
        minute_steps(sim, scheduler, 1)  # 16:30 -> reverted
        assert slc.ambr_dl == 100000
        assert all(s.session_ambr_dl == 100000 for s in sim.active_sessions("streaming"))

    def test_saturday_never_fires(self):
        sim = make_sim(tick_ms=60_000)
        sim.clock = VirtualClock(
            epoch=parse_epoch("2025-01-11T16:00:00+00:00"), tick_ms=60_000  # Saturday
        )
        scheduler = PolicyScheduler(sim, sim.clock)
        scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        slc = sim.get_slice("streaming")
        for _ in range(120):  # 16:00 -> 18:00 Saturday
            minute_steps(sim, scheduler, 1)
            assert slc.ambr_dl == 100000

    def test_recurs_every_allowed_day(self):
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        action = scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        minute_steps(sim, scheduler, 60 * 24 * 7)  # one full week
        assert action.cycles == 5  # Mon..Fri

    def test_revert_bit_equal_after_cycles(self):
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        baseline = sim.get_slice("streaming").ambr_dl
        minute_steps(sim, scheduler, 60 * 24 * 14)  # two weeks of cycles
        assert sim.get_slice("streaming").ambr_dl == baseline

    def test_cancel_mid_window_reverts(self):
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        action = scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        minute_steps(sim, scheduler, 2)  # inside window
        assert sim.get_slice("streaming").ambr_dl == 120000
        scheduler.cancel(action.action_id)
        assert sim.get_slice("streaming").ambr_dl == 100000
        assert action.state == "cancelled"
        minute_steps(sim, scheduler, 60 * 24)
        assert sim.get_slice("streaming").ambr_dl == 100000  # never fires again

    def test_cancel_unknown_and_double(self):
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        with pytest.raises(NotFoundError):
            scheduler.cancel("action-9")
        action = scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        scheduler.cancel(action.action_id)
        with pytest.raises(LifecycleError):
            scheduler.cancel(action.action_id)

    def test_applied_and_reverted_timestamps(self):
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        action = scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        minute_steps(sim, scheduler, 5)
        assert action.applied_at == 60_000  # 16:27, one minute after epoch
        assert action.reverted_at == 240_000  # 16:30

    def test_percent_of_baseline_not_current(self):
        """A new cycle applies 20% of the restored baseline, never compounding."""
        sim = make_sim()
        scheduler = PolicyScheduler(sim, sim.clock)
        scheduler.schedule(plus20(), TimeWindow.parse(WEEKDAYS))
        peaks = set()
        slc = sim.get_slice("streaming")
        for _ in range(60 * 24 * 7):
            minute_steps(sim, scheduler, 1)
            if slc.ambr_dl != 100000:
                peaks.add(slc.ambr_dl)
        assert peaks == {120000}


def brute_force_week_oracle(epoch_weekday, epoch_minute, window: TimeWindow, minutes):
    """Minute-by-minute expected in-window flags, independent of the scheduler."""
    flags = []
    for m in range(1, minutes + 1):
        total = epoch_minute + m
        weekday = (epoch_weekday + total // (24 * 60)) % 7
        minute_of_day = total % (24 * 60)
        flags.append(window.contains(weekday, minute_of_day))
    return flags


def test_scheduler_week_property_small():
    """Downscaled version of the acceptance week property (20 random pairs)."""
    rng = random.Random(7)
    for trial in range(20):
        start = rng.randint(0, 24 * 60 - 2)
        end = rng.randint(start + 1, 24 * 60)
        days = frozenset(rng.sample(range(7), rng.randint(1, 7)))
        window = TimeWindow(start, end, days)
        epoch_day = rng.randint(0, 6)
        epoch_minute = rng.randint(0, 24 * 60 - 1)
        epoch = parse_epoch("2025-01-06T00:00:00+00:00")  # Monday 00:00
        clock = VirtualClock(epoch=epoch, tick_ms=60_000)
        clock.now_ms = (epoch_day * 24 * 60 + epoch_minute) * 60_000
        sim = make_sim(num_ues=0)
        sim.clock = clock
        scheduler = PolicyScheduler(sim, clock)
        scheduler.schedule(plus20(), window)
        baseline = sim.get_slice("streaming").ambr_dl
        flags = brute_force_week_oracle(epoch_day, epoch_minute, window, 24 * 60 * 7)
        for expected_in in flags:
            now = clock.advance_to(clock.now_ms + 60_000)
            scheduler.evaluate(now)
            want = 120000 if expected_in else baseline
            assert sim.get_slice("streaming").ambr_dl == want
        # park outside the window, then check exact restore
        scheduler.cancel("action-1")
        assert sim.get_slice("streaming").ambr_dl == baseline
