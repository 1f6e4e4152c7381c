from __future__ import annotations

import math
import random
import statistics

import pytest

from netintent.errors import InsufficientDataError, NotFoundError
from netintent.store import AnalyticsStore
from netintent.tools.analytics import kpi_stats
from netintent.tools.approvals import ApprovalRegistry
from netintent.tools.engine import IntentToolsEngine
from netintent.tools.scheduler import PolicyScheduler

from conftest import make_sim


def brute_force_stats(values):
    """Independent oracle: stdlib statistics + hand-rolled slope/percentile."""
    n = len(values)
    mean = sum(values) / n
    sample_std = statistics.stdev(values)
    xs = list(range(n))
    x_mean = sum(xs) / n
    slope = sum((x - x_mean) * (v - mean) for x, v in zip(xs, values)) / sum(
        (x - x_mean) ** 2 for x in xs
    )
    rank = max(1, math.ceil(0.95 * n))
    p95 = sorted(values)[rank - 1]
    return {
        "count": n,
        "mean": mean,
        "sample_std": sample_std,
        "min": min(values),
        "max": max(values),
        "p95": p95,
        "trend_slope": slope,
    }


class TestKpiExamples:
    def test_one_to_five_exact(self):
        out = kpi_stats([1, 2, 3, 4, 5])
        assert out["mean"] == 3
        assert out["trend_slope"] == pytest.approx(1.0, abs=1e-12)
        assert out["min"] == 1
        assert out["max"] == 5
        assert out["p95"] == 5

    def test_one_to_five_sample_std_frozen(self):
        # oracle formula sqrt(sum((x - mean)^2) / (n - 1)) -> 1.5811388300841898
        out = kpi_stats([1, 2, 3, 4, 5])
        assert out["sample_std"] == pytest.approx(1.5811, abs=1e-3)
        assert out["sample_std"] == pytest.approx(1.5811388300841898, abs=1e-12)

    def test_single_value_insufficient(self):
        with pytest.raises(InsufficientDataError):
            kpi_stats([42.0])


def test_500_random_series_match_oracle():
    rng = random.Random(99)
    for _ in range(500):
        n = rng.randint(2, 60)
        values = [rng.uniform(-1000, 1000) for _ in range(n)]
        got = kpi_stats(values)
        want = brute_force_stats(values)
        for key in want:
            assert got[key] == pytest.approx(want[key], abs=1e-9), key


class TestEngineKpi:
    def _engine(self):
        sim = make_sim(seed=7)
        store = AnalyticsStore()
        sim.record_sink = store.insert
        sim.advance(50)
        clock = sim.clock
        return IntentToolsEngine(
            sim, store, PolicyScheduler(sim, clock), ApprovalRegistry(clock), clock
        )

    def test_window_is_most_recent_values(self):
        engine = self._engine()
        out = engine.kpi_analyze("upf.memory_utilization_pct", 10, {"slice": "internet"})
        series = engine.store.values("upf.memory_utilization_pct", {"slice": "internet"}, 10)
        assert out == pytest.approx(brute_force_stats(series), abs=1e-9)
        assert out["count"] == 10

    def test_unknown_collection(self):
        engine = self._engine()
        with pytest.raises(NotFoundError):
            engine.kpi_analyze("upf.nope", 10)

    def test_too_few_matching(self):
        engine = self._engine()
        with pytest.raises(InsufficientDataError):
            engine.kpi_analyze("upf.memory_utilization_pct", 10, {"slice": "ghost"})

    def test_last_n_below_two(self):
        engine = self._engine()
        with pytest.raises(InsufficientDataError):
            engine.kpi_analyze("upf.memory_utilization_pct", 1)
