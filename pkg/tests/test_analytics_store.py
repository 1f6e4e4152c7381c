from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netintent.errors import NotFoundError, ValidationError
from netintent.records import TelemetryRecord
from netintent.store import AnalyticsStore

from conftest import make_sim


def rec(metric="memory_utilization_pct", nf="UPF", value=50.0, ts=0, **dims):
    return TelemetryRecord(nf, metric, value, "u", ts, dims)


class TestInsert:
    def test_collection_name_derivation(self):
        store = AnalyticsStore()
        name = store.insert(rec())
        assert name == "upf.memory_utilization_pct"

    def test_auto_created_on_first_write(self):
        store = AnalyticsStore()
        assert store.list_collections() == []
        store.insert(rec(metric="throughput_dl_kbps"))
        assert [c["name"] for c in store.list_collections()] == ["upf.throughput_dl_kbps"]

    def test_nan_rejected_at_record_level(self):
        with pytest.raises(ValidationError):
            rec(value=float("nan"))

    def test_count_increments_by_one(self):
        store = AnalyticsStore()
        for i in range(5):
            before = {c["name"]: c["count"] for c in store.list_collections()}
            store.insert(rec(ts=i))
            after = {c["name"]: c["count"] for c in store.list_collections()}
            assert after["upf.memory_utilization_pct"] == before.get("upf.memory_utilization_pct", 0) + 1


class TestListCollections:
    def test_empty(self):
        assert AnalyticsStore().list_collections() == []

    def test_counts_and_bounds(self):
        store = AnalyticsStore()
        for ts in (5, 10, 20):
            store.insert(rec(ts=ts))
        (info,) = store.list_collections()
        assert info == {
            "name": "upf.memory_utilization_pct",
            "count": 3,
            "min_ts": 5,
            "max_ts": 20,
        }

    def test_two_metrics_two_entries(self):
        store = AnalyticsStore()
        store.insert(rec())
        store.insert(rec(metric="throughput_dl_kbps"))
        assert len(store.list_collections()) == 2


class TestQuery:
    def test_recent_first_returns_latest(self):
        store = AnalyticsStore()
        for ts in range(600):
            store.insert(rec(metric="throughput_dl_kbps", ts=ts, value=float(ts)))
        out = store.query("upf.throughput_dl_kbps", limit=500)
        assert len(out) == 500
        assert out[0].timestamp_ms == 599  # newest first
        assert out[-1].timestamp_ms == 100

    def test_dims_filter_exact(self):
        store = AnalyticsStore()
        for i in range(10):
            store.insert(rec(ts=i, slice="internet" if i % 2 else "streaming"))
        out = store.query("upf.memory_utilization_pct", {"slice": "internet"}, limit=100)
        assert all(r.dims["slice"] == "internet" for r in out)
        assert len(out) == 5

    def test_unknown_collection_named_in_error(self):
        store = AnalyticsStore()
        with pytest.raises(NotFoundError, match="nope.metric"):
            store.query("nope.metric", limit=1)

    def test_bad_limit_and_order(self):
        store = AnalyticsStore()
        store.insert(rec())
        with pytest.raises(ValidationError):
            store.query("upf.memory_utilization_pct", limit=0)
        with pytest.raises(ValidationError):
            store.query("upf.memory_utilization_pct", order="sideways")


@settings(max_examples=60, deadline=None)
@given(
    slices=st.lists(st.sampled_from(["a", "b", None]), min_size=1, max_size=60),
    limit=st.integers(1, 70),
    order=st.sampled_from(["recent_first", "oldest_first"]),
    want=st.sampled_from(["a", "b"]),
)
def test_query_matches_brute_force_oracle(slices, limit, order, want):
    """Results are a contiguous suffix (recent_first) / prefix (oldest_first)
    of the filtered collection, per an independent filter-then-slice oracle."""
    store = AnalyticsStore()
    records = []
    for i, slc in enumerate(slices):
        dims = {"slice": slc} if slc else {}
        r = rec(ts=i, value=float(i), **dims)
        store.insert(r)
        records.append(r)
    oracle_filtered = [r for r in records if r.dims.get("slice") == want]
    if order == "recent_first":
        oracle = list(reversed(oracle_filtered))[:limit]
    else:
        oracle = oracle_filtered[:limit]
    got = store.query("upf.memory_utilization_pct", {"slice": want}, limit=limit, order=order)
    assert [r.timestamp_ms for r in got] == [r.timestamp_ms for r in oracle]


def test_store_sink_completeness_after_sim_run():
    """Store contents equal the multiset of all published records."""
    from netintent.bus import EventBus, EventFilter, StoreSink

    sim = make_sim(seed=9, num_ues=4)
    store = AnalyticsStore()
    bus = EventBus(sim.clock)
    bus.subscribe(EventFilter(), StoreSink(store), batch_period_ms=1000)
    published = []
    original = bus.publish

    def tracking_publish(record):
        published.append(record)
        return original(record)

    sim.record_sink = tracking_publish
    sim.advance(50)
    sim.set_session_ambr(1, 30000, 30000)
    sim.advance(10)

    stored = sorted(
        (json.dumps(r.to_json_obj(), sort_keys=True) for c in store.collections.values() for r in c)
    )
    expected = sorted(json.dumps(r.to_json_obj(), sort_keys=True) for r in published)
    assert stored == expected


def test_jsonl_persistence_roundtrip(tmp_path):
    path = tmp_path / "telemetry.jsonl"
    store = AnalyticsStore(path)
    for ts in range(10):
        store.insert(rec(ts=ts, value=float(ts), slice="internet"))
    store.close()

    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 10
    assert json.loads(lines[0])["metric"] == "memory_utilization_pct"

    reloaded = AnalyticsStore(path)
    assert reloaded.total_records() == 10
    out = reloaded.query("upf.memory_utilization_pct", limit=3)
    assert [r.timestamp_ms for r in out] == [9, 8, 7]
    reloaded.close()
