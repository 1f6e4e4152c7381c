"""Collection-oriented time-series store backing the data-retrieval tools.

Collections are named `<nf>.<metric>` (lower-cased) and hold timestamp-ordered
telemetry, ties broken by insertion order. Optional JSON-lines persistence
keeps replays diffable: one record object per line, UTF-8.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import NotFoundError, ValidationError
from .records import TelemetryRecord

ORDER_RECENT_FIRST = "recent_first"
ORDER_OLDEST_FIRST = "oldest_first"


class AnalyticsStore:
    def __init__(self, persist_path: str | Path | None = None):
        self.collections: dict[str, list[TelemetryRecord]] = {}
        self._persist_path = Path(persist_path) if persist_path else None
        self._persist_fh = None
        if self._persist_path is not None:
            if self._persist_path.exists():
                self._load(self._persist_path)
            self._persist_path.parent.mkdir(parents=True, exist_ok=True)
            self._persist_fh = self._persist_path.open("a", encoding="utf-8")

    def _load(self, path: Path) -> None:
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = TelemetryRecord.from_json_obj(json.loads(line))
                self._append(record)

    def close(self) -> None:
        if self._persist_fh is not None:
            self._persist_fh.close()
            self._persist_fh = None

    def insert(self, record: TelemetryRecord) -> str:
        """Append a record to its derived collection, creating it on first write."""
        if not isinstance(record, TelemetryRecord):
            raise ValidationError("insert expects a TelemetryRecord")
        name = self._append(record)
        if self._persist_fh is not None:
            self._persist_fh.write(json.dumps(record.to_json_obj(), sort_keys=True) + "\n")
            self._persist_fh.flush()
        return name

    def _append(self, record: TelemetryRecord) -> str:
        name = record.collection_name()
        bucket = self.collections.setdefault(name, [])
        if bucket and record.timestamp_ms < bucket[-1].timestamp_ms:
            raise ValidationError(
                f"collection {name!r}: timestamp {record.timestamp_ms} precedes "
                f"latest {bucket[-1].timestamp_ms}"
            )
        bucket.append(record)
        return name

    def list_collections(self) -> list[dict[str, Any]]:
        out = []
        for name in sorted(self.collections):
            records = self.collections[name]
            if not records:
                continue
            out.append(
                {
                    "name": name,
                    "count": len(records),
                    "min_ts": records[0].timestamp_ms,
                    "max_ts": records[-1].timestamp_ms,
                }
            )
        return out

    def query(
        self,
        collection: str,
        dims_filter: dict[str, Any] | None = None,
        limit: int = 100,
        order: str = ORDER_RECENT_FIRST,
    ) -> list[TelemetryRecord]:
        """Up to `limit` matching records; recent_first yields newest first."""
        if collection not in self.collections:
            raise NotFoundError(f"unknown collection {collection!r}")
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        if order not in (ORDER_RECENT_FIRST, ORDER_OLDEST_FIRST):
            raise ValidationError(f"unknown order {order!r}")
        matching = [
            r for r in self.collections[collection] if _dims_match(r, dims_filter or {})
        ]
        if order == ORDER_RECENT_FIRST:
            return list(reversed(matching[-limit:]))
        return matching[:limit]

    def values(
        self,
        collection: str,
        dims_filter: dict[str, Any] | None,
        last_n: int,
    ) -> list[float]:
        """The last_n most recent matching values in chronological order."""
        recent = self.query(collection, dims_filter, limit=last_n, order=ORDER_RECENT_FIRST)
        return [r.value for r in reversed(recent)]

    def total_records(self) -> int:
        return sum(len(v) for v in self.collections.values())


def _dims_match(record: TelemetryRecord, dims_filter: dict[str, Any]) -> bool:
    for key, wanted in dims_filter.items():
        if record.dims.get(key) != wanted:
            return False
    return True
