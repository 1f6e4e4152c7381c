"""Event exposure: filtered pub/sub over the telemetry stream.

Subscriptions see records published after they were created (no replay),
batched by virtual time and delivered as gap-free, sequence-numbered
notifications. The analytics store rides along as a built-in synchronous
sink subscribed to everything, which is how published telemetry becomes
queryable history.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable
from urllib.parse import urlparse

from .clock import VirtualClock
from .errors import NotFoundError, ValidationError
from .records import NF_SOURCES, TelemetryRecord
from .store import AnalyticsStore

WEBHOOK_MAX_RETRIES = 3
WEBHOOK_BACKOFF_MS = 1000

WebhookTransport = Callable[[str, dict[str, Any]], None]


@dataclass(frozen=True)
class EventFilter:
    """A record matches iff every non-empty field matches."""

    source_nfs: frozenset[str] = frozenset()
    metrics: frozenset[str] = frozenset()
    slice: str | None = None
    supi: str | None = None

    def __post_init__(self) -> None:
        unknown = self.source_nfs - set(NF_SOURCES)
        if unknown:
            raise ValidationError(f"unknown source NFs in filter: {sorted(unknown)}")

    def matches(self, record: TelemetryRecord) -> bool:
        if self.source_nfs and record.source_nf not in self.source_nfs:
            return False
        if self.metrics and record.metric not in self.metrics:
            return False
        if self.slice is not None and record.dims.get("slice") != self.slice:
            return False
        if self.supi is not None and record.dims.get("supi") != self.supi:
            return False
        return True

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> EventFilter:
        return cls(
            source_nfs=frozenset(obj.get("source_nfs", [])),
            metrics=frozenset(obj.get("metrics", [])),
            slice=obj.get("slice"),
            supi=obj.get("supi"),
        )


@dataclass(frozen=True)
class Notification:
    sub_id: str
    seq: int
    records: tuple[TelemetryRecord, ...]

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "sub_id": self.sub_id,
            "seq": self.seq,
            "records": [r.to_json_obj() for r in self.records],
        }


class Sink:
    """Delivery target for notifications. synchronous=True bypasses batching."""

    synchronous = False

    def deliver(self, notification: Notification) -> None:
        raise NotImplementedError


class QueueSink(Sink):
    def __init__(self) -> None:
        self.notifications: list[Notification] = []

    def deliver(self, notification: Notification) -> None:
        self.notifications.append(notification)

    def records(self) -> list[TelemetryRecord]:
        return [r for n in self.notifications for r in n.records]


class StoreSink(Sink):
    synchronous = True

    def __init__(self, store: AnalyticsStore) -> None:
        self.store = store

    def deliver(self, notification: Notification) -> None:
        for record in notification.records:
            self.store.insert(record)


class WebhookSink(Sink):
    def __init__(self, url: str, transport: WebhookTransport | None = None) -> None:
        parsed = urlparse(url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValidationError(f"invalid webhook url {url!r}")
        self.url = url
        self.transport = transport if transport is not None else _http_post

    def deliver(self, notification: Notification) -> None:
        self.transport(self.url, notification.to_json_obj())


def _http_post(url: str, payload: dict[str, Any]) -> None:
    import requests

    resp = requests.post(url, json=payload, timeout=5)
    resp.raise_for_status()


@dataclass
class Subscription:
    sub_id: str
    filter: EventFilter
    sink: Sink
    batch_period_ms: int
    seq: int = 0
    pending: list[TelemetryRecord] = field(default_factory=list)
    batch_opened_ms: int | None = None
    delivery_errors: int = 0

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "sub_id": self.sub_id,
            "batch_period_ms": self.batch_period_ms,
            "delivered_seq": self.seq,
            "pending": len(self.pending),
            "delivery_errors": self.delivery_errors,
        }


@dataclass
class _Retry:
    due_ms: int
    sub_id: str
    notification: Notification
    attempts: int


class EventBus:
    def __init__(self, clock: VirtualClock):
        self.clock = clock
        self.subscriptions: dict[str, Subscription] = {}
        self._next_sub = 1
        self._retries: list[_Retry] = []

    def subscribe(self, filt: EventFilter, sink: Sink, batch_period_ms: int = 1000) -> str:
        if not isinstance(sink, Sink):
            raise ValidationError("sink must be a Sink instance")
        if batch_period_ms <= 0:
            raise ValidationError(f"batch_period_ms must be > 0, got {batch_period_ms}")
        sub_id = f"sub-{self._next_sub}"
        self._next_sub += 1
        self.subscriptions[sub_id] = Subscription(
            sub_id=sub_id, filter=filt, sink=sink, batch_period_ms=batch_period_ms
        )
        return sub_id

    def unsubscribe(self, sub_id: str) -> None:
        sub = self.subscriptions.get(sub_id)
        if sub is None:
            raise NotFoundError(f"unknown subscription {sub_id!r}")
        self._flush(sub)  # pending records were published while subscribed
        del self.subscriptions[sub_id]
        self._retries = [r for r in self._retries if r.sub_id != sub_id]

    def publish(self, record: TelemetryRecord | dict[str, Any]) -> int:
        """Append the record to every matching subscription's batch; returns match count."""
        if isinstance(record, dict):
            try:
                record = TelemetryRecord.from_json_obj(record)
            except ValidationError:
                return 0
        elif not isinstance(record, TelemetryRecord):
            return 0
        now = self.clock.now_ms
        count = 0
        for sub in list(self.subscriptions.values()):
            if not sub.filter.matches(record):
                continue
            count += 1
            if sub.sink.synchronous:
                sub.seq += 1
                sub.sink.deliver(Notification(sub.sub_id, sub.seq, (record,)))
                continue
            if not sub.pending:
                sub.batch_opened_ms = now
            sub.pending.append(record)
            if now - sub.batch_opened_ms >= sub.batch_period_ms:
                self._flush(sub)
        return count

    def on_tick(self, now_ms: int) -> None:
        """Flush due batches and run due webhook retries (virtual-time driven)."""
        for sub in list(self.subscriptions.values()):
            if sub.pending and now_ms - sub.batch_opened_ms >= sub.batch_period_ms:
                self._flush(sub)
        due = [r for r in self._retries if r.due_ms <= now_ms]
        self._retries = [r for r in self._retries if r.due_ms > now_ms]
        for retry in due:
            sub = self.subscriptions.get(retry.sub_id)
            if sub is None:
                continue
            self._attempt(sub, retry.notification, retry.attempts)

    def flush_all(self) -> None:
        for sub in list(self.subscriptions.values()):
            self._flush(sub)

    def _flush(self, sub: Subscription) -> None:
        if not sub.pending:
            return
        sub.seq += 1
        # stable sort: batches are timestamp-ordered while per-stream publish
        # order is preserved (streams are individually non-decreasing)
        ordered = sorted(sub.pending, key=lambda r: r.timestamp_ms)
        notification = Notification(sub.sub_id, sub.seq, tuple(ordered))
        sub.pending = []
        sub.batch_opened_ms = None
        self._attempt(sub, notification, attempts=0)

    def _attempt(self, sub: Subscription, notification: Notification, attempts: int) -> None:
        try:
            sub.sink.deliver(notification)
        except Exception:
            if attempts < WEBHOOK_MAX_RETRIES:
                self._retries.append(
                    _Retry(
                        due_ms=self.clock.now_ms + WEBHOOK_BACKOFF_MS * (attempts + 1),
                        sub_id=sub.sub_id,
                        notification=notification,
                        attempts=attempts + 1,
                    )
                )
            else:
                sub.delivery_errors += 1

    def describe(self) -> list[dict[str, Any]]:
        return [self.subscriptions[k].to_json_obj() for k in sorted(self.subscriptions)]


def notification_to_wire(notification: Notification) -> str:
    return json.dumps(notification.to_json_obj(), sort_keys=True)
