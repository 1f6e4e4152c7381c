"""Stack assembly: one config file builds the whole system.

The stack owns a single re-entrant lock; every mutation (tool dispatch,
clock advancement, approval resolution) serializes through it, which is what
makes multi-threaded serving safe on top of single-writer domain objects.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .agent.backends import HttpChatBackend, ScriptedBackend
from .agent.loop import (
    IntentRun,
    LocalGateway,
    RegistryWaiter,
    Transcript,
    run_intent,
)
from .bus import EventBus, EventFilter, StoreSink
from .clock import VirtualClock, parse_epoch
from .errors import NotFoundError, ValidationError
from .gateway import ToolRegistry, build_registry
from .records import Snssai, SliceConfig
from .sim import CoreSim, attach_ues
from .store import AnalyticsStore
from .tools.approvals import ApprovalRegistry
from .tools.engine import IntentToolsEngine
from .tools.scheduler import PolicyScheduler

DEFAULT_EPOCH = "2025-01-06T16:26:00+00:00"  # a Monday afternoon


@dataclass
class BackendConfig:
    kind: str  # scripted | http
    path: str | None = None
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.1
    timeout_s: float = 60.0


@dataclass
class StackConfig:
    seed: int = 7
    tick_ms: int = 1000
    epoch: str = DEFAULT_EPOCH
    slices: list[dict[str, Any]] = field(default_factory=list)
    num_ues: int = 0
    ue_assignment: str | list[str] = "round_robin"
    host: str = "127.0.0.1"
    port: int = 0
    backend: BackendConfig = field(default_factory=lambda: BackendConfig(kind="scripted"))
    max_iterations: int = 25
    approval_ttl_ms: int = 600_000
    approval_wall_timeout_s: float = 300.0
    store_path: str | None = None
    transcript_dir: str | None = None
    ui_dir: str | None = None
    bootstrap_telemetry: bool = True

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> StackConfig:
        if not isinstance(obj, dict):
            raise ValidationError("config root must be a JSON object")
        known = {
            "seed", "tick_ms", "epoch", "slices", "num_ues", "ue_assignment",
            "host", "port", "backend", "max_iterations", "approval_ttl_ms",
            "approval_wall_timeout_s", "store_path", "transcript_dir", "ui_dir",
            "bootstrap_telemetry",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls()
        for key in known - {"backend"}:
            if key in obj:
                setattr(cfg, key, obj[key])
        if "backend" in obj:
            b = obj["backend"]
            if not isinstance(b, dict) or "kind" not in b:
                raise ValidationError("config field 'backend' must be an object with 'kind'")
            cfg.backend = BackendConfig(
                kind=b["kind"],
                path=b.get("path"),
                endpoint=b.get("endpoint"),
                model=b.get("model"),
                temperature=b.get("temperature", 0.1),
                timeout_s=b.get("timeout_s", 60.0),
            )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> StackConfig:
        text = Path(path).read_text(encoding="utf-8")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"config {path}: invalid JSON at byte offset {exc.pos}: {exc.msg}"
            ) from exc
        return cls.from_json_obj(obj)

    def validate(self) -> None:
        if self.tick_ms <= 0:
            raise ValidationError(f"config field 'tick_ms' must be > 0, got {self.tick_ms}")
        if self.num_ues < 0:
            raise ValidationError(f"config field 'num_ues' must be >= 0, got {self.num_ues}")
        if self.backend.kind not in ("scripted", "http"):
            raise ValidationError(
                f"config field 'backend.kind' must be scripted|http, got {self.backend.kind!r}"
            )
        if self.backend.kind == "http" and not self.backend.endpoint:
            raise ValidationError("config field 'backend.endpoint' required for http backend")
        parse_epoch(self.epoch)
        for i, s in enumerate(self.slices):
            for req in ("name", "sst", "ambr_dl", "ambr_ul", "capacity_dl", "capacity_ul"):
                if req not in s:
                    raise ValidationError(f"config field 'slices[{i}].{req}' is missing")


def _slice_config(obj: dict[str, Any]) -> SliceConfig:
    return SliceConfig(
        snssai=Snssai(sst=obj["sst"], sd=obj.get("sd")),
        name=obj["name"],
        ambr_dl=obj["ambr_dl"],
        ambr_ul=obj["ambr_ul"],
        capacity_dl=obj["capacity_dl"],
        capacity_ul=obj["capacity_ul"],
    )


class Stack:
    """Everything behind the HTTP surface, wired and ready."""

    def __init__(self, config: StackConfig):
        self.config = config
        self.lock = threading.RLock()
        self.clock = VirtualClock(epoch=parse_epoch(config.epoch), tick_ms=config.tick_ms)
        self.store = AnalyticsStore(config.store_path)
        self.bus = EventBus(self.clock)
        self.bus.subscribe(EventFilter(), StoreSink(self.store), batch_period_ms=config.tick_ms)
        self.sim = CoreSim(seed=config.seed, clock=self.clock, record_sink=self.bus.publish)
        self.approvals = ApprovalRegistry(self.clock, ttl_ms=config.approval_ttl_ms, lock=self.lock)
        self.scheduler = PolicyScheduler(self.sim, self.clock)
        self.engine = IntentToolsEngine(
            self.sim, self.store, self.scheduler, self.approvals, self.clock
        )
        self.registry: ToolRegistry = build_registry(self.engine)
        self.gateway = LocalGateway(self.registry, self.lock)
        self.intents: dict[str, IntentRun] = {}
        self._intent_threads: dict[str, threading.Thread] = {}
        self._next_intent = 1

        self.sim.pre_tick_listeners.append(self.scheduler.evaluate)
        self.sim.pre_tick_listeners.append(self.approvals.expire_due)
        self.sim.post_tick_listeners.append(self.bus.on_tick)

        for slice_obj in config.slices:
            self.sim.create_slice(_slice_config(slice_obj))
        if config.num_ues:
            attach_ues(self.sim, config.num_ues, config.ue_assignment)
        if config.bootstrap_telemetry and config.slices:
            self.sim.bootstrap()

        if config.transcript_dir:
            Path(config.transcript_dir).mkdir(parents=True, exist_ok=True)

    # -- backend -------------------------------------------------------------

    def make_backend(self) -> Any:
        b = self.config.backend
        if b.kind == "scripted":
            if b.path:
                return ScriptedBackend.from_file(b.path)
            return ScriptedBackend([])
        return HttpChatBackend(
            endpoint=b.endpoint, model=b.model or "default",
            temperature=b.temperature, timeout_s=b.timeout_s,
        )

    # -- clock ----------------------------------------------------------------

    def advance_clock(self, duration_ms: int) -> int:
        if duration_ms < 0:
            raise ValidationError(f"cannot advance by negative duration {duration_ms}")
        steps = duration_ms // self.clock.tick_ms
        remainder = duration_ms % self.clock.tick_ms
        if remainder:
            raise ValidationError(
                f"duration {duration_ms}ms is not a multiple of tick_ms {self.clock.tick_ms}"
            )
        with self.lock:
            self.sim.advance(steps)
            return self.clock.now_ms

    # -- intents ---------------------------------------------------------------

    def submit_intent(self, text: str, synchronous: bool = False) -> IntentRun:
        if not text or not text.strip():
            raise ValidationError("intent text must be non-empty")
        with self.lock:
            intent_id = f"intent-{self._next_intent}"
            self._next_intent += 1
            transcript_path = None
            if self.config.transcript_dir:
                transcript_path = str(Path(self.config.transcript_dir) / f"{intent_id}.jsonl")
            run = IntentRun(
                intent_id=intent_id,
                text=text,
                submitted_at=self.clock.now_ms,
                transcript=Transcript(transcript_path, clock_ms=lambda: self.clock.now_ms),
            )
            self.intents[intent_id] = run
        backend = self.make_backend()
        waiter = RegistryWaiter(self.approvals, self.config.approval_wall_timeout_s)
        if synchronous:
            run_intent(run, backend, self.gateway, waiter, self.config.max_iterations)
            return run
        thread = threading.Thread(
            target=run_intent,
            args=(run, backend, self.gateway, waiter, self.config.max_iterations),
            name=f"intent-{intent_id}",
            daemon=True,
        )
        self._intent_threads[intent_id] = thread
        thread.start()
        return run

    def get_intent(self, intent_id: str) -> IntentRun:
        run = self.intents.get(intent_id)
        if run is None:
            raise NotFoundError(f"unknown intent {intent_id!r}")
        return run

    def stop_intent(self, intent_id: str) -> IntentRun:
        run = self.get_intent(intent_id)
        run.stop_requested = True
        return run

    def wait_intent(self, intent_id: str, timeout_s: float = 30.0) -> IntentRun:
        thread = self._intent_threads.get(intent_id)
        if thread is not None:
            thread.join(timeout=timeout_s)
        return self.get_intent(intent_id)

    def close(self) -> None:
        self.store.close()
