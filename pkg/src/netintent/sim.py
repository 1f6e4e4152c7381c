"""Deterministic 5G core simulator.

Emulates the user-plane, session-management, and policy NFs just far enough
to feed the analytics pipeline: slices with AMBR budgets, UEs with one PDU
session each, and per-tick telemetry driven by a seeded PRNG. Identical
(seed, config, operation sequence) always reproduces identical telemetry.

Per-tick emission order (fixed so byte-level replay holds):
  1. pre-tick listeners (policy scheduler, approval expiry)
  2. UPF memory utilization per slice (AR(1), clipped to [0, 100])
  3. UPF throughput per active session (bounded random walk)
  4. SMF active-session gauge per slice
  5. PCF cumulative policy-decision counter
  6. post-tick listeners (event-bus batch flushing)
"""

from __future__ import annotations

from typing import Any, Callable, Iterable

import numpy as np

from .clock import VirtualClock
from .errors import DuplicateError, LifecycleError, NotFoundError, ValidationError
from .records import (
    SESSION_ACTIVE,
    SESSION_RELEASED,
    SESSION_RELEASING,
    PduSession,
    SliceConfig,
    SliceState,
    TelemetryRecord,
    UeContext,
)

# Telemetry process parameters. Memory follows an AR(1) so a lag regression
# has real signal to recover; throughput is a bounded random walk.
MEM_MU = 55.0
MEM_PHI = 0.9
MEM_SIGMA = 2.0
WALK_STEP_KBPS = 2000.0
DEFAULT_FIVE_QI = 9

RecordSink = Callable[[TelemetryRecord], None]
TickListener = Callable[[int], None]


class CoreSim:
    """Single-writer simulation owner; all mutations go through its methods."""

    def __init__(self, seed: int, clock: VirtualClock, record_sink: RecordSink | None = None):
        self.seed = seed
        self.clock = clock
        self.record_sink = record_sink
        self.slices: dict[str, SliceState] = {}
        self.ues: dict[str, UeContext] = {}
        self.sessions: dict[int, PduSession] = {}
        self.pre_tick_listeners: list[TickListener] = []
        self.post_tick_listeners: list[TickListener] = []
        self._rng = np.random.default_rng(seed)
        self._mem_state: dict[str, float] = {}
        self._walk_state: dict[int, float] = {}
        self._next_session_id = 1
        self._policy_decisions = 0

    # -- provisioning ------------------------------------------------------

    def create_slice(self, cfg: SliceConfig) -> SliceState:
        if cfg.name in self.slices:
            raise DuplicateError(f"slice {cfg.name!r} already exists")
        state = SliceState(
            snssai=cfg.snssai,
            name=cfg.name,
            ambr_dl=cfg.ambr_dl,
            ambr_ul=cfg.ambr_ul,
            capacity_dl=cfg.capacity_dl,
            capacity_ul=cfg.capacity_ul,
        )
        self.slices[cfg.name] = state
        self._mem_state[cfg.name] = MEM_MU
        return state

    def get_slice(self, name: str) -> SliceState:
        try:
            return self.slices[name]
        except KeyError:
            raise NotFoundError(f"unknown slice {name!r}") from None

    def attach_ue(self, supi: str, slice_name: str) -> UeContext:
        if supi in self.ues:
            raise DuplicateError(f"supi {supi!r} already attached")
        slc = self.get_slice(slice_name)
        ue = UeContext(supi=supi, slice_name=slice_name)
        session = PduSession(
            session_id=self._next_session_id,
            supi=supi,
            slice_name=slice_name,
            five_qi=DEFAULT_FIVE_QI,
            session_ambr_dl=slc.ambr_dl,
            session_ambr_ul=slc.ambr_ul,
        )
        self.ues[supi] = ue
        self.sessions[session.session_id] = session
        self._walk_state[session.session_id] = slc.ambr_dl / 2.0
        self._next_session_id += 1
        return ue

    def get_session(self, session_id: int) -> PduSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id}") from None

    def active_sessions(self, slice_name: str | None = None) -> list[PduSession]:
        out = [s for s in self.sessions.values() if s.state == SESSION_ACTIVE]
        if slice_name is not None:
            out = [s for s in out if s.slice_name == slice_name]
        return sorted(out, key=lambda s: s.session_id)

    # -- mutations ---------------------------------------------------------

    def set_session_ambr(self, session_id: int, dl_kbps: int, ul_kbps: int) -> PduSession:
        session = self.get_session(session_id)
        if session.state != SESSION_ACTIVE:
            raise LifecycleError(f"session {session_id} is {session.state}, not active")
        slc = self.get_slice(session.slice_name)
        if dl_kbps <= 0 or ul_kbps <= 0:
            raise ValidationError(f"session AMBR must be > 0, got dl={dl_kbps} ul={ul_kbps}")
        if dl_kbps > slc.capacity_dl:
            raise ValidationError(
                f"session ambr_dl {dl_kbps} exceeds slice capacity {slc.capacity_dl}"
            )
        if ul_kbps > slc.capacity_ul:
            raise ValidationError(
                f"session ambr_ul {ul_kbps} exceeds slice capacity {slc.capacity_ul}"
            )
        session.session_ambr_dl = dl_kbps
        session.session_ambr_ul = ul_kbps
        self._policy_decisions += 1
        self._emit_session_ambr_records(session)
        return session

    def set_slice_ambr(self, slice_name: str, dl_kbps: int | None, ul_kbps: int | None) -> SliceState:
        """Set slice AMBR and propagate to all of its active sessions."""
        slc = self.get_slice(slice_name)
        if dl_kbps is not None:
            if dl_kbps <= 0:
                raise ValidationError(f"slice ambr_dl must be > 0, got {dl_kbps}")
            if dl_kbps > slc.capacity_dl:
                raise ValidationError(
                    f"slice ambr_dl {dl_kbps} exceeds capacity {slc.capacity_dl}"
                )
        if ul_kbps is not None:
            if ul_kbps <= 0:
                raise ValidationError(f"slice ambr_ul must be > 0, got {ul_kbps}")
            if ul_kbps > slc.capacity_ul:
                raise ValidationError(
                    f"slice ambr_ul {ul_kbps} exceeds capacity {slc.capacity_ul}"
                )
        if dl_kbps is not None:
            slc.ambr_dl = dl_kbps
        if ul_kbps is not None:
            slc.ambr_ul = ul_kbps
        for session in self.active_sessions(slice_name):
            if dl_kbps is not None:
                session.session_ambr_dl = dl_kbps
            if ul_kbps is not None:
                session.session_ambr_ul = ul_kbps
            self._emit_session_ambr_records(session)
        self._policy_decisions += 1
        return slc

    def release_session(self, session_id: int) -> PduSession:
        session = self.get_session(session_id)
        if session.state == SESSION_RELEASED:
            raise LifecycleError(f"session {session_id} already released")
        if session.state == SESSION_ACTIVE:
            session.transition(SESSION_RELEASING)
        session.transition(SESSION_RELEASED)
        self._walk_state.pop(session_id, None)
        self._emit(
            TelemetryRecord(
                source_nf="SMF",
                metric="session_released",
                value=float(session_id),
                unit="id",
                timestamp_ms=self.clock.now_ms,
                dims={"slice": session.slice_name, "supi": session.supi, "session_id": session_id},
            )
        )
        return session

    # -- ticking -----------------------------------------------------------

    def advance(self, steps: int) -> list[TelemetryRecord]:
        """Advance the clock `steps` ticks, emitting telemetry for each tick."""
        if steps < 0:
            raise ValidationError(f"steps must be >= 0, got {steps}")
        batch: list[TelemetryRecord] = []
        for _ in range(steps):
            now = self.clock.tick()
            for listener in self.pre_tick_listeners:
                listener(now)
            batch.extend(self._emit_tick(now))
            for listener in self.post_tick_listeners:
                listener(now)
        return batch

    def bootstrap(self) -> list[TelemetryRecord]:
        """Emit one telemetry sample at the epoch so the store is non-empty at boot."""
        return self._emit_tick(self.clock.now_ms)

    def _emit_tick(self, now: int) -> list[TelemetryRecord]:
        records: list[TelemetryRecord] = []
        for name in sorted(self.slices):
            prev = self._mem_state[name]
            nxt = MEM_MU + MEM_PHI * (prev - MEM_MU) + self._rng.normal(0.0, MEM_SIGMA)
            nxt = float(min(100.0, max(0.0, nxt)))
            self._mem_state[name] = nxt
            records.append(
                TelemetryRecord(
                    source_nf="UPF",
                    metric="memory_utilization_pct",
                    value=nxt,
                    unit="percent",
                    timestamp_ms=now,
                    dims={"slice": name},
                )
            )
        for session in self.active_sessions():
            prev = self._walk_state[session.session_id]
            step = self._rng.uniform(-WALK_STEP_KBPS, WALK_STEP_KBPS)
            nxt = float(min(float(session.session_ambr_dl), max(0.0, prev + step)))
            self._walk_state[session.session_id] = nxt
            records.append(
                TelemetryRecord(
                    source_nf="UPF",
                    metric="throughput_dl_kbps",
                    value=nxt,
                    unit="kbps",
                    timestamp_ms=now,
                    dims={
                        "slice": session.slice_name,
                        "supi": session.supi,
                        "session_id": session.session_id,
                    },
                )
            )
        for name in sorted(self.slices):
            records.append(
                TelemetryRecord(
                    source_nf="SMF",
                    metric="active_sessions",
                    value=float(len(self.active_sessions(name))),
                    unit="count",
                    timestamp_ms=now,
                    dims={"slice": name},
                )
            )
        records.append(
            TelemetryRecord(
                source_nf="PCF",
                metric="policy_decisions",
                value=float(self._policy_decisions),
                unit="count",
                timestamp_ms=now,
                dims={},
            )
        )
        for record in records:
            self._emit(record)
        return records

    def _emit_session_ambr_records(self, session: PduSession) -> None:
        dims = {
            "slice": session.slice_name,
            "supi": session.supi,
            "session_id": session.session_id,
        }
        for metric, value in (
            ("session_ambr_dl_kbps", session.session_ambr_dl),
            ("session_ambr_ul_kbps", session.session_ambr_ul),
        ):
            self._emit(
                TelemetryRecord(
                    source_nf="SMF",
                    metric=metric,
                    value=float(value),
                    unit="kbps",
                    timestamp_ms=self.clock.now_ms,
                    dims=dict(dims),
                )
            )

    def _emit(self, record: TelemetryRecord) -> None:
        if self.record_sink is not None:
            self.record_sink(record)

    # -- observability -----------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        """Canonical view of mutable state, used for mutation-detection diffs."""
        return {
            "slices": {
                name: {"ambr_dl": s.ambr_dl, "ambr_ul": s.ambr_ul}
                for name, s in sorted(self.slices.items())
            },
            "sessions": {
                str(sid): {
                    "state": s.state,
                    "ambr_dl": s.session_ambr_dl,
                    "ambr_ul": s.session_ambr_ul,
                }
                for sid, s in sorted(self.sessions.items())
            },
        }

    def slice_summaries(self) -> list[dict[str, Any]]:
        return [self.slices[name].to_json_obj() for name in sorted(self.slices)]


def attach_ues(sim: CoreSim, num_ues: int, assignment: str | Iterable[str] = "round_robin") -> list[UeContext]:
    """Attach `num_ues` UEs with generated SUPIs per the assignment policy."""
    names = sorted(sim.slices)
    if not names:
        raise ValidationError("cannot attach UEs before any slice exists")
    if isinstance(assignment, str):
        if assignment == "round_robin":
            targets = [names[i % len(names)] for i in range(num_ues)]
        elif assignment == "first":
            targets = [names[0]] * num_ues
        else:
            raise ValidationError(f"unknown UE assignment policy {assignment!r}")
    else:
        targets = list(assignment)
        if len(targets) != num_ues:
            raise ValidationError(
                f"explicit UE assignment names {len(targets)} slices for {num_ues} UEs"
            )
    out = []
    for i, slice_name in enumerate(targets, start=1):
        out.append(sim.attach_ue(f"imsi-{i:015d}", slice_name))
    return out
