"""Monitoring manager: time-windowed policy actions on the virtual clock.

Every clock tick the manager re-evaluates each registered action: entering
its window applies the change (baseline captured first), leaving it restores
the captured baseline exactly. Actions recur on every allowed weekday until
cancelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..clock import VirtualClock
from ..errors import LifecycleError, NotFoundError
from ..sim import CoreSim
from .policy import FIELD_DL, PolicyChange, TimeWindow

STATE_PENDING = "pending"
STATE_ACTIVE = "active"
STATE_REVERTED_IDLE = "reverted_idle"
STATE_CANCELLED = "cancelled"


@dataclass
class ScheduledAction:
    action_id: str
    change: PolicyChange
    window: TimeWindow
    state: str = STATE_PENDING
    applied_at: int | None = None
    reverted_at: int | None = None
    created_at: int = 0
    cycles: int = 0
    baseline: dict[str, int] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "action_id": self.action_id,
            "change": self.change.to_json_obj(),
            "window": self.window.to_json_obj(),
            "state": self.state,
            "applied_at": self.applied_at,
            "reverted_at": self.reverted_at,
            "created_at": self.created_at,
            "cycles": self.cycles,
        }


class PolicyScheduler:
    def __init__(self, sim: CoreSim, clock: VirtualClock):
        self.sim = sim
        self.clock = clock
        self.actions: dict[str, ScheduledAction] = {}
        self._next_action = 1

    def schedule(self, change: PolicyChange, window: TimeWindow) -> ScheduledAction:
        """Register a pre-validated change; callers run feasibility first."""
        action_id = f"action-{self._next_action}"
        self._next_action += 1
        action = ScheduledAction(
            action_id=action_id,
            change=change,
            window=window,
            created_at=self.clock.now_ms,
        )
        self.actions[action_id] = action
        return action

    def cancel(self, action_id: str) -> ScheduledAction:
        action = self.actions.get(action_id)
        if action is None:
            raise NotFoundError(f"unknown scheduled action {action_id!r}")
        if action.state == STATE_CANCELLED:
            raise LifecycleError(f"action {action_id} already cancelled")
        if action.state == STATE_ACTIVE:
            self._revert(action, self.clock.now_ms)
        action.state = STATE_CANCELLED
        return action

    def evaluate(self, now_ms: int) -> None:
        """Apply/revert actions according to window membership at now_ms."""
        weekday, minute = self.clock.weekday_minute(now_ms)
        for action in self.actions.values():
            if action.state == STATE_CANCELLED:
                continue
            inside = action.window.contains(weekday, minute)
            if inside and action.state != STATE_ACTIVE:
                self._apply(action, now_ms)
            elif not inside and action.state == STATE_ACTIVE:
                self._revert(action, now_ms)

    def _apply(self, action: ScheduledAction, now_ms: int) -> None:
        slc = self.sim.get_slice(action.change.slice_name)
        currents = {"ambr_dl": slc.ambr_dl, "ambr_ul": slc.ambr_ul}
        action.baseline = {f: currents[f] for f in action.change.target_fields()}
        action.change.baseline = dict(action.baseline)
        new_dl = None
        new_ul = None
        for f in action.change.target_fields():
            value = action.change.resulting(action.baseline[f])
            if f == FIELD_DL:
                new_dl = value
            else:
                new_ul = value
        self.sim.set_slice_ambr(action.change.slice_name, new_dl, new_ul)
        action.state = STATE_ACTIVE
        action.applied_at = now_ms
        action.cycles += 1

    def _revert(self, action: ScheduledAction, now_ms: int) -> None:
        self.sim.set_slice_ambr(
            action.change.slice_name,
            action.baseline.get("ambr_dl"),
            action.baseline.get("ambr_ul"),
        )
        action.state = STATE_REVERTED_IDLE
        action.reverted_at = now_ms

    def overlapping(
        self, slice_name: str, fields: tuple[str, ...], window: TimeWindow
    ) -> list[ScheduledAction]:
        """Non-cancelled actions on the same slice+field with intersecting windows."""
        out = []
        for action in self.actions.values():
            if action.state == STATE_CANCELLED:
                continue
            if action.change.slice_name != slice_name:
                continue
            if not set(action.change.target_fields()) & set(fields):
                continue
            if action.window.overlaps(window):
                out.append(action)
        return sorted(out, key=lambda a: a.action_id)

    def active_conflicts(self, slice_name: str, fields: tuple[str, ...]) -> list[ScheduledAction]:
        return [
            a
            for a in self.actions.values()
            if a.state == STATE_ACTIVE
            and a.change.slice_name == slice_name
            and set(a.change.target_fields()) & set(fields)
        ]

    def describe(self) -> list[dict[str, Any]]:
        return [self.actions[k].to_json_obj() for k in sorted(self.actions, key=_action_sort_key)]


def _action_sort_key(action_id: str) -> tuple[int, str]:
    try:
        return (int(action_id.rsplit("-", 1)[1]), action_id)
    except (IndexError, ValueError):
        return (1 << 30, action_id)
