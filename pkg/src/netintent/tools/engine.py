"""The intent tools engine: every capability the agent can invoke.

Read tools hit the analytics store; mutating tools (schedule_policy,
apply_policy_now, session modify/release) must present an approved,
unexpired, unconsumed approval token and reject otherwise. All entrypoints
return plain JSON-serializable structures for the gateway.
"""

from __future__ import annotations

from typing import Any

from ..clock import VirtualClock
from ..errors import InsufficientDataError, LifecycleError, ValidationError
from ..sim import CoreSim
from ..store import AnalyticsStore
from .analytics import forecast_series, kpi_stats
from .approvals import ApprovalRegistry
from .policy import FeasibilityReport, PolicyChange, TimeWindow, check_feasibility
from .scheduler import PolicyScheduler


class IntentToolsEngine:
    def __init__(
        self,
        sim: CoreSim,
        store: AnalyticsStore,
        scheduler: PolicyScheduler,
        approvals: ApprovalRegistry,
        clock: VirtualClock,
    ):
        self.sim = sim
        self.store = store
        self.scheduler = scheduler
        self.approvals = approvals
        self.clock = clock
        self._next_change = 1

    # -- data retrieval ------------------------------------------------------

    def list_collections(self) -> list[dict[str, Any]]:
        return self.store.list_collections()

    def query_data(
        self,
        collection: str,
        dims_filter: dict[str, Any] | None = None,
        limit: int = 100,
        order: str = "recent_first",
    ) -> dict[str, Any]:
        records = self.store.query(collection, dims_filter, limit=limit, order=order)
        return {
            "collection": collection,
            "count": len(records),
            "records": [r.to_json_obj() for r in records],
        }

    def list_schedules(self) -> list[dict[str, Any]]:
        return self.scheduler.describe()

    # -- analytics -----------------------------------------------------------

    def kpi_analyze(
        self,
        collection: str,
        last_n: int,
        dims_filter: dict[str, Any] | None = None,
    ) -> dict[str, Any]:
        if last_n < 2:
            raise InsufficientDataError(f"last_n must be >= 2, got {last_n}")
        values = self.store.values(collection, dims_filter, last_n)
        if len(values) < 2:
            raise InsufficientDataError(
                f"collection {collection!r} has {len(values)} matching values; need >= 2"
            )
        return kpi_stats(values)

    def forecast(
        self,
        collection: str,
        history_n: int,
        window_w: int,
        horizon_h: int,
        holdout_frac: float = 0.2,
        dims_filter: dict[str, Any] | None = None,
    ) -> dict[str, Any]:
        values = self.store.values(collection, dims_filter, history_n)
        if len(values) < history_n:
            raise InsufficientDataError(
                f"collection {collection!r} has {len(values)} matching values; "
                f"forecast requested history_n={history_n}"
            )
        return forecast_series(values, window_w, horizon_h, holdout_frac)

    # -- policy --------------------------------------------------------------

    def _build_change(self, slice_name: str, field: str, mode: str, amount: float) -> PolicyChange:
        change = PolicyChange(
            change_id=f"chg-{self._next_change}",
            slice_name=slice_name,
            field_sel=field,
            mode=mode,
            amount=float(amount),
        )
        self._next_change += 1
        return change

    def feasibility_check(
        self,
        slice_name: str,
        field: str,
        mode: str,
        amount: float,
        window: dict[str, Any] | None = None,
    ) -> dict[str, Any]:
        try:
            change = self._build_change(slice_name, field, mode, amount)
        except ValidationError as exc:
            return FeasibilityReport(feasible=False, reasons=[str(exc)]).to_json_obj()
        parsed_window = None
        if window is not None:
            try:
                parsed_window = TimeWindow.parse(window)
            except ValidationError as exc:
                return FeasibilityReport(feasible=False, reasons=[str(exc)]).to_json_obj()
        report = check_feasibility(self.sim, self.scheduler, change, parsed_window)
        return report.to_json_obj()

    def schedule_policy(
        self,
        slice_name: str,
        field: str,
        mode: str,
        amount: float,
        window: dict[str, Any],
        approval_token: str | None = None,
    ) -> dict[str, Any]:
        change = self._build_change(slice_name, field, mode, amount)
        parsed_window = TimeWindow.parse(window)
        report = check_feasibility(self.sim, self.scheduler, change, parsed_window)
        if not report.feasible:
            raise ValidationError("infeasible change: " + "; ".join(report.reasons))
        self.approvals.consume(approval_token)
        action = self.scheduler.schedule(change, parsed_window)
        return {
            "action_id": action.action_id,
            "state": action.state,
            "change": change.to_json_obj(),
            "window": parsed_window.to_json_obj(),
            "computed_values": report.computed_values,
        }

    def apply_policy_now(
        self,
        slice_name: str,
        field: str,
        mode: str,
        amount: float,
        approval_token: str | None = None,
    ) -> dict[str, Any]:
        change = self._build_change(slice_name, field, mode, amount)
        report = check_feasibility(self.sim, self.scheduler, change, None)
        if not report.feasible:
            raise ValidationError("infeasible change: " + "; ".join(report.reasons))
        conflicts = self.scheduler.active_conflicts(slice_name, change.target_fields())
        if conflicts:
            ids = ", ".join(a.action_id for a in conflicts)
            raise LifecycleError(
                f"conflict: scheduled action(s) {ids} currently active on the same field"
            )
        self.approvals.consume(approval_token)
        slc = self.sim.get_slice(slice_name)
        baseline = {f: getattr(slc, f) for f in change.target_fields()}
        change.baseline = dict(baseline)
        new_dl = change.resulting(baseline["ambr_dl"]) if "ambr_dl" in baseline else None
        new_ul = change.resulting(baseline["ambr_ul"]) if "ambr_ul" in baseline else None
        self.sim.set_slice_ambr(slice_name, new_dl, new_ul)
        return {
            "applied": True,
            "change": change.to_json_obj(),
            "slice": self.sim.get_slice(slice_name).to_json_obj(),
        }

    def cancel_schedule(self, action_id: str) -> dict[str, Any]:
        return self.scheduler.cancel(action_id).to_json_obj()

    # -- sessions ------------------------------------------------------------

    def session_tool(
        self,
        op: str,
        session_id: int | None = None,
        dl_kbps: int | None = None,
        ul_kbps: int | None = None,
        slice_name: str | None = None,
        approval_token: str | None = None,
    ) -> Any:
        if op == "list":
            sessions = self.sim.sessions.values()
            if slice_name is not None:
                sessions = [s for s in sessions if s.slice_name == slice_name]
            return [s.to_json_obj() for s in sorted(sessions, key=lambda s: s.session_id)]
        if op == "modify_qos":
            if session_id is None or dl_kbps is None or ul_kbps is None:
                raise ValidationError("modify_qos requires session_id, dl_kbps and ul_kbps")
            session = self.sim.get_session(session_id)
            if session.state != "active":
                raise LifecycleError(
                    f"invalid transition: session {session_id} is {session.state}"
                )
            self.approvals.consume(approval_token)
            return self.sim.set_session_ambr(session_id, dl_kbps, ul_kbps).to_json_obj()
        if op == "release":
            if session_id is None:
                raise ValidationError("release requires session_id")
            session = self.sim.get_session(session_id)
            if session.state == "released":
                raise LifecycleError(f"session {session_id} already released")
            self.approvals.consume(approval_token)
            return self.sim.release_session(session_id).to_json_obj()
        raise ValidationError(f"unknown session op {op!r}")

    # -- safety ----------------------------------------------------------------

    def request_confirmation(self, action_summary: str) -> dict[str, Any]:
        token = self.approvals.request(action_summary)
        return token.to_json_obj()


MUTATING_SESSION_OPS = frozenset({"modify_qos", "release"})


def session_call_mutates(arguments: dict[str, Any]) -> bool:
    return arguments.get("op") in MUTATING_SESSION_OPS
