"""Policy change descriptions, recurrence windows, and the feasibility checker.

Percent deltas are always computed from a captured baseline, never from the
current (possibly already modified) value, so repeated window cycles are
idempotent and reverts are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from ..clock import WEEKDAY_NAMES
from ..errors import ValidationError

if TYPE_CHECKING:
    from ..sim import CoreSim
    from .scheduler import PolicyScheduler

FIELD_DL = "ambr_dl"
FIELD_UL = "ambr_ul"
FIELD_BOTH = "both"
MODE_PERCENT = "percent_delta"
MODE_ABSOLUTE = "absolute"

_DAY_ALIASES = {name: i for i, name in enumerate(WEEKDAY_NAMES)}
_DAY_ALIASES.update(
    {
        "monday": 0,
        "tuesday": 1,
        "wednesday": 2,
        "thursday": 3,
        "friday": 4,
        "saturday": 5,
        "sunday": 6,
    }
)


def _round_kbps(value: float) -> int:
    # deterministic half-up rounding; AMBR values are integer kbps
    return int(value + 0.5)


@dataclass(frozen=True)
class TimeWindow:
    """Daily [start, end) local-time window recurring on the given weekdays."""

    start_minute: int  # minutes from midnight
    end_minute: int
    days: frozenset[int]  # 0 = Monday

    def __post_init__(self) -> None:
        if not 0 <= self.start_minute < 24 * 60 or not 0 < self.end_minute <= 24 * 60:
            raise ValidationError("window times must fall within one day")
        if self.start_minute >= self.end_minute:
            raise ValidationError("window start not before end")
        if not self.days:
            raise ValidationError("window days must be non-empty")
        if not self.days <= set(range(7)):
            raise ValidationError(f"invalid weekday indices: {sorted(self.days)}")

    def contains(self, weekday: int, minute_of_day: int) -> bool:
        return weekday in self.days and self.start_minute <= minute_of_day < self.end_minute

    def overlaps(self, other: TimeWindow) -> bool:
        if not self.days & other.days:
            return False
        return self.start_minute < other.end_minute and other.start_minute < self.end_minute

    @classmethod
    def parse(cls, obj: dict[str, Any]) -> TimeWindow:
        if not isinstance(obj, dict):
            raise ValidationError("window must be an object")
        try:
            start = _parse_hhmm(obj["start"])
            end = _parse_hhmm(obj["end"])
            raw_days = obj["days"]
        except KeyError as exc:
            raise ValidationError(f"window missing field {exc.args[0]!r}") from None
        if not isinstance(raw_days, (list, tuple)) or not raw_days:
            raise ValidationError("window days must be a non-empty list")
        days = set()
        for day in raw_days:
            key = str(day).strip().lower()
            if key not in _DAY_ALIASES:
                raise ValidationError(f"unknown weekday {day!r}")
            days.add(_DAY_ALIASES[key])
        return cls(start_minute=start, end_minute=end, days=frozenset(days))

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "start": f"{self.start_minute // 60:02d}:{self.start_minute % 60:02d}",
            "end": f"{self.end_minute // 60:02d}:{self.end_minute % 60:02d}",
            "days": [WEEKDAY_NAMES[i] for i in sorted(self.days)],
        }


def _parse_hhmm(text: Any) -> int:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValidationError(f"expected HH:MM, got {text!r}")
    try:
        hour, minute = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"expected HH:MM, got {text!r}") from None
    if not 0 <= hour <= 24 or not 0 <= minute < 60:
        raise ValidationError(f"time out of range: {text!r}")
    return hour * 60 + minute


@dataclass
class PolicyChange:
    change_id: str
    slice_name: str
    field_sel: str  # ambr_dl | ambr_ul | both
    mode: str  # percent_delta | absolute
    amount: float
    baseline: dict[str, int] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.field_sel not in (FIELD_DL, FIELD_UL, FIELD_BOTH):
            raise ValidationError(f"unknown field {self.field_sel!r}")
        if self.mode not in (MODE_PERCENT, MODE_ABSOLUTE):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_PERCENT and self.amount <= -100:
            raise ValidationError(f"percent_delta must be > -100, got {self.amount}")
        if self.mode == MODE_ABSOLUTE and self.amount <= 0:
            raise ValidationError(f"absolute amount must be > 0, got {self.amount}")

    def target_fields(self) -> tuple[str, ...]:
        if self.field_sel == FIELD_BOTH:
            return (FIELD_DL, FIELD_UL)
        return (self.field_sel,)

    def resulting(self, baseline_kbps: int) -> int:
        if self.mode == MODE_PERCENT:
            return _round_kbps(baseline_kbps * (1.0 + self.amount / 100.0))
        return _round_kbps(self.amount)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "change_id": self.change_id,
            "slice_name": self.slice_name,
            "field": self.field_sel,
            "mode": self.mode,
            "amount": self.amount,
        }
        if self.baseline is not None:
            obj["baseline"] = dict(self.baseline)
        return obj


@dataclass
class FeasibilityReport:
    feasible: bool
    reasons: list[str] = field(default_factory=list)
    computed_values: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.feasible and not self.reasons:
            raise ValidationError("infeasible report requires at least one reason")

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "reasons": list(self.reasons),
            "computed_values": dict(self.computed_values),
        }


def check_feasibility(
    sim: CoreSim,
    scheduler: PolicyScheduler | None,
    change: PolicyChange,
    window: TimeWindow | None = None,
) -> FeasibilityReport:
    """Constraint evaluation: capacity, positivity, window validity, overlap.

    All failures are reasons in the report, never exceptions; the checker is
    the first gate an intent passes, so it must be total.
    """
    reasons: list[str] = []
    computed: dict[str, Any] = {}
    slc = sim.slices.get(change.slice_name)
    if slc is None:
        reasons.append(f"unknown slice '{change.slice_name}'")
        return FeasibilityReport(feasible=False, reasons=reasons)

    capacities = {FIELD_DL: slc.capacity_dl, FIELD_UL: slc.capacity_ul}
    currents = {FIELD_DL: slc.ambr_dl, FIELD_UL: slc.ambr_ul}
    for f in change.target_fields():
        new_value = change.resulting(currents[f])
        computed[f"current_{f}"] = currents[f]
        computed[f"new_{f}"] = new_value
        computed[f"capacity_{'dl' if f == FIELD_DL else 'ul'}"] = capacities[f]
        if new_value <= 0:
            reasons.append(f"new {f} {new_value} is not positive")
        elif new_value > capacities[f]:
            reasons.append(f"new {f} {new_value} exceeds capacity {capacities[f]}")

    if window is not None and scheduler is not None:
        conflicts = scheduler.overlapping(change.slice_name, change.target_fields(), window)
        for action in conflicts:
            reasons.append(
                f"window overlaps scheduled action {action.action_id} "
                f"on slice '{change.slice_name}'"
            )

    return FeasibilityReport(feasible=not reasons, reasons=reasons, computed_values=computed)
