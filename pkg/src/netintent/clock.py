"""Virtual clock: all simulation time derives from epoch + now_ms.

Wall clock is never read anywhere in the stack, so multi-day scenarios
replay in milliseconds and every run is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .errors import ValidationError

WEEKDAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def parse_epoch(text: str) -> datetime:
    """Parse an ISO-8601 datetime; an explicit UTC offset is mandatory."""
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValidationError(f"invalid epoch {text!r}: {exc}") from exc
    if dt.tzinfo is None:
        raise ValidationError(f"epoch {text!r} must carry an explicit UTC offset")
    return dt


@dataclass
class VirtualClock:
    epoch: datetime
    tick_ms: int = 1000
    now_ms: int = field(default=0)

    def __post_init__(self) -> None:
        if self.epoch.tzinfo is None:
            raise ValidationError("clock epoch must be timezone-aware")
        if self.tick_ms <= 0:
            raise ValidationError(f"tick_ms must be positive, got {self.tick_ms}")
        if self.now_ms < 0:
            raise ValidationError(f"now_ms must be >= 0, got {self.now_ms}")
        self._recompute_epoch_offset()

    def _recompute_epoch_offset(self) -> None:
        # ms since the local Monday-00:00 preceding the epoch; the epoch offset
        # is fixed, so calendar arithmetic reduces to integer math
        e = self.epoch
        self._epoch_week_ms = (
            ((e.weekday() * 24 + e.hour) * 60 + e.minute) * 60 + e.second
        ) * 1000 + e.microsecond // 1000

    def tick(self) -> int:
        self.now_ms += self.tick_ms
        return self.now_ms

    def advance_to(self, target_ms: int) -> int:
        if target_ms < self.now_ms:
            raise ValidationError("clock is monotone: cannot move backwards")
        self.now_ms = target_ms
        return self.now_ms

    def datetime_at(self, at_ms: int | None = None) -> datetime:
        """Local calendar time (epoch's own offset) at a virtual instant."""
        ms = self.now_ms if at_ms is None else at_ms
        return self.epoch + timedelta(milliseconds=ms)

    def weekday_minute(self, at_ms: int | None = None) -> tuple[int, int]:
        """(weekday 0=Mon, minute-of-day) without datetime construction."""
        ms = self.now_ms if at_ms is None else at_ms
        total = self._epoch_week_ms + ms
        day_ms = 24 * 3600 * 1000
        return (total // day_ms) % 7, (total % day_ms) // 60_000

    def weekday(self, at_ms: int | None = None) -> int:
        """0 = Monday ... 6 = Sunday, in the epoch's UTC offset."""
        return self.weekday_minute(at_ms)[0]

    def minute_of_day(self, at_ms: int | None = None) -> int:
        return self.weekday_minute(at_ms)[1]

    def iso(self, at_ms: int | None = None) -> str:
        return self.datetime_at(at_ms).isoformat()


def parse_duration_ms(text: str) -> int:
    """'90s', '3m', '2h', '500ms', or a bare integer of milliseconds."""
    text = text.strip().lower()
    units = (("ms", 1), ("s", 1000), ("m", 60_000), ("h", 3_600_000))
    for suffix, scale in units:
        if text.endswith(suffix):
            body = text[: -len(suffix)]
            try:
                value = float(body)
            except ValueError:
                raise ValidationError(f"invalid duration {text!r}") from None
            ms = value * scale
            if ms != int(ms):
                raise ValidationError(f"duration {text!r} is not a whole millisecond count")
            return int(ms)
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"invalid duration {text!r}") from None
