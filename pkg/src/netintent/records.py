"""Domain types for the simulated core: slices, UEs, sessions, telemetry."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import ValidationError

NF_SOURCES = ("UPF", "SMF", "PCF")
SUPI_RE = re.compile(r"^imsi-\d{15}$")
SD_RE = re.compile(r"^[0-9A-Fa-f]{6}$")

SESSION_ACTIVE = "active"
SESSION_RELEASING = "releasing"
SESSION_RELEASED = "released"
_SESSION_TRANSITIONS = {
    SESSION_ACTIVE: (SESSION_RELEASING,),
    SESSION_RELEASING: (SESSION_RELEASED,),
    SESSION_RELEASED: (),
}


@dataclass(frozen=True)
class Snssai:
    """Slice identifier: slice/service type plus optional slice differentiator."""

    sst: int
    sd: str | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.sst <= 255:
            raise ValidationError(f"snssai sst must be in [0, 255], got {self.sst}")
        if self.sd is not None and not SD_RE.match(self.sd):
            raise ValidationError(f"snssai sd must be 6 hex digits, got {self.sd!r}")

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"sst": self.sst}
        if self.sd is not None:
            obj["sd"] = self.sd
        return obj


@dataclass
class SliceConfig:
    snssai: Snssai
    name: str
    ambr_dl: int
    ambr_ul: int
    capacity_dl: int
    capacity_ul: int

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("slice name must be non-empty")
        for label, value in (("ambr_dl", self.ambr_dl), ("ambr_ul", self.ambr_ul)):
            if value <= 0:
                raise ValidationError(f"slice {self.name!r}: {label} must be > 0, got {value}")
        if self.ambr_dl > self.capacity_dl:
            raise ValidationError(
                f"slice {self.name!r}: ambr_dl {self.ambr_dl} exceeds capacity_dl {self.capacity_dl}"
            )
        if self.ambr_ul > self.capacity_ul:
            raise ValidationError(
                f"slice {self.name!r}: ambr_ul {self.ambr_ul} exceeds capacity_ul {self.capacity_ul}"
            )


@dataclass
class SliceState:
    """Runtime slice: current AMBR plus the creation-time baseline kept for reverts."""

    snssai: Snssai
    name: str
    ambr_dl: int
    ambr_ul: int
    capacity_dl: int
    capacity_ul: int
    initial_ambr_dl: int = field(init=False)
    initial_ambr_ul: int = field(init=False)

    def __post_init__(self) -> None:
        self.initial_ambr_dl = self.ambr_dl
        self.initial_ambr_ul = self.ambr_ul

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "snssai": self.snssai.to_json_obj(),
            "ambr_dl": self.ambr_dl,
            "ambr_ul": self.ambr_ul,
            "capacity_dl": self.capacity_dl,
            "capacity_ul": self.capacity_ul,
        }


@dataclass
class UeContext:
    supi: str
    slice_name: str
    state: str = "registered"

    def __post_init__(self) -> None:
        if not SUPI_RE.match(self.supi):
            raise ValidationError(f"malformed supi {self.supi!r}: expected imsi-<15 digits>")


@dataclass
class PduSession:
    session_id: int
    supi: str
    slice_name: str
    five_qi: int
    session_ambr_dl: int
    session_ambr_ul: int
    state: str = SESSION_ACTIVE

    def __post_init__(self) -> None:
        if self.session_id < 1:
            raise ValidationError(f"session_id must be >= 1, got {self.session_id}")
        if not 1 <= self.five_qi <= 255:
            raise ValidationError(f"five_qi must be in [1, 255], got {self.five_qi}")

    def transition(self, new_state: str) -> None:
        if new_state not in _SESSION_TRANSITIONS.get(self.state, ()):
            raise ValidationError(
                f"session {self.session_id}: illegal transition {self.state} -> {new_state}"
            )
        self.state = new_state

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "supi": self.supi,
            "slice_name": self.slice_name,
            "five_qi": self.five_qi,
            "session_ambr_dl": self.session_ambr_dl,
            "session_ambr_ul": self.session_ambr_ul,
            "state": self.state,
        }


@dataclass(frozen=True)
class TelemetryRecord:
    source_nf: str
    metric: str
    value: float
    unit: str
    timestamp_ms: int
    dims: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.source_nf not in NF_SOURCES:
            raise ValidationError(f"unknown source_nf {self.source_nf!r}")
        if not self.metric:
            raise ValidationError("metric must be non-empty")
        if not math.isfinite(self.value):
            raise ValidationError(f"{self.metric}: value must be finite, got {self.value}")
        if self.timestamp_ms < 0:
            raise ValidationError(f"timestamp_ms must be >= 0, got {self.timestamp_ms}")
        if self.metric == "memory_utilization_pct" and not 0.0 <= self.value <= 100.0:
            raise ValidationError(f"memory_utilization_pct out of range: {self.value}")

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "source_nf": self.source_nf,
            "metric": self.metric,
            "value": self.value,
            "unit": self.unit,
            "timestamp_ms": self.timestamp_ms,
            "dims": dict(self.dims),
        }

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> TelemetryRecord:
        try:
            return cls(
                source_nf=obj["source_nf"],
                metric=obj["metric"],
                value=float(obj["value"]),
                unit=obj.get("unit", ""),
                timestamp_ms=int(obj["timestamp_ms"]),
                dims=dict(obj.get("dims", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed telemetry record: {exc}") from exc

    def collection_name(self) -> str:
        return f"{self.source_nf.lower()}.{self.metric.lower()}"
