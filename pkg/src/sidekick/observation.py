"""Observation plans and data-entry validation.

A plan says which parameters are measured for a patient and how often.
Entry validation type-checks each value, warns (without rejecting) when a
value lands in a Strong band, and warns when the gap since the previous
accepted entry exceeds twice the planned interval.  Timestamps and
intervals share one unit (seconds in the service layer).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .normalization import Band
from .schema import ParameterSchema, SchemaError


class EntryRejected(ValueError):
    """Raised when an entry fails the type check and must not be stored."""


@dataclass(frozen=True)
class EntryResult:
    accepted: bool
    warnings: tuple[str, ...] = ()


@dataclass
class ObservationPlan:
    """Per-patient measurement plan: parameter id -> planned interval."""

    patient_id: str
    schema: ParameterSchema
    intervals: dict[str, float]
    _last_seen: dict[str, float] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for pid, interval in self.intervals.items():
            self.schema.index_of(pid)
            if interval <= 0:
                raise SchemaError(f"interval for {pid!r} must be positive")

    def parameter_ids(self) -> tuple[str, ...]:
        return tuple(pid for pid in self.schema.ids if pid in self.intervals)


def validate_entry(
    plan: ObservationPlan, param_id: str, value: Any, timestamp: float
) -> EntryResult:
    """Check one incoming measurement against the plan.

    Type mismatches raise :class:`EntryRejected`; out-of-range and stale
    entries are accepted with warnings so the record stays complete.
    """
    if param_id not in plan.intervals:
        raise EntryRejected(f"parameter {param_id!r} is not in the plan")
    spec = plan.schema.spec(param_id)
    try:
        spec.check_value(value)
    except SchemaError as exc:
        raise EntryRejected(str(exc)) from None

    warnings: list[str] = []
    band = spec.band(value)
    if band in (Band.STRONG_LOW, Band.STRONG_HIGH):
        warnings.append(
            f"{param_id}={value!r} lies in the {band.value} range; please verify"
        )

    previous: Optional[float] = plan._last_seen.get(param_id)
    if previous is not None:
        gap = timestamp - previous
        if gap > 2.0 * plan.intervals[param_id]:
            warnings.append(
                f"{param_id}: {gap:g} since last entry exceeds twice the "
                f"planned interval of {plan.intervals[param_id]:g}"
            )
    plan._last_seen[param_id] = timestamp
    return EntryResult(accepted=True, warnings=tuple(warnings))
