"""Ward-level integral indexes and the patient leader board.

Severity I is 1 plus the summed band distances of all normalized
parameters, so it is always >= 1 and its logarithm is defined.  Three
indexes build on it: N1 (controllability: prognosis miss + loss of control
+ coordination trouble), N2 ((I_t - I_prev) * ln I_prev), and N3 (summed
invasiveness weights of active interventions).  The leader board orders
patients by a weighted composite, ties resolved by admission order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence

from .normalization import Band, normalize, severity_distance
from .schema import ParameterSchema

IMPROVE = "improve"
STABLE = "stable"
WORSEN = "worsen"
_DIRECTIONS = (IMPROVE, STABLE, WORSEN)

_STRONG = (Band.STRONG_LOW, Band.STRONG_HIGH)


class WardError(ValueError):
    """Raised on malformed prognoses, components, or treatment records."""


@dataclass(frozen=True)
class SeverityScore:
    value: float
    timestamp: float

    def __post_init__(self) -> None:
        if self.value < 1.0:
            raise WardError("severity must be >= 1")


@dataclass(frozen=True)
class PrognosisRecord:
    """A user's forward-looking call on how the patient will develop."""

    author: str
    made_at: float
    horizon: float
    predicted: str
    predicted_syndrome: Optional[str] = None
    explanation: Optional[str] = None

    def __post_init__(self) -> None:
        if self.horizon <= self.made_at:
            raise WardError("prognosis horizon must lie after made_at")
        if self.predicted not in _DIRECTIONS:
            raise WardError(f"predicted direction must be one of {_DIRECTIONS}")


@dataclass(frozen=True)
class Intervention:
    intervention_id: str
    start: float
    end: Optional[float] = None


@dataclass(frozen=True)
class TreatmentRecord:
    patient_id: str
    interventions: tuple[Intervention, ...] = ()


@dataclass(frozen=True)
class WardIndices:
    patient_id: str
    t: float
    n1: float
    n2: float
    n3: float
    f1: int
    f2: int
    f3: int

    def __post_init__(self) -> None:
        for name, c in (("f1", self.f1), ("f2", self.f2), ("f3", self.f3)):
            if not 0 <= c <= 3:
                raise WardError(f"{name} must lie in [0, 3]")
        if self.n1 != self.f1 + self.f2 + self.f3:
            raise WardError("n1 must equal f1 + f2 + f3")


def severity(
    snapshot: Mapping[str, Any], schema: ParameterSchema, timestamp: float
) -> SeverityScore:
    """I = 1 + sum of severity distances of the normalized snapshot values."""
    if not snapshot:
        raise WardError("snapshot needs at least one parameter value")
    total = 1.0
    for pid, value in snapshot.items():
        spec = schema.spec(pid)
        if spec.is_quantitative and spec.thresholds is not None:
            total += severity_distance(normalize(float(value), spec.thresholds))
    return SeverityScore(total, timestamp)


def n2(i_t: SeverityScore, i_prev: SeverityScore) -> float:
    """(I_t - I_prev) * ln I_prev; zero whenever I_prev is the floor value 1."""
    return (i_t.value - i_prev.value) * math.log(i_prev.value)


def realized_direction(i_prev: SeverityScore, i_t: SeverityScore, tolerance: float) -> str:
    delta = i_t.value - i_prev.value
    if abs(delta) <= tolerance:
        return STABLE
    return WORSEN if delta > 0 else IMPROVE


def _latest_due(prognoses: Iterable[PrognosisRecord], t: float) -> Optional[PrognosisRecord]:
    due = [p for p in prognoses if p.horizon <= t]
    if not due:
        return None
    return max(due, key=lambda p: (p.horizon, p.made_at))


def _bands(snapshot: Mapping[str, Any], schema: ParameterSchema) -> dict[str, Band]:
    out: dict[str, Band] = {}
    for pid, value in snapshot.items():
        spec = schema.spec(pid)
        band = spec.band(value) if spec.is_quantitative else None
        if band is not None:
            out[pid] = band
    return out


def f_components(
    prognoses: Sequence[PrognosisRecord],
    schema: ParameterSchema,
    snapshot_prev: Mapping[str, Any],
    snapshot_t: Mapping[str, Any],
    i_prev: SeverityScore,
    i_t: SeverityScore,
    coordination_flags: Sequence[str] = (),
    direction_tolerance: float = 0.1,
) -> tuple[int, int, int]:
    """(F1, F2, F3) over the (t-1, t] window.

    F1 scores the miss between the latest due prognosis and the realized
    severity direction (0 when they agree, or no prognosis was due);
    F2 counts parameters newly entering Strong bands; F3 counts active
    coordination flags.  Each component saturates at 3.
    """
    f1 = 0
    latest = _latest_due(prognoses, i_t.timestamp)
    if latest is not None:
        realized = realized_direction(i_prev, i_t, direction_tolerance)
        if latest.predicted != realized:
            f1 = min(3, 1 + int(abs(i_t.value - i_prev.value)))

    prev_bands = _bands(snapshot_prev, schema)
    now_bands = _bands(snapshot_t, schema)
    newly_strong = sum(
        1
        for pid, band in now_bands.items()
        if band in _STRONG and prev_bands.get(pid) not in _STRONG
    )
    f2 = min(3, newly_strong)
    f3 = min(3, len(coordination_flags))
    return f1, f2, f3


def n1(components: tuple[int, int, int]) -> float:
    for c in components:
        if not 0 <= c <= 3:
            raise WardError("each component must lie in [0, 3]")
    return float(sum(components))


def n3(
    treatments: TreatmentRecord, weights: Mapping[str, float], at: float
) -> float:
    """Summed invasiveness of interventions active at *at* ([start, end))."""
    total = 0.0
    for item in treatments.interventions:
        if item.start <= at and (item.end is None or item.end > at):
            if item.intervention_id not in weights:
                raise WardError(
                    f"no invasiveness weight configured for {item.intervention_id!r}"
                )
            total += weights[item.intervention_id]
    return total


@dataclass(frozen=True)
class LeaderBoardEntry:
    patient_id: str
    composite: float
    indices: WardIndices


def rank_ward(
    indices: Sequence[WardIndices],
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> list[LeaderBoardEntry]:
    """Order patients by w1*N1 + w2*N2 + w3*N3, descending.

    The input sequence is taken in admission order; ties keep that order.
    """
    if any(w < 0 for w in weights):
        raise WardError("composite weights must be >= 0")
    w1, w2, w3 = weights
    entries = [
        LeaderBoardEntry(ix.patient_id, w1 * ix.n1 + w2 * ix.n2 + w3 * ix.n3, ix)
        for ix in indices
    ]
    order = sorted(range(len(entries)), key=lambda i: (-entries[i].composite, i))
    return [entries[i] for i in order]
