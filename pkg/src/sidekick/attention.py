"""Attention grouping, 1–7 ranking, and display selection for monitoring.

Five groups capture why a parameter deserves a look: (1) abnormal outside
the affected organ systems, (2) paradoxical dynamics against the overall
severity trend, (3) large excursion from baseline, (4) deep or persistent
band abnormality, (5) viewed before in similar cases.  Group tests run on
normalized values so thresholds are comparable across parameters; trends
are least-squares slopes over a sliding window.  Qualitative parameters
carry no bands or slopes, so only group 5 can apply to them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .config import EngineConfig
from .normalization import Band, band_of, normalize
from .schema import ParameterSchema, ParameterSpec

ALL_GROUPS = frozenset({1, 2, 3, 4, 5})
_NO_GROUP_SENTINEL = 6  # sorts after every real group number in tie-breaks


@dataclass(frozen=True)
class ParameterSeries:
    """Time-ordered (timestamp, value) samples for one parameter."""

    param_id: str
    samples: tuple[tuple[float, Any], ...]

    def __post_init__(self) -> None:
        times = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"series {self.param_id!r}: timestamps must increase")

    @property
    def last_value(self) -> Any:
        if not self.samples:
            raise ValueError(f"series {self.param_id!r} is empty")
        return self.samples[-1][1]


@dataclass(frozen=True)
class GroupMembership:
    param_id: str
    groups: frozenset[int]

    def __post_init__(self) -> None:
        if not self.groups <= ALL_GROUPS:
            raise ValueError(f"groups {set(self.groups)} outside {set(ALL_GROUPS)}")


@dataclass(frozen=True)
class AttentionRank:
    param_id: str
    rank: int
    groups: GroupMembership

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= 7:
            raise ValueError("rank must lie in [1, 7]")


@dataclass(frozen=True)
class ViewEvent:
    """One past look at parameters, labeled by the case context it happened in."""

    case_label: str
    param_ids: tuple[str, ...]


@dataclass(frozen=True)
class PairFlag:
    """An expected co-movement that the recent window violated."""

    param_id: str
    other_id: str
    expected_sign: int
    delta: float
    other_delta: float


def normalized_values(series: ParameterSeries, spec: ParameterSpec) -> Optional[np.ndarray]:
    """Series values on the normalized scale, or None when not bandable."""
    if not spec.is_quantitative or spec.thresholds is None or not series.samples:
        return None
    return np.asarray(
        [normalize(float(v), spec.thresholds) for _, v in series.samples]
    )


def trend_slope(series: ParameterSeries, spec: ParameterSpec, window: int) -> float:
    """Least-squares slope of normalized value vs. time over the last *window*
    samples; 0.0 when fewer than two usable samples exist."""
    norm = normalized_values(series, spec)
    if norm is None or len(norm) < 2:
        return 0.0
    norm = norm[-window:]
    times = np.asarray([t for t, _ in series.samples[-window:]], dtype=np.float64)
    t_c = times - times.mean()
    denom = float(np.dot(t_c, t_c))
    if denom == 0.0:
        return 0.0
    return float(np.dot(t_c, norm - norm.mean()) / denom)


def current_band(series: ParameterSeries, spec: ParameterSpec) -> Optional[Band]:
    norm = normalized_values(series, spec)
    if norm is None or len(norm) == 0:
        return None
    return band_of(float(norm[-1]))


def _trailing_abnormal_run(norm: np.ndarray) -> int:
    run = 0
    for v in norm[::-1]:
        if band_of(float(v)) is Band.NORMAL:
            break
        run += 1
    return run


def assign_groups(
    series_map: Mapping[str, ParameterSeries],
    schema: ParameterSchema,
    affected_organs: Iterable[str],
    severity_trend: float,
    baseline: Mapping[str, Any],
    view_history: Sequence[ViewEvent] = (),
    current_case: str = "",
    config: Optional[EngineConfig] = None,
) -> dict[str, GroupMembership]:
    """Attention-group membership for every parameter with a series."""
    cfg = config or EngineConfig()
    affected = set(affected_organs)
    viewed_in_similar: set[str] = set()
    for event in view_history:
        if current_case and event.case_label == current_case:
            viewed_in_similar.update(event.param_ids)

    out: dict[str, GroupMembership] = {}
    for pid, series in series_map.items():
        spec = schema.spec(pid)
        groups: set[int] = set()
        norm = normalized_values(series, spec)
        if norm is not None and len(norm) > 0:
            band = band_of(float(norm[-1]))
            slope = trend_slope(series, spec, cfg.trend_window)

            if band is not Band.NORMAL and spec.organ_system not in affected:
                groups.add(1)
            if (
                abs(slope) >= cfg.trend_slope_threshold
                and abs(severity_trend) >= cfg.trend_slope_threshold
                and slope * severity_trend < 0
            ):
                groups.add(2)
            if pid in baseline:
                base_norm = normalize(float(baseline[pid]), spec.thresholds)
                window = norm[-cfg.trend_window:]
                if float(np.max(np.abs(window - base_norm))) > cfg.baseline_delta_threshold:
                    groups.add(3)
            if band in (Band.STRONG_LOW, Band.STRONG_HIGH) or (
                _trailing_abnormal_run(norm) >= cfg.consecutive_abnormal_k
            ):
                groups.add(4)
        if pid in viewed_in_similar:
            groups.add(5)
        out[pid] = GroupMembership(pid, frozenset(groups))
    return out


def rank_attention(
    memberships: Mapping[str, GroupMembership],
    normalized_current: Mapping[str, Optional[float]],
    slopes: Mapping[str, float],
    config: Optional[EngineConfig] = None,
) -> dict[str, AttentionRank]:
    """Score each parameter 1–7: base 1, +1 per group held, +1 for any
    non-Normal band, +1 more for Strong bands, +1 for extreme dynamics."""
    cfg = config or EngineConfig()
    out: dict[str, AttentionRank] = {}
    for pid, membership in memberships.items():
        score = 1 + len(membership.groups)
        value = normalized_current.get(pid)
        if value is not None:
            band = band_of(float(value))
            if band is not Band.NORMAL:
                score += 1
            if band in (Band.STRONG_LOW, Band.STRONG_HIGH):
                score += 1
        if abs(slopes.get(pid, 0.0)) >= cfg.extreme_slope_threshold:
            score += 1
        out[pid] = AttentionRank(pid, min(7, max(1, score)), membership)
    return out


@dataclass(frozen=True)
class DisplaySelection:
    quantitative: tuple[str, ...]
    qualitative: tuple[str, ...]


def select_display(
    ranks: Mapping[str, AttentionRank],
    schema: ParameterSchema,
    config: Optional[EngineConfig] = None,
) -> DisplaySelection:
    """Top quantitative and qualitative parameters by rank.

    Ties break by the smallest group number held (parameters without groups
    sort last), then by schema position.
    """
    cfg = config or EngineConfig()

    def sort_key(pid: str) -> tuple[int, int, int]:
        r = ranks[pid]
        lead_group = min(r.groups.groups) if r.groups.groups else _NO_GROUP_SENTINEL
        return (-r.rank, lead_group, schema.index_of(pid))

    ordered = sorted(ranks, key=sort_key)
    quant = [p for p in ordered if schema.spec(p).is_quantitative]
    qual = [p for p in ordered if not schema.spec(p).is_quantitative]
    return DisplaySelection(
        quantitative=tuple(quant[: cfg.display_quantitative]),
        qualitative=tuple(qual[: cfg.display_qualitative]),
    )


def detect_unusual_pairs(
    series_map: Mapping[str, ParameterSeries],
    schema: ParameterSchema,
    config: Optional[EngineConfig] = None,
) -> list[PairFlag]:
    """Flag declared co-movement expectations that the window violates.

    The change of each side is the normalized last-minus-first delta over
    the trend window; a violation needs the sign product to differ from the
    expectation while both magnitudes clear the pair threshold.
    """
    cfg = config or EngineConfig()
    flags: list[PairFlag] = []

    def window_delta(pid: str) -> Optional[float]:
        series = series_map.get(pid)
        if series is None:
            return None
        norm = normalized_values(series, schema.spec(pid))
        if norm is None or len(norm) < 2:
            return None
        window = norm[-cfg.trend_window:]
        return float(window[-1] - window[0])

    for spec in schema:
        for other_id, sign in spec.expected_correlations:
            d_p = window_delta(spec.id)
            d_q = window_delta(other_id)
            if d_p is None or d_q is None:
                continue
            if abs(d_p) <= cfg.pair_delta_threshold or abs(d_q) <= cfg.pair_delta_threshold:
                continue
            if np.sign(d_p) * np.sign(d_q) != sign:
                flags.append(PairFlag(spec.id, other_id, sign, d_p, d_q))
    return flags
