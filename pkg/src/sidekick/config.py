"""Engine configuration: tunable thresholds, weights, and templates.

All knobs live in one frozen dataclass so a single JSON file can configure
a deployment.  Every field has a default; a config file only overrides the
fields it names.  Unknown fields are rejected (fail fast at load time).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional


class ConfigError(ValueError):
    """Raised when a config file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class EngineConfig:
    """Deployment-wide knobs, grouped roughly by subsystem."""

    # --- completion sampler ---------------------------------------------
    sampler_draws: int = 1000          # M: sampled completions per consult step
    sampler_seed: int = 0              # base seed for the completion sampler
    sampler_exhaustive: bool = False   # enumerate completions instead of sampling
    attribution_resamples: int = 200   # R: occlusion resamples per parameter

    # --- dialogue ---------------------------------------------------------
    max_questions: int = 2             # hard cap on clarifying questions per consult
    question_template: str = (
        "Are you expecting the {name} to remain {direction}?"
    )
    question_template_qualitative: str = (
        "Does {value!r} for {name} match your reading?"
    )

    # --- attention ranking -------------------------------------------------
    trend_window: int = 5              # samples in the trend (slope) window
    trend_slope_threshold: float = 0.5       # |slope| at/above this = fast change
    extreme_slope_threshold: float = 1.0     # |slope| at/above this = extreme change
    baseline_delta_threshold: float = 1.0    # |normalized - baseline| to join group 3
    consecutive_abnormal_k: int = 3    # K: trailing abnormal samples to flag
    pair_delta_threshold: float = 0.25  # both |deltas| must exceed this to pair-flag
    display_quantitative: int = 4      # quantitative slots on the main display
    display_qualitative: int = 2       # qualitative slots on the main display

    # --- ward indexes ------------------------------------------------------
    composite_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    intervention_weights: Mapping[str, float] = field(default_factory=dict)
    prognosis_direction_tolerance: float = 0.1  # |delta| below this counts as "stable"

    # --- antisyndrome mining ------------------------------------------------
    mining_ratio: float = 0.1          # observed/expected at or below this = candidate
    mining_min_expected: float = 5.0   # expected joint count must reach this
    mining_max_size: int = 4           # largest combination size examined
    mining_global_marginals: bool = False  # use whole-dataset marginals, not within-class

    # --- follow-up summaries -------------------------------------------------
    date_formats: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    # registry id -> separator conventions, e.g. {"slash": "mdy", "dot": "dmy"};
    # ISO dates are always accepted, unconfigured separators stay ambiguous
    chronology_order: tuple[str, ...] = ()
    # canonical event-kind order; violations are flagged in summaries
    required_predecessors: Mapping[str, str] = field(default_factory=dict)
    # event kind -> kind that must appear earlier in the record

    # --- archive & confidentiality -------------------------------------------
    archive_path: str = "sidekick.sqlite3"
    transcript_retain_minutes: int = 0  # grace period before close destroys transcripts
    patient_id_pattern: str = r"\b(?:PT|MRN)[-:]?\d{4,}\b"

    # --- service ---------------------------------------------------------------
    schema_version: str = "1"
    api_tokens: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.sampler_draws < 1:
            raise ConfigError("sampler_draws must be >= 1")
        if self.attribution_resamples < 1:
            raise ConfigError("attribution_resamples must be >= 1")
        if self.max_questions < 0:
            raise ConfigError("max_questions must be >= 0")
        if self.trend_window < 2:
            raise ConfigError("trend_window must be >= 2")
        if self.consecutive_abnormal_k < 1:
            raise ConfigError("consecutive_abnormal_k must be >= 1")
        if len(self.composite_weights) != 3:
            raise ConfigError("composite_weights needs exactly three entries")
        if not (0.0 < self.mining_ratio <= 1.0):
            raise ConfigError("mining_ratio must be in (0, 1]")
        if self.mining_min_expected <= 0.0:
            raise ConfigError("mining_min_expected must be positive")
        if self.mining_max_size < 1:
            raise ConfigError("mining_max_size must be >= 1")
        if self.prognosis_direction_tolerance < 0.0:
            raise ConfigError("prognosis_direction_tolerance must be >= 0")
        if self.transcript_retain_minutes < 0:
            raise ConfigError("transcript_retain_minutes must be >= 0")
        for registry, conventions in self.date_formats.items():
            for sep, order in conventions.items():
                if sep not in ("slash", "dot"):
                    raise ConfigError(f"{registry!r}: unknown date separator {sep!r}")
                if order not in ("mdy", "dmy"):
                    raise ConfigError(f"{registry!r}: unknown date order {order!r}")
        for name, w in self.intervention_weights.items():
            if w < 0:
                raise ConfigError(f"intervention weight for {name!r} must be >= 0")


_TUPLE_FIELDS = {"composite_weights", "chronology_order", "api_tokens"}
_MAP_FIELDS = {"intervention_weights", "date_formats", "required_predecessors"}


def config_from_dict(data: Mapping[str, Any]) -> EngineConfig:
    known = {f.name for f in fields(EngineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS:
            value = tuple(value)
        elif key in _MAP_FIELDS:
            value = dict(value)
        kwargs[key] = value
    return EngineConfig(**kwargs)


def load_config(path: Optional[str | Path]) -> EngineConfig:
    """Load an :class:`EngineConfig`, or return defaults when path is None.

    Field names are documented in README.md (section "Config files").
    """
    if path is None:
        return EngineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return config_from_dict(data)


def with_overrides(config: EngineConfig, **kwargs: Any) -> EngineConfig:
    """Return a copy of *config* with the named fields replaced."""
    return replace(config, **kwargs)
