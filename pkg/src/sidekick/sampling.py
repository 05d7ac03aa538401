"""Completion sampling over partial observations.

Unknown coordinates are filled independently from their empirical marginals,
either by seeded Monte Carlo draws or — in exhaustive mode — by enumerating
the full product of marginal supports with integer multiplicities, which
makes downstream tallies exact (no sampling noise, no float rounding beyond
the model's own scores).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .dataset import Marginal, TypicalRepresentative
from .schema import FeatureVector, ParameterSchema, PartialObservation

# Exhaustive enumeration refuses to build more combinations than this.
MAX_EXHAUSTIVE_ROWS = 2_000_000


class SamplingError(ValueError):
    """Raised when a sampler request cannot be satisfied."""


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs shared by the sampler and the occlusion attribution."""

    draws: int = 1000        # M: completions per evaluation
    seed: int = 0
    exhaustive: bool = False  # enumerate instead of sampling
    resamples: int = 200     # R: occlusion resamples per coordinate

    def __post_init__(self) -> None:
        if self.draws < 1:
            raise SamplingError("draws must be >= 1")
        if self.resamples < 1:
            raise SamplingError("resamples must be >= 1")


def _encode(spec, value: Any) -> float:
    return float(value) if spec.is_quantitative else float(spec.category_code(value))


def completion_table(
    known: PartialObservation,
    marginals: Mapping[str, Marginal],
    cfg: SamplerConfig,
) -> tuple[list[tuple[Any, ...]], np.ndarray]:
    """All completions as raw-value rows plus a per-row weight vector.

    Sampled mode: ``draws`` rows, each weight 1.  Exhaustive mode: one row
    per combination of distinct unknown values, weighted by the product of
    the values' integer multiplicities in their marginals — so the weights
    tally completions exactly as if the full multiset product were listed.
    """
    schema = known.schema
    unknown = known.unknown_ids
    for pid in unknown:
        if pid not in marginals:
            raise SamplingError(f"no marginal available for unknown parameter {pid!r}")

    if cfg.exhaustive:
        supports: list[list[tuple[Any, int]]] = []
        total = 1
        for pid in unknown:
            counts = Counter(marginals[pid].values)
            seen_order = list(dict.fromkeys(marginals[pid].values))
            supports.append([(v, counts[v]) for v in seen_order])
            total *= len(seen_order)
            if total > MAX_EXHAUSTIVE_ROWS:
                raise SamplingError(
                    f"exhaustive enumeration would exceed {MAX_EXHAUSTIVE_ROWS} rows"
                )
        rows: list[tuple[Any, ...]] = []
        weights: list[float] = []
        for combo in itertools.product(*supports) if unknown else [()]:
            filler = {pid: vc[0] for pid, vc in zip(unknown, combo)}
            w = 1.0
            for _, c in combo:
                w *= c
            rows.append(tuple(
                known.known[p.id] if p.id in known.known else filler[p.id]
                for p in schema
            ))
            weights.append(w)
        return rows, np.asarray(weights, dtype=np.float64)

    rng = np.random.default_rng(cfg.seed)
    columns: dict[str, Sequence[Any]] = {}
    for pid in unknown:  # schema order; keeps draws reproducible
        columns[pid] = marginals[pid].sample(rng, cfg.draws)
    rows = [
        tuple(
            known.known[p.id] if p.id in known.known else columns[p.id][i]
            for p in schema
        )
        for i in range(cfg.draws)
    ]
    return rows, np.ones(len(rows), dtype=np.float64)


def rows_to_codes(schema: ParameterSchema, rows: Sequence[tuple[Any, ...]]) -> np.ndarray:
    specs = schema.parameters
    out = np.empty((len(rows), len(specs)), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, spec in enumerate(specs):
            out[i, j] = _encode(spec, row[j])
    return out


def sample_completions(
    known: PartialObservation,
    marginals: Mapping[str, Marginal],
    cfg: SamplerConfig,
) -> list[FeatureVector]:
    """Complete vectors fixing the known coordinates; see completion_table."""
    rows, _ = completion_table(known, marginals, cfg)
    return [FeatureVector(known.schema, row) for row in rows]


def detect_alternative(
    model,
    known: PartialObservation,
    alpha_holmes: str,
    marginals: Mapping[str, Marginal],
    cfg: SamplerConfig,
) -> Optional[tuple[str, FeatureVector]]:
    """Most common predicted label differing from the user's decision.

    Returns (label, exemplar completion predicted as that label), or None
    when every completion agrees.  Ties break toward the earlier label in
    the decision set; the exemplar is the first qualifying row.
    """
    rows, weights = completion_table(known, marginals, cfg)
    codes = rows_to_codes(known.schema, rows)
    preds = model.predict_codes(codes)
    holmes = model.label_code(alpha_holmes)
    tally = np.bincount(preds, weights=weights, minlength=len(model.decision_set))
    tally[holmes] = 0.0
    if tally.sum() <= 0.0:
        return None
    best = int(np.argmax(tally))
    first = int(np.nonzero(preds == best)[0][0])
    return model.decision_set[best], FeatureVector(known.schema, rows[first])


def impute_with_typical(
    known: PartialObservation, s: TypicalRepresentative
) -> FeatureVector:
    """Keep known coordinates; copy every unknown one from the prototype."""
    values = tuple(
        known.known[p.id] if p.id in known.known else s.vector.values[i]
        for i, p in enumerate(known.schema)
    )
    return FeatureVector(known.schema, values)
