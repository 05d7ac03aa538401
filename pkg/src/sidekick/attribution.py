"""Local, model-independent attributions for a single prediction.

The default method is occlusion: a coordinate's significance is the drop in
the target label's score when that coordinate is resampled from its
marginal.  In exhaustive mode the resample mean is replaced by the exact
expectation over the marginal, weighted by value multiplicities.  Other
methods can be registered behind the same contract.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .dataset import Marginal
from .sampling import SamplerConfig, rows_to_codes
from .schema import FeatureVector


@dataclass(frozen=True)
class AttributionVector:
    """Per-parameter significance of *target* at the base point."""

    target: str
    base: FeatureVector
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.scores) != len(self.base.schema):
            raise ValueError("one score per schema parameter required")
        if not all(np.isfinite(s) for s in self.scores):
            raise ValueError("attribution scores must be finite")

    def score_of(self, param_id: str) -> float:
        return self.scores[self.base.schema.index_of(param_id)]


def occlusion_attribution(
    model,
    x: FeatureVector,
    target: str,
    marginals: Mapping[str, Marginal],
    cfg: SamplerConfig,
) -> AttributionVector:
    """score(j) = score_target(x) − E[score_target(x with j resampled)]."""
    schema = x.schema
    t = model.label_code(target)
    base = float(model.score_codes(rows_to_codes(schema, [x.values]), t)[0])

    scores: list[float] = []
    for j, spec in enumerate(schema):
        marginal = marginals.get(spec.id)
        if marginal is None:
            scores.append(0.0)
            continue
        if cfg.exhaustive:
            counts = Counter(marginal.values)
            values = list(dict.fromkeys(marginal.values))
            rows = [_replaced(x.values, j, v) for v in values]
            w = np.asarray([counts[v] for v in values], dtype=np.float64)
            s = model.score_codes(rows_to_codes(schema, rows), t)
            mean = float(np.dot(w, s) / w.sum())
        else:
            rng = np.random.default_rng((cfg.seed, j))
            drawn = marginal.sample(rng, cfg.resamples)
            rows = [_replaced(x.values, j, v) for v in drawn]
            mean = float(np.mean(model.score_codes(rows_to_codes(schema, rows), t)))
        scores.append(base - mean)
    return AttributionVector(target=target, base=x, scores=tuple(scores))


def _replaced(values: tuple, j: int, v) -> tuple:
    out = list(values)
    out[j] = v
    return tuple(out)


AttributionMethod = Callable[..., AttributionVector]

ATTRIBUTION_METHODS: dict[str, AttributionMethod] = {
    "occlusion": occlusion_attribution,
}


def local_attribution(
    model,
    x: FeatureVector,
    target: str,
    marginals: Mapping[str, Marginal],
    cfg: SamplerConfig,
    method: str = "occlusion",
) -> AttributionVector:
    """Dispatch to a registered attribution method (default: occlusion)."""
    try:
        fn = ATTRIBUTION_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown attribution method {method!r}") from None
    return fn(model, x, target, marginals, cfg)
