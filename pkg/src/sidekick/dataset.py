"""Labeled training data: ingestion, marginals, and typical representatives.

A dataset is a list of complete feature vectors with decision labels.  The
decision set D preserves first-appearance order, which downstream tie-breaks
rely on.  Empirical marginals are kept as the observed multiset per
parameter, so sampling from one reproduces the observed frequencies exactly.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from .schema import FeatureVector, ParameterSchema, ParameterSpec, SchemaError

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


class DatasetError(ValueError):
    """Raised when a dataset file or request violates the data contract."""


@dataclass(frozen=True)
class LabeledDataset:
    """Complete feature vectors plus labels; D = labels in first-seen order."""

    schema: ParameterSchema
    records: tuple[FeatureVector, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.records:
            raise DatasetError("dataset needs at least one record")
        if len(self.records) != len(self.labels):
            raise DatasetError("records and labels differ in length")
        for i, rec in enumerate(self.records):
            if rec.schema is not self.schema and rec.schema != self.schema:
                raise DatasetError(f"record {i} uses a different schema")
            if not rec.is_complete:
                raise DatasetError(f"record {i} has missing slots")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def decision_set(self) -> tuple[str, ...]:
        """Distinct labels in order of first appearance."""
        seen: dict[str, None] = {}
        for lab in self.labels:
            seen.setdefault(lab)
        return tuple(seen)

    def label_index(self, label: str) -> int:
        try:
            return self.decision_set.index(label)
        except ValueError:
            raise DatasetError(f"unknown label {label!r}") from None

    def subset(self, label: str) -> "LabeledDataset":
        picked = [(r, l) for r, l in zip(self.records, self.labels) if l == label]
        if not picked:
            raise DatasetError(f"unknown label {label!r}")
        recs, labs = zip(*picked)
        return LabeledDataset(self.schema, tuple(recs), tuple(labs))

    def to_matrix(self) -> np.ndarray:
        """Encode all records as a float64 matrix (see FeatureVector.to_codes)."""
        return np.stack([r.to_codes() for r in self.records])

    def label_codes(self) -> np.ndarray:
        order = {lab: i for i, lab in enumerate(self.decision_set)}
        return np.asarray([order[lab] for lab in self.labels], dtype=np.int64)


def load_dataset(
    path: str | Path, schema: ParameterSchema, delimiter: str = ","
) -> LabeledDataset:
    """Read a delimited text file whose header is the parameter ids + "label".

    Cells that fail to parse abort the load with a diagnostic naming the
    offending row (1-based, counting data rows) and column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if LABEL_COLUMN not in header:
            raise DatasetError(f"{path}: missing {LABEL_COLUMN!r} column")
        missing = [pid for pid in schema.ids if pid not in header]
        if missing:
            raise DatasetError(f"{path}: missing parameter columns {missing}")
        extra = [h for h in header if h != LABEL_COLUMN and h not in schema.ids]
        if extra:
            raise DatasetError(f"{path}: unexpected columns {extra}")
        col_of = {name: i for i, name in enumerate(header)}

        records: list[FeatureVector] = []
        labels: list[str] = []
        for row_idx, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {row_idx} has {len(row)} cells, expected {len(header)}"
                )
            values: dict[str, Any] = {}
            for spec in schema:
                cell = row[col_of[spec.id]].strip()
                values[spec.id] = _parse_cell(cell, spec, path, row_idx)
            try:
                records.append(FeatureVector.from_mapping(schema, values))
            except SchemaError as exc:
                raise DatasetError(f"{path}: row {row_idx}: {exc}") from None
            labels.append(row[col_of[LABEL_COLUMN]].strip())

    if not records:
        raise DatasetError(f"{path}: no data rows")
    logger.info("loaded %d records, %d labels from %s", len(records), len(set(labels)), path)
    return LabeledDataset(schema, tuple(records), tuple(labels))


def _parse_cell(cell: str, spec: ParameterSpec, path: Any, row_idx: int) -> Any:
    if spec.is_quantitative:
        try:
            return float(cell)
        except ValueError:
            raise DatasetError(
                f"{path}: row {row_idx}, column {spec.id!r}: "
                f"expected a number, got {cell!r}"
            ) from None
    if cell not in spec.categories:
        raise DatasetError(
            f"{path}: row {row_idx}, column {spec.id!r}: "
            f"{cell!r} is not one of {list(spec.categories)}"
        )
    return cell


@dataclass(frozen=True)
class Marginal:
    """Empirical distribution of one parameter: the observed multiset.

    A uniform draw over the multiset reproduces the observed frequencies,
    so one representation serves both quantitative and qualitative kinds.
    """

    param_id: str
    values: tuple[Any, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise DatasetError(f"marginal for {self.param_id!r} is empty")

    def support(self) -> tuple[tuple[Any, float], ...]:
        """Distinct values with probabilities, in first-seen order."""
        counts = Counter(self.values)
        n = len(self.values)
        return tuple((v, c / n) for v, c in counts.items())

    def probability_of(self, value: Any) -> float:
        return sum(1 for v in self.values if v == value) / len(self.values)

    def sample(self, rng: np.random.Generator, size: int) -> list[Any]:
        idx = rng.integers(0, len(self.values), size=size)
        return [self.values[i] for i in idx]


def empirical_marginal(dataset: LabeledDataset, param_id: str) -> Marginal:
    """Observed multiset of one parameter across the whole dataset."""
    i = dataset.schema.index_of(param_id)
    return Marginal(param_id, tuple(rec.values[i] for rec in dataset.records))


def all_marginals(dataset: LabeledDataset) -> dict[str, Marginal]:
    return {pid: empirical_marginal(dataset, pid) for pid in dataset.schema.ids}


CENTROID = "centroid"
MEDIANWISE = "medianwise"
EXPERT = "expert"


@dataclass(frozen=True)
class TypicalRepresentative:
    """A prototype complete vector for one decision label."""

    label: str
    vector: FeatureVector
    method: str


def typical_representative(
    dataset: LabeledDataset,
    label: str,
    method: str = CENTROID,
    expert_vectors: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> TypicalRepresentative:
    """Build the prototype vector for *label*.

    centroid: per-coordinate mean (quantitative) / mode (qualitative);
    medianwise: per-coordinate median / mode; expert: look the vector up in
    *expert_vectors* (label -> parameter id -> value).  Mode ties break by
    category order.
    """
    if method == EXPERT:
        if not expert_vectors or label not in expert_vectors:
            raise DatasetError(f"no expert representative configured for {label!r}")
        vec = FeatureVector.from_mapping(dataset.schema, expert_vectors[label])
        if not vec.is_complete:
            raise DatasetError(f"expert representative for {label!r} is incomplete")
        return TypicalRepresentative(label, vec, EXPERT)
    if method not in (CENTROID, MEDIANWISE):
        raise DatasetError(f"unknown representative method {method!r}")

    sub = dataset.subset(label)
    values: dict[str, Any] = {}
    for i, spec in enumerate(dataset.schema):
        column = [rec.values[i] for rec in sub.records]
        if spec.is_quantitative:
            arr = np.asarray(column, dtype=np.float64)
            values[spec.id] = float(np.mean(arr) if method == CENTROID else np.median(arr))
        else:
            counts = Counter(column)
            best = max(counts.values())
            values[spec.id] = next(c for c in spec.categories if counts.get(c) == best)
    return TypicalRepresentative(
        label, FeatureVector.from_mapping(dataset.schema, values), method
    )


def load_expert_vectors(path: str | Path) -> dict[str, dict[str, Any]]:
    """Read expert representatives from JSON: label -> parameter id -> value."""
    import json

    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DatasetError("expert representative file must hold a JSON object")
    return {str(lab): dict(vec) for lab, vec in data.items()}
