"""Minimal-antisyndrome mining over labeled symptom data.

An antisyndrome of a class is a combination of symptom values that should
appear — assuming independence, with expected frequency ∏ p(x_j) — but is
absent from the class's records.  Mining proceeds level-wise over value
combinations on distinct fields: a set is a *candidate* when its observed
in-class frequency is at most τ·∏p while the expected count |A|·∏p reaches
the noise floor c.  Absent candidates whose every proper subset does occur
are reported as minimal; candidates that are merely much rarer than
expected (but present) are reported separately as suspicious.  Quantitative
inputs are discretized to their normalization bands before mining.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .dataset import LabeledDataset
from .normalization import band_of, normalize
from .registry import RegistryRecord

Item = tuple[str, str]  # (field id, value token)

NOT_A = "not-A"
CONSISTENT = "consistent-with-A"


class MiningError(ValueError):
    """Raised when the mining inputs violate their contract."""


@dataclass(frozen=True)
class AntisyndromeCandidate:
    """A combination far rarer in the class than independence predicts."""

    items: tuple[Item, ...]
    class_label: str
    expected: float   # ∏ p(x_j)
    observed: int     # record count within the class
    ratio: float      # observed frequency / expected frequency

    def __post_init__(self) -> None:
        if not self.items:
            raise MiningError("candidate needs at least one item")
        if self.expected <= 0.0:
            raise MiningError("candidate expected probability must be positive")


@dataclass(frozen=True)
class MinimalAntisyndrome:
    """Absent from the class, while every proper subset does occur."""

    items: tuple[Item, ...]
    class_label: str
    expected: float


@dataclass(frozen=True)
class MiningReport:
    class_label: str
    minimal: tuple[MinimalAntisyndrome, ...]
    suspicious: tuple[AntisyndromeCandidate, ...]


class _SupportIndex:
    """Encodes rows once and answers item-set support counts via kernels."""

    def __init__(self, rows: Sequence[Mapping[str, str]], fields: Sequence[str]):
        self.field_index = {f: i for i, f in enumerate(fields)}
        self.value_codes: dict[str, dict[str, int]] = {f: {} for f in fields}
        matrix = np.full((len(rows), len(fields)), -1, dtype=np.int64)
        for r, row in enumerate(rows):
            for f, v in row.items():
                if f not in self.field_index:
                    continue
                codes = self.value_codes[f]
                code = codes.setdefault(v, len(codes))
                matrix[r, self.field_index[f]] = code
        self.matrix = matrix

    def support(self, items: Sequence[Item]) -> int:
        feat = np.empty(len(items), dtype=np.int64)
        vals = np.empty(len(items), dtype=np.int64)
        for i, (f, v) in enumerate(items):
            feat[i] = self.field_index[f]
            code = self.value_codes.get(f, {}).get(v)
            if code is None:
                return 0  # value never seen in these rows
            vals[i] = code
        return int(_kernels.count_support(self.matrix, feat, vals))


def mine_antisyndromes(
    rows: Sequence[Mapping[str, str]],
    labels: Sequence[str],
    class_label: str,
    max_size: int = 4,
    ratio: float = 0.1,
    min_expected: float = 5.0,
    global_marginals: bool = False,
) -> MiningReport:
    """Level-wise mining of one class; see the module docstring.

    Marginals come from the class's own records by default, or from the
    whole dataset with ``global_marginals=True``.  Supersets of any set
    already measured absent are pruned: they can be neither minimal nor
    suspicious.
    """
    if len(rows) != len(labels):
        raise MiningError("rows and labels differ in length")
    rows_a = [r for r, l in zip(rows, labels) if l == class_label]
    if not rows_a:
        raise MiningError(f"class {class_label!r} has no records")
    n_a = len(rows_a)
    marginal_rows = list(rows) if global_marginals else rows_a

    item_counts: Counter[Item] = Counter()
    for row in marginal_rows:
        item_counts.update(row.items())
    items = sorted(item_counts)
    prob = {item: item_counts[item] / len(marginal_rows) for item in items}

    fields = sorted({f for f, _ in items})
    index = _SupportIndex(rows_a, fields)

    minimal: list[MinimalAntisyndrome] = []
    suspicious: list[AntisyndromeCandidate] = []
    absent: list[frozenset[Item]] = []

    for size in range(1, max_size + 1):
        for combo in itertools.combinations(items, size):
            if len({f for f, _ in combo}) != size:
                continue  # one value per field
            combo_set = frozenset(combo)
            if any(a <= combo_set for a in absent):
                continue
            expected = 1.0
            for item in combo:
                expected *= prob[item]
            if n_a * expected < min_expected:
                continue
            observed = index.support(combo)
            if observed == 0:
                absent.append(combo_set)
                if verify_minimality(combo, rows_a, support_index=index):
                    minimal.append(MinimalAntisyndrome(combo, class_label, expected))
            elif observed / n_a <= ratio * expected:
                suspicious.append(
                    AntisyndromeCandidate(
                        items=combo,
                        class_label=class_label,
                        expected=expected,
                        observed=observed,
                        ratio=(observed / n_a) / expected,
                    )
                )
    return MiningReport(
        class_label=class_label,
        minimal=tuple(minimal),
        suspicious=tuple(suspicious),
    )


def verify_minimality(
    items: Sequence[Item],
    rows_a: Sequence[Mapping[str, str]],
    support_index: Optional[_SupportIndex] = None,
) -> bool:
    """True iff *items* never occurs in the class while every proper subset does.

    Checking the one-smaller subsets suffices: support is anti-monotone, so
    if each of them occurs, so does every smaller subset.
    """
    if not items:
        raise MiningError("empty item set")
    index = support_index or _SupportIndex(rows_a, sorted({f for f, _ in items}))
    if index.support(items) != 0:
        return False
    return all(
        index.support(subset) > 0
        for subset in itertools.combinations(items, len(items) - 1)
        if subset
    )


@dataclass(frozen=True)
class RecognitionResult:
    verdict: str
    matched: tuple[tuple[Item, ...], ...]


def recognition_rule(
    minimals: Sequence[MinimalAntisyndrome],
) -> Callable[[Mapping[str, str]], RecognitionResult]:
    """Record predicate: containing any minimal antisyndrome means not-A."""

    def classify(row: Mapping[str, str]) -> RecognitionResult:
        matched = tuple(
            m.items
            for m in minimals
            if all(row.get(f) == v for f, v in m.items)
        )
        return RecognitionResult(NOT_A if matched else CONSISTENT, matched)

    return classify


def flag_record(
    row: Mapping[str, str], minimals: Sequence[MinimalAntisyndrome]
) -> list[str]:
    """Advisory warnings for a record carrying its class's antisyndromes."""
    result = recognition_rule(minimals)(row)
    return [
        "suspected class-label or field-entry error: record contains "
        + " AND ".join(f"{f}={v}" for f, v in items)
        + ", a combination absent from its labeled class"
        for items in result.matched
    ]


# --- input adapters ---------------------------------------------------------

def itemize_dataset(dataset: LabeledDataset) -> tuple[list[dict[str, str]], list[str]]:
    """Symptom rows from a labeled dataset.

    Qualitative values pass through; quantitative values with thresholds
    become their band name; quantitative parameters without thresholds
    cannot be discretized and are left out.
    """
    rows: list[dict[str, str]] = []
    for rec in dataset.records:
        row: dict[str, str] = {}
        for spec, value in zip(dataset.schema, rec.values):
            if spec.is_quantitative:
                if spec.thresholds is None:
                    continue
                row[spec.id] = band_of(normalize(float(value), spec.thresholds)).value
            else:
                row[spec.id] = str(value)
        rows.append(row)
    return rows, list(dataset.labels)


def itemize_records(records: Sequence[RegistryRecord]) -> list[dict[str, str]]:
    """Symptom rows from registry records: category and boolean fields only."""
    rows = []
    for record in records:
        row: dict[str, str] = {}
        for fid, value in record.fields.items():
            kind = record.schema.field_spec(fid).kind
            if kind == "category":
                row[fid] = str(value)
            elif kind == "boolean":
                row[fid] = "yes" if value else "no"
        rows.append(row)
    return rows
