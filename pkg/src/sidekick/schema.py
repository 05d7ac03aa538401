"""Parameter schemas and observation vectors.

A schema is an ordered list of parameter specs, each either quantitative
(real-valued, with a unit and optional normalization thresholds) or
qualitative (an ordered category list).  Feature vectors and partial
observations are always interpreted against a schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional

import numpy as np

from .normalization import Band, ThresholdSet, band_of, normalize

QUANTITATIVE = "quantitative"
QUALITATIVE = "qualitative"

# Qualitative categories are routed through 64-bit masks in the tree kernels.
MAX_CATEGORIES = 63


class SchemaError(ValueError):
    """Raised when a schema or a value does not satisfy its contract."""


@dataclass(frozen=True)
class ParameterSpec:
    """One input parameter: identity, kind, and display metadata."""

    id: str
    name: str
    kind: str
    unit: Optional[str] = None
    thresholds: Optional[ThresholdSet] = None
    categories: tuple[str, ...] = ()
    organ_system: str = ""
    expected_correlations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (QUANTITATIVE, QUALITATIVE):
            raise SchemaError(f"parameter {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == QUANTITATIVE:
            if not self.unit:
                raise SchemaError(f"quantitative parameter {self.id!r} needs a unit")
            if self.categories:
                raise SchemaError(f"quantitative parameter {self.id!r} cannot have categories")
        else:
            if len(self.categories) < 2:
                raise SchemaError(f"qualitative parameter {self.id!r} needs >= 2 categories")
            if len(self.categories) > MAX_CATEGORIES:
                raise SchemaError(
                    f"qualitative parameter {self.id!r} has {len(self.categories)} "
                    f"categories; at most {MAX_CATEGORIES} supported"
                )
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"parameter {self.id!r}: duplicate categories")
            if self.thresholds is not None:
                raise SchemaError(f"qualitative parameter {self.id!r} cannot have thresholds")
        for sign in (s for _, s in self.expected_correlations):
            if sign not in (1, -1):
                raise SchemaError(f"parameter {self.id!r}: correlation sign must be +1 or -1")

    @property
    def is_quantitative(self) -> bool:
        return self.kind == QUANTITATIVE

    def category_code(self, value: str) -> int:
        try:
            return self.categories.index(value)
        except ValueError:
            raise SchemaError(
                f"parameter {self.id!r}: {value!r} is not one of {list(self.categories)}"
            ) from None

    def check_value(self, value: Any) -> None:
        """Type-check a present value against this spec."""
        if self.is_quantitative:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"parameter {self.id!r}: expected a number, got {value!r}")
            if not math.isfinite(float(value)):
                raise SchemaError(f"parameter {self.id!r}: value must be finite, got {value!r}")
        else:
            if not isinstance(value, str):
                raise SchemaError(f"parameter {self.id!r}: expected a category, got {value!r}")
            self.category_code(value)

    def band(self, value: Any) -> Optional[Band]:
        """Band of a raw value, or None when the spec has no thresholds."""
        if not self.is_quantitative or self.thresholds is None:
            return None
        return band_of(normalize(float(value), self.thresholds))


@dataclass(frozen=True)
class ParameterSchema:
    """Ordered parameter list; the coordinate system for all vectors."""

    parameters: tuple[ParameterSpec, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.parameters:
            raise SchemaError("schema needs at least one parameter")
        index = {}
        for i, spec in enumerate(self.parameters):
            if spec.id in index:
                raise SchemaError(f"duplicate parameter id {spec.id!r}")
            index[spec.id] = i
        object.__setattr__(self, "_index", index)
        for spec in self.parameters:
            for other, _ in spec.expected_correlations:
                if other not in index:
                    raise SchemaError(
                        f"parameter {spec.id!r} expects correlation with unknown "
                        f"parameter {other!r}"
                    )

    def __len__(self) -> int:
        return len(self.parameters)

    def __iter__(self) -> Iterator[ParameterSpec]:
        return iter(self.parameters)

    def index_of(self, param_id: str) -> int:
        try:
            return self._index[param_id]
        except KeyError:
            raise SchemaError(f"unknown parameter id {param_id!r}") from None

    def spec(self, param_id: str) -> ParameterSpec:
        return self.parameters[self.index_of(param_id)]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.parameters)


@dataclass(frozen=True)
class FeatureVector:
    """One slot per schema parameter; a slot is a value or None (missing)."""

    schema: ParameterSchema
    values: tuple[Any, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.schema):
            raise SchemaError(
                f"vector has {len(self.values)} slots, schema has {len(self.schema)}"
            )
        for spec, value in zip(self.schema, self.values):
            if value is not None:
                spec.check_value(value)

    @classmethod
    def from_mapping(
        cls, schema: ParameterSchema, mapping: Mapping[str, Any]
    ) -> "FeatureVector":
        for key in mapping:
            schema.index_of(key)
        return cls(schema, tuple(mapping.get(p.id) for p in schema))

    @property
    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)

    def missing_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p, v in zip(self.schema, self.values) if v is None)

    def value_of(self, param_id: str) -> Any:
        return self.values[self.schema.index_of(param_id)]

    def replace(self, param_id: str, value: Any) -> "FeatureVector":
        i = self.schema.index_of(param_id)
        vals = list(self.values)
        vals[i] = value
        return FeatureVector(self.schema, tuple(vals))

    def to_codes(self) -> np.ndarray:
        """Encode as float64: raw values for quantitative slots, category
        codes for qualitative ones.  Requires a complete vector."""
        if not self.is_complete:
            raise SchemaError(f"vector is missing {list(self.missing_ids())}")
        out = np.empty(len(self.values), dtype=np.float64)
        for i, (spec, value) in enumerate(zip(self.schema, self.values)):
            out[i] = float(value) if spec.is_quantitative else spec.category_code(value)
        return out


@dataclass(frozen=True)
class PartialObservation:
    """The known coordinates of a patient state: parameter id -> value."""

    schema: ParameterSchema
    known: Mapping[str, Any]

    def __post_init__(self) -> None:
        for key, value in self.known.items():
            self.schema.spec(key).check_value(value)
        object.__setattr__(self, "known", dict(self.known))

    @property
    def known_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.schema if p.id in self.known)

    @property
    def unknown_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.schema if p.id not in self.known)

    def with_value(self, param_id: str, value: Any) -> "PartialObservation":
        merged = dict(self.known)
        merged[param_id] = value
        return PartialObservation(self.schema, merged)

    def as_vector(self) -> FeatureVector:
        return FeatureVector.from_mapping(self.schema, self.known)


def _spec_from_dict(entry: Mapping[str, Any]) -> ParameterSpec:
    thresholds = None
    if entry.get("thresholds") is not None:
        t = entry["thresholds"]
        thresholds = ThresholdSet(float(t["a1"]), float(t["a2"]), float(t["a3"]), float(t["a4"]))
    correlations = []
    for item in entry.get("expected_correlations", ()):
        other, sign = item[0], item[1]
        correlations.append((other, 1 if str(sign) in ("+", "1", "+1") else -1))
    return ParameterSpec(
        id=entry["id"],
        name=entry.get("name", entry["id"]),
        kind=entry["kind"],
        unit=entry.get("unit"),
        thresholds=thresholds,
        categories=tuple(entry.get("categories", ())),
        organ_system=entry.get("organ_system", ""),
        expected_correlations=tuple(correlations),
    )


def schema_from_dict(data: Mapping[str, Any]) -> ParameterSchema:
    return ParameterSchema(tuple(_spec_from_dict(e) for e in data["parameters"]))


def load_schema(path: str | Path) -> ParameterSchema:
    """Load a parameter schema from a JSON config file.

    Field names are documented in README.md (section "Config files").
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return schema_from_dict(data)


def schema_to_dict(schema: ParameterSchema) -> dict[str, Any]:
    out = []
    for p in schema:
        entry: dict[str, Any] = {"id": p.id, "name": p.name, "kind": p.kind}
        if p.unit:
            entry["unit"] = p.unit
        if p.thresholds:
            entry["thresholds"] = {
                "a1": p.thresholds.a1,
                "a2": p.thresholds.a2,
                "a3": p.thresholds.a3,
                "a4": p.thresholds.a4,
            }
        if p.categories:
            entry["categories"] = list(p.categories)
        if p.organ_system:
            entry["organ_system"] = p.organ_system
        if p.expected_correlations:
            entry["expected_correlations"] = [
                [other, "+" if sign > 0 else "-"] for other, sign in p.expected_correlations
            ]
        out.append(entry)
    return {"parameters": out}
