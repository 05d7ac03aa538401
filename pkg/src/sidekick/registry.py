"""Registry records: typed field maps, clinical events, and date parsing.

Registries accumulate free-form documentation, so dates arrive in several
notations.  ISO (YYYY-MM-DD) is always accepted; slash and dot dates are
interpreted through a per-registry convention table (e.g. slash = MDY,
dot = DMY).  Without a configured convention, a date like 01/07/2009 is
genuinely ambiguous and is reported as such rather than silently resolved;
dates where only one reading is a valid calendar date parse either way.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

FIELD_KINDS = ("text", "number", "date", "category", "boolean")

_ISO_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_SLASH_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_DOT_RE = re.compile(r"^(\d{1,2})\.(\d{1,2})\.(\d{4})$")


class RegistryError(ValueError):
    """Raised when a record or registry schema violates its contract."""


class DateParseError(RegistryError):
    """Raised when a date string cannot be read at all."""


class AmbiguousDateError(DateParseError):
    """Raised when a date has two valid readings and no convention is set."""


def _try_date(year: int, month: int, day: int) -> Optional[dt.date]:
    try:
        return dt.date(year, month, day)
    except ValueError:
        return None


def parse_date(text: str, conventions: Optional[Mapping[str, str]] = None) -> dt.date:
    """Parse an ISO, slash, or dot date under the registry's conventions.

    ``conventions`` maps separator ("slash" / "dot") to digit order
    ("mdy" / "dmy").  An unconfigured separator is accepted only when one
    reading is a valid date; two valid readings raise AmbiguousDateError.
    """
    text = text.strip()
    m = _ISO_RE.match(text)
    if m:
        date = _try_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        if date is None:
            raise DateParseError(f"{text!r} is not a valid calendar date")
        return date

    for sep, pattern in (("slash", _SLASH_RE), ("dot", _DOT_RE)):
        m = pattern.match(text)
        if not m:
            continue
        a, b, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
        order = (conventions or {}).get(sep)
        if order == "mdy":
            date = _try_date(year, a, b)
        elif order == "dmy":
            date = _try_date(year, b, a)
        else:
            as_mdy = _try_date(year, a, b)
            as_dmy = _try_date(year, b, a)
            if as_mdy and as_dmy and as_mdy != as_dmy:
                raise AmbiguousDateError(
                    f"{text!r} is ambiguous without a configured "
                    f"{sep}-date convention"
                )
            date = as_mdy or as_dmy
        if date is None:
            raise DateParseError(f"{text!r} is not a valid calendar date")
        return date

    raise DateParseError(f"unrecognized date format {text!r}")


@dataclass(frozen=True)
class RegistryFieldSpec:
    id: str
    name: str
    kind: str
    categories: tuple[str, ...] = ()
    unit: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in FIELD_KINDS:
            raise RegistryError(f"field {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "category" and len(self.categories) < 2:
            raise RegistryError(f"category field {self.id!r} needs >= 2 categories")

    def check_value(self, value: Any) -> None:
        if self.kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise RegistryError(f"field {self.id!r}: expected a number, got {value!r}")
        elif self.kind == "boolean":
            if not isinstance(value, bool):
                raise RegistryError(f"field {self.id!r}: expected a boolean, got {value!r}")
        elif self.kind == "category":
            if value not in self.categories:
                raise RegistryError(
                    f"field {self.id!r}: {value!r} is not one of {list(self.categories)}"
                )
        elif self.kind in ("text", "date"):
            if not isinstance(value, str):
                raise RegistryError(f"field {self.id!r}: expected text, got {value!r}")


@dataclass(frozen=True)
class RegistrySchema:
    registry_id: str
    fields: tuple[RegistryFieldSpec, ...]
    event_kinds: tuple[str, ...]

    def __post_init__(self) -> None:
        ids = [f.id for f in self.fields]
        if len(set(ids)) != len(ids):
            raise RegistryError("duplicate registry field ids")
        if len(set(self.event_kinds)) != len(self.event_kinds):
            raise RegistryError("duplicate event kinds")

    def field_spec(self, field_id: str) -> RegistryFieldSpec:
        for spec in self.fields:
            if spec.id == field_id:
                return spec
        raise RegistryError(f"unknown registry field {field_id!r}")

    @property
    def field_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fields)


@dataclass(frozen=True)
class ClinicalEvent:
    kind: str
    date_text: str
    attributes: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", dict(self.attributes))

    def date(self, conventions: Optional[Mapping[str, str]] = None) -> dt.date:
        return parse_date(self.date_text, conventions)


@dataclass(frozen=True)
class RegistryRecord:
    record_id: str
    schema: RegistrySchema
    fields: Mapping[str, Any]
    events: tuple[ClinicalEvent, ...] = ()

    def __post_init__(self) -> None:
        for fid, value in self.fields.items():
            self.schema.field_spec(fid).check_value(value)
        for event in self.events:
            if event.kind not in self.schema.event_kinds:
                raise RegistryError(f"unknown event kind {event.kind!r}")
        object.__setattr__(self, "fields", dict(self.fields))


def registry_schema_from_dict(data: Mapping[str, Any]) -> RegistrySchema:
    """Build a registry schema from its JSON object form."""
    fields = tuple(
        RegistryFieldSpec(
            id=f["id"],
            name=f.get("name", f["id"]),
            kind=f["kind"],
            categories=tuple(f.get("categories", ())),
            unit=f.get("unit"),
        )
        for f in data["fields"]
    )
    return RegistrySchema(
        registry_id=data["registry_id"],
        fields=fields,
        event_kinds=tuple(data.get("event_kinds", ())),
    )


def load_registry_schema(path: str | Path) -> RegistrySchema:
    """Read a registry schema from JSON (fields + event vocabulary)."""
    with open(path, "r", encoding="utf-8") as fh:
        return registry_schema_from_dict(json.load(fh))


def record_from_dict(data: Mapping[str, Any], schema: RegistrySchema) -> RegistryRecord:
    events = tuple(
        ClinicalEvent(e["kind"], e["date"], e.get("attributes", {}))
        for e in data.get("events", ())
    )
    return RegistryRecord(
        record_id=data["record_id"],
        schema=schema,
        fields=data.get("fields", {}),
        events=events,
    )


def load_records(path: str | Path, schema: RegistrySchema) -> list[RegistryRecord]:
    """Read registry records from a JSON file (a list of record objects)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise RegistryError("record file must hold a JSON list")
    return [record_from_dict(entry, schema) for entry in data]
