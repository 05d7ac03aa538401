"""Data-driven possible-error rules over registry records.

Rules are configuration, not code: each is a conjunction of predicates over
record fields and clinical events.  Fired rules surface in the follow-up
summary's possible-errors section with a likelihood note; they are advisory
by definition and can never be interruptive.  Referencing a field or event
kind missing from the registry schema fails at load time, not at runtime.

Predicate grammar (JSON):
  {"kind": "field",        "field": id, "op": OP, "value": x}
      OP in eq ne gt ge lt le contains present absent
  {"kind": "event_exists", "event": kind, "where": {attr: value}?}
  {"kind": "event_absent", "event": kind}
  {"kind": "event_order",  "first": kindA, "then": kindB}
      true when some A-event is dated strictly before some B-event
  {"kind": "time_gap",     "first": kindA, "then": kindB, "op": OP, "days": n}
      gap in days between the earliest A and earliest B (OP in gt ge lt le)
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .config import ConfigError
from .registry import (
    ClinicalEvent,
    DateParseError,
    RegistryRecord,
    RegistrySchema,
)

logger = logging.getLogger(__name__)

_FIELD_OPS = ("eq", "ne", "gt", "ge", "lt", "le", "contains", "present", "absent")
_GAP_OPS = ("gt", "ge", "lt", "le")


@dataclass(frozen=True)
class RuleDef:
    """One advisory rule: all conditions must hold for it to fire."""

    rule_id: str
    conditions: tuple[Mapping[str, Any], ...]
    message: str
    likelihood_note: str = ""
    interruptive: bool = False

    def __post_init__(self) -> None:
        if self.interruptive:
            raise ConfigError(
                f"rule {self.rule_id!r}: possible-error rules are never interruptive"
            )
        if not self.conditions:
            raise ConfigError(f"rule {self.rule_id!r} has no conditions")

    def fields_involved(self) -> tuple[str, ...]:
        return tuple(
            c["field"] for c in self.conditions if c.get("kind") == "field"
        )


@dataclass(frozen=True)
class PossibleError:
    rule_id: str
    message: str
    likelihood_note: str


def _check_condition(cond: Mapping[str, Any], schema: RegistrySchema, rule_id: str) -> None:
    kind = cond.get("kind")
    if kind == "field":
        if cond.get("op") not in _FIELD_OPS:
            raise ConfigError(f"rule {rule_id!r}: unknown field op {cond.get('op')!r}")
        schema.field_spec(cond["field"])  # raises on unknown field
    elif kind in ("event_exists", "event_absent"):
        if cond["event"] not in schema.event_kinds:
            raise ConfigError(f"rule {rule_id!r}: unknown event kind {cond['event']!r}")
    elif kind in ("event_order", "time_gap"):
        for key in ("first", "then"):
            if cond[key] not in schema.event_kinds:
                raise ConfigError(f"rule {rule_id!r}: unknown event kind {cond[key]!r}")
        if kind == "time_gap" and cond.get("op") not in _GAP_OPS:
            raise ConfigError(f"rule {rule_id!r}: unknown gap op {cond.get('op')!r}")
    else:
        raise ConfigError(f"rule {rule_id!r}: unknown condition kind {kind!r}")


def rule_from_dict(entry: Mapping[str, Any], schema: RegistrySchema) -> RuleDef:
    """Build and validate one rule definition against the registry schema."""
    rule = RuleDef(
        rule_id=entry["id"],
        conditions=tuple(entry["conditions"]),
        message=entry["message"],
        likelihood_note=entry.get("likelihood_note", ""),
        interruptive=bool(entry.get("interruptive", False)),
    )
    for cond in rule.conditions:
        _check_condition(cond, schema, rule.rule_id)
    return rule


def load_rules(path: str | Path, schema: RegistrySchema) -> list[RuleDef]:
    """Read and validate a JSON rule file against the registry schema."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ConfigError(f"{path}: rule file must hold a JSON list")
    return [rule_from_dict(entry, schema) for entry in data]


def _field_holds(cond: Mapping[str, Any], record: RegistryRecord) -> bool:
    op = cond["op"]
    present = cond["field"] in record.fields
    if op == "present":
        return present
    if op == "absent":
        return not present
    if not present:
        return False
    value = record.fields[cond["field"]]
    target = cond.get("value")
    if op == "eq":
        return value == target
    if op == "ne":
        return value != target
    if op == "contains":
        return isinstance(value, str) and str(target) in value
    try:
        if op == "gt":
            return value > target
        if op == "ge":
            return value >= target
        if op == "lt":
            return value < target
        if op == "le":
            return value <= target
    except TypeError:
        return False
    return False


def _dated_events(
    record: RegistryRecord, kind: str, conventions: Optional[Mapping[str, str]]
) -> list[tuple[Any, ClinicalEvent]]:
    out = []
    for event in record.events:
        if event.kind != kind:
            continue
        try:
            out.append((event.date(conventions), event))
        except DateParseError:
            continue  # chronology surfaces the parse problem separately
    return out


def _condition_holds(
    cond: Mapping[str, Any],
    record: RegistryRecord,
    conventions: Optional[Mapping[str, str]],
) -> bool:
    kind = cond["kind"]
    if kind == "field":
        return _field_holds(cond, record)
    if kind == "event_exists":
        where = cond.get("where", {})
        return any(
            e.kind == cond["event"]
            and all(e.attributes.get(k) == v for k, v in where.items())
            for e in record.events
        )
    if kind == "event_absent":
        return all(e.kind != cond["event"] for e in record.events)
    if kind == "event_order":
        firsts = _dated_events(record, cond["first"], conventions)
        thens = _dated_events(record, cond["then"], conventions)
        return any(a < b for a, _ in firsts for b, _ in thens)
    if kind == "time_gap":
        firsts = _dated_events(record, cond["first"], conventions)
        thens = _dated_events(record, cond["then"], conventions)
        if not firsts or not thens:
            return False
        gap = (min(d for d, _ in thens) - min(d for d, _ in firsts)).days
        op, days = cond["op"], cond["days"]
        return (
            gap > days if op == "gt"
            else gap >= days if op == "ge"
            else gap < days if op == "lt"
            else gap <= days
        )
    raise ConfigError(f"unknown condition kind {kind!r}")


class _MissingAsBlank(dict):
    def __missing__(self, key: str) -> str:
        return ""


def evaluate_rules(
    record: RegistryRecord,
    rules: Sequence[RuleDef],
    conventions: Optional[Mapping[str, str]] = None,
) -> list[PossibleError]:
    """All fired rules, in rule order, rendered with the record's fields."""
    fired = []
    for rule in rules:
        if all(_condition_holds(c, record, conventions) for c in rule.conditions):
            message = rule.message.format_map(_MissingAsBlank(record.fields))
            fired.append(PossibleError(rule.rule_id, message, rule.likelihood_note))
            logger.debug("rule %s fired on record %s", rule.rule_id, record.record_id)
    return fired
