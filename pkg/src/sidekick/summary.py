"""Follow-up summaries: key fields, chronology, and possible errors.

A summary condenses a sprawling registry record into three reviewable
sections: selected fields verbatim (highlighted when they fed a fired
rule), a date-sorted chronology with order-anomaly flags, and the advisory
possible-errors list.  Generation is a pure function of the record, the
rule set, and the layout — the same inputs always render the same summary.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from .registry import (
    ClinicalEvent,
    DateParseError,
    RegistryRecord,
    parse_date,
)
from .rules import PossibleError, RuleDef, evaluate_rules

PLAIN = "plain"
HIGHLIGHT = "highlight"


@dataclass(frozen=True)
class KeyField:
    field_id: str
    rendered: str
    emphasis: str = PLAIN


@dataclass(frozen=True)
class ChronologyEntry:
    kind: str
    date: dt.date
    attributes: Mapping[str, Any]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExcludedEvent:
    kind: str
    date_text: str
    flag: str


@dataclass(frozen=True)
class Chronology:
    entries: tuple[ChronologyEntry, ...]
    excluded: tuple[ExcludedEvent, ...]

    @property
    def flags(self) -> tuple[str, ...]:
        out = [f for e in self.entries for f in e.flags]
        out.extend(e.flag for e in self.excluded)
        return tuple(out)


@dataclass(frozen=True)
class FollowUpSummary:
    record_id: str
    key_fields: tuple[KeyField, ...]
    chronology: Chronology
    possible_errors: tuple[PossibleError, ...]


def build_chronology(
    events: Sequence[ClinicalEvent],
    conventions: Optional[Mapping[str, str]] = None,
    canonical_order: Sequence[str] = (),
    required_predecessors: Optional[Mapping[str, str]] = None,
) -> Chronology:
    """Sort events by date and flag suspicious orderings.

    Events whose dates cannot be parsed (or are ambiguous) are excluded
    from the timeline, each with a diagnostic.  Two anomaly checks run on
    the parsed timeline: a pair of event kinds dated against the canonical
    clinical order (the flag attaches to the later-dated event), and an
    event whose required predecessor kind never appears in the record.
    """
    parsed: list[tuple[dt.date, ClinicalEvent]] = []
    excluded: list[ExcludedEvent] = []
    for event in events:
        try:
            parsed.append((parse_date(event.date_text, conventions), event))
        except DateParseError as exc:
            excluded.append(ExcludedEvent(event.kind, event.date_text, str(exc)))

    parsed.sort(key=lambda pair: pair[0])
    rank = {kind: i for i, kind in enumerate(canonical_order)}
    first_date: dict[str, dt.date] = {}
    for date, event in parsed:
        first_date.setdefault(event.kind, date)

    flags_by_index: dict[int, list[str]] = {}

    # canonical-order violations: kind A should precede kind B, but B is dated first
    for a_kind, a_rank in rank.items():
        for b_kind, b_rank in rank.items():
            if a_rank >= b_rank or a_kind not in first_date or b_kind not in first_date:
                continue
            if first_date[b_kind] < first_date[a_kind]:
                # attach to the later-dated event of the violating pair
                for i, (date, event) in enumerate(parsed):
                    if event.kind == a_kind and date == first_date[a_kind]:
                        flags_by_index.setdefault(i, []).append(
                            f"{b_kind} is dated before {a_kind}, which contradicts "
                            f"the expected clinical order"
                        )
                        break

    present_kinds = {event.kind for _, event in parsed}
    for i, (date, event) in enumerate(parsed):
        predecessor = (required_predecessors or {}).get(event.kind)
        if predecessor and predecessor not in present_kinds:
            flags_by_index.setdefault(i, []).append(
                f"{event.kind} recorded without any documented {predecessor}"
            )

    entries = tuple(
        ChronologyEntry(
            kind=event.kind,
            date=date,
            attributes=dict(event.attributes),
            flags=tuple(flags_by_index.get(i, ())),
        )
        for i, (date, event) in enumerate(parsed)
    )
    return Chronology(entries=entries, excluded=tuple(excluded))


def _render_field(record: RegistryRecord, field_id: str,
                  conventions: Optional[Mapping[str, str]]) -> str:
    value = record.fields[field_id]
    spec = record.schema.field_spec(field_id)
    if spec.kind == "date" and isinstance(value, str):
        try:
            return parse_date(value, conventions).isoformat()
        except DateParseError:
            return value
    if spec.kind == "number" and spec.unit:
        return f"{value:g} {spec.unit}"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def generate_summary(
    record: RegistryRecord,
    rules: Sequence[RuleDef],
    layout: Sequence[str],
    conventions: Optional[Mapping[str, str]] = None,
    canonical_order: Sequence[str] = (),
    required_predecessors: Optional[Mapping[str, str]] = None,
) -> FollowUpSummary:
    """Render the three summary sections for one record.

    *layout* is the ordered list of field ids shown in the key-fields
    section; fields referenced by fired rules are highlighted.
    """
    for field_id in layout:
        record.schema.field_spec(field_id)

    fired = evaluate_rules(record, rules, conventions)
    fired_ids = {r.rule_id for r in fired}
    hot_fields = {
        f
        for rule in rules
        if rule.rule_id in fired_ids
        for f in rule.fields_involved()
    }

    key_fields = tuple(
        KeyField(
            field_id=fid,
            rendered=_render_field(record, fid, conventions),
            emphasis=HIGHLIGHT if fid in hot_fields else PLAIN,
        )
        for fid in layout
        if fid in record.fields
    )
    chronology = build_chronology(
        record.events, conventions, canonical_order, required_predecessors
    )
    return FollowUpSummary(
        record_id=record.record_id,
        key_fields=key_fields,
        chronology=chronology,
        possible_errors=tuple(fired),
    )


def render_text(summary: FollowUpSummary) -> str:
    """Plain-text layout of the three sections, for terminal review."""
    lines = [f"Follow-up summary for record {summary.record_id}", ""]
    lines.append("Key fields")
    lines.append("----------")
    for kf in summary.key_fields:
        marker = " **" if kf.emphasis == HIGHLIGHT else ""
        lines.append(f"  {kf.field_id}: {kf.rendered}{marker}")
    lines.append("")
    lines.append("Chronology")
    lines.append("----------")
    for entry in summary.chronology.entries:
        attrs = ", ".join(f"{k}={v}" for k, v in sorted(entry.attributes.items()))
        suffix = f" ({attrs})" if attrs else ""
        lines.append(f"  {entry.date.isoformat()}  {entry.kind}{suffix}")
        for flag in entry.flags:
            lines.append(f"      ! {flag}")
    for ex in summary.chronology.excluded:
        lines.append(f"  [no date]  {ex.kind}: {ex.flag}")
    lines.append("")
    lines.append("Possible errors")
    lines.append("---------------")
    if not summary.possible_errors:
        lines.append("  none")
    for err in summary.possible_errors:
        note = f" [{err.likelihood_note}]" if err.likelihood_note else ""
        lines.append(f"  {err.rule_id}: {err.message}{note}")
    return "\n".join(lines) + "\n"
