"""Data-driven possible-error rules over registry records."""

import json

import pytest

from sidekick.registry import RegistryError, record_from_dict, registry_schema_from_dict
from sidekick.rules import ConfigError, evaluate_rules, load_rules, rule_from_dict

SCHEMA = registry_schema_from_dict(
    {
        "registry_id": "onco",
        "fields": [
            {"id": "tumor_size_cm", "name": "Tumor size", "kind": "number", "unit": "cm"},
            {"id": "margin", "name": "Margin", "kind": "category",
             "categories": ["negative", "positive"]},
            {"id": "note", "name": "Note", "kind": "text"},
        ],
        "event_kinds": ["diagnosis", "excision", "relapse", "second_excision"],
    }
)


def record(fields=None, events=()):
    return record_from_dict(
        {"record_id": "r1", "fields": fields or {}, "events": list(events)},
        SCHEMA,
    )


def rule(conditions, rule_id="r", message="msg {tumor_size_cm}"):
    return rule_from_dict(
        {
            "id": rule_id,
            "conditions": conditions,
            "message": message,
            "likelihood_note": "likely but not certain",
        },
        SCHEMA,
    )


def test_field_predicates():
    r = record(fields={"tumor_size_cm": 2.2, "margin": "positive"})
    assert evaluate_rules(r, [rule([{"kind": "field", "field": "tumor_size_cm", "op": "gt", "value": 2.0}])])
    assert evaluate_rules(r, [rule([{"kind": "field", "field": "margin", "op": "eq", "value": "positive"}])])
    assert not evaluate_rules(r, [rule([{"kind": "field", "field": "margin", "op": "ne", "value": "positive"}])])
    assert evaluate_rules(r, [rule([{"kind": "field", "field": "note", "op": "absent"}])])
    assert not evaluate_rules(r, [rule([{"kind": "field", "field": "note", "op": "present"}])])
    assert not evaluate_rules(r, [rule([{"kind": "field", "field": "tumor_size_cm", "op": "lt", "value": 2.0}])])


def test_contains_predicate():
    r = record(fields={"note": "recurrent disease suspected"})
    assert evaluate_rules(r, [rule([{"kind": "field", "field": "note", "op": "contains", "value": "recurrent"}])])
    assert not evaluate_rules(r, [rule([{"kind": "field", "field": "note", "op": "contains", "value": "benign"}])])


def test_event_exists_and_absent():
    r = record(events=[{"kind": "excision", "date": "2009-03-04", "attributes": {"site": "breast"}}])
    assert evaluate_rules(r, [rule([{"kind": "event_exists", "event": "excision"}])])
    assert evaluate_rules(r, [rule([{"kind": "event_exists", "event": "excision",
                                     "where": {"site": "breast"}}])])
    assert not evaluate_rules(r, [rule([{"kind": "event_exists", "event": "excision",
                                         "where": {"site": "lung"}}])])
    assert evaluate_rules(r, [rule([{"kind": "event_absent", "event": "relapse"}])])


def test_event_order_predicate():
    r = record(events=[
        {"kind": "excision", "date": "2009-03-04"},
        {"kind": "relapse", "date": "2009-06-12"},
    ])
    assert evaluate_rules(r, [rule([{"kind": "event_order", "first": "excision", "then": "relapse"}])])
    assert not evaluate_rules(r, [rule([{"kind": "event_order", "first": "relapse", "then": "excision"}])])


def test_time_gap_predicate():
    r = record(events=[
        {"kind": "excision", "date": "2009-01-01"},
        {"kind": "second_excision", "date": "2009-09-01"},
    ])
    gap = [{"kind": "time_gap", "first": "excision", "then": "second_excision",
            "op": "gt", "days": 30}]
    assert evaluate_rules(r, [rule(gap)])
    short = [{"kind": "time_gap", "first": "excision", "then": "second_excision",
              "op": "lt", "days": 30}]
    assert not evaluate_rules(r, [rule(short)])


def test_conjunction_requires_all_conditions():
    r = record(fields={"tumor_size_cm": 2.2},
               events=[{"kind": "excision", "date": "2009-03-04"}])
    both = rule([
        {"kind": "field", "field": "tumor_size_cm", "op": "gt", "value": 2.0},
        {"kind": "event_absent", "event": "relapse"},
    ])
    assert evaluate_rules(r, [both])
    with_relapse = record(fields={"tumor_size_cm": 2.2},
                          events=[{"kind": "relapse", "date": "2009-06-12"}])
    assert not evaluate_rules(with_relapse, [both])


def test_message_interpolates_fields():
    r = record(fields={"tumor_size_cm": 2.2})
    fired = evaluate_rules(r, [rule(
        [{"kind": "field", "field": "tumor_size_cm", "op": "gt", "value": 2.0}],
        message="size {tumor_size_cm} cm exceeds the threshold",
    )])
    assert fired[0].message == "size 2.2 cm exceeds the threshold"
    assert fired[0].likelihood_note == "likely but not certain"


def test_rule_validation_rejects_unknown_references():
    with pytest.raises(RegistryError):
        rule([{"kind": "field", "field": "bogus", "op": "present"}])
    with pytest.raises(ConfigError):
        rule([{"kind": "event_exists", "event": "martian-visit"}])
    with pytest.raises(ConfigError):
        rule([{"kind": "field", "field": "note", "op": "resembles", "value": "x"}])
    with pytest.raises(ConfigError):
        rule([{"kind": "time_gap", "first": "excision", "then": "relapse",
               "op": "within", "days": 30}])
    with pytest.raises(ConfigError):
        rule([{"kind": "sorcery"}])


def test_fields_involved_lists_only_field_conditions():
    r = rule([
        {"kind": "field", "field": "margin", "op": "eq", "value": "positive"},
        {"kind": "event_absent", "event": "relapse"},
    ])
    assert r.fields_involved() == ("margin",)


def test_load_rules_from_file(tmp_path):
    path = tmp_path / "rules.json"
    path.write_text(json.dumps([
        {
            "id": "missing-relapse",
            "conditions": [
                {"kind": "event_exists", "event": "second_excision"},
                {"kind": "event_absent", "event": "relapse"},
            ],
            "message": "re-excision without documented relapse",
            "likelihood_note": "likely documentation gap",
        }
    ]))
    rules = load_rules(path, SCHEMA)
    assert len(rules) == 1 and rules[0].rule_id == "missing-relapse"
