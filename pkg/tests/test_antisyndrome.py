"""Level-wise antisyndrome mining against a plain set-enumeration oracle."""

import itertools

import numpy as np
import pytest

from sidekick.antisyndrome import (
    CONSISTENT,
    NOT_A,
    MiningError,
    flag_record,
    itemize_dataset,
    itemize_records,
    mine_antisyndromes,
    recognition_rule,
    verify_minimality,
)
from sidekick.dataset import LabeledDataset
from sidekick.registry import record_from_dict, registry_schema_from_dict
from sidekick.schema import FeatureVector, schema_from_dict


def planted_rows():
    """200 records: 35% one marker, 10% another, never together."""
    rows = []
    rows += [{"sex": "male", "pregnant": "no"}] * 70
    rows += [{"sex": "female", "pregnant": "no"}] * 110
    rows += [{"sex": "female", "pregnant": "yes"}] * 20
    return rows, ["person"] * len(rows)


def test_planted_pair_is_the_unique_minimal():
    rows, labels = planted_rows()
    report = mine_antisyndromes(rows, labels, "person", max_size=2)
    assert len(report.minimal) == 1
    found = report.minimal[0]
    assert frozenset(found.items) == frozenset({("sex", "male"), ("pregnant", "yes")})
    assert found.expected == pytest.approx(0.35 * 0.10, abs=1e-12)
    assert report.suspicious == ()


def test_noise_floor_gates_candidates():
    rows, labels = planted_rows()
    # expected pair count is 7; a floor above that silences the finding
    report = mine_antisyndromes(rows, labels, "person", max_size=2, min_expected=8.0)
    assert report.minimal == ()


def test_rare_but_present_pairs_are_suspicious_not_minimal():
    rows, labels = planted_rows()
    rows = rows + [{"sex": "male", "pregnant": "yes"}]
    labels = labels + ["person"]
    report = mine_antisyndromes(rows, labels, "person", max_size=2, ratio=0.2)
    assert report.minimal == ()
    assert len(report.suspicious) == 1
    sus = report.suspicious[0]
    assert frozenset(sus.items) == frozenset({("sex", "male"), ("pregnant", "yes")})
    assert sus.observed == 1
    assert sus.ratio == pytest.approx((1 / 201) / sus.expected)


def test_single_item_antisyndrome_needs_global_marginals():
    # "blue" exists only outside class A, so within-class marginals never
    # propose it; the population-wide view does
    rows = [{"color": "red"}] * 50 + [{"color": "blue"}] * 50
    labels = ["A"] * 50 + ["B"] * 50
    within = mine_antisyndromes(rows, labels, "A", max_size=1)
    assert within.minimal == ()
    broad = mine_antisyndromes(rows, labels, "A", max_size=1, global_marginals=True)
    assert [frozenset(m.items) for m in broad.minimal] == [frozenset({("color", "blue")})]


def test_verify_minimality_rejects_sets_with_absent_subsets():
    rows = [{"a": "1", "b": "1", "c": "1"}] * 10
    # ("a","2") alone is absent, so the pair with c cannot be minimal
    assert verify_minimality((("a", "2"),), rows)
    assert not verify_minimality((("a", "2"), ("c", "1")), rows)


def test_input_validation():
    with pytest.raises(MiningError):
        mine_antisyndromes([{"a": "1"}], [], "A")
    with pytest.raises(MiningError):
        mine_antisyndromes([{"a": "1"}], ["B"], "A")


def _oracle(rows, labels, class_label, max_size, ratio, min_expected, global_marginals):
    """Plain full enumeration with the same gates, no pruning tricks."""
    rows_a = [r for r, l in zip(rows, labels) if l == class_label]
    n_a = len(rows_a)
    marginal_rows = rows if global_marginals else rows_a
    from collections import Counter

    counts = Counter()
    for row in marginal_rows:
        counts.update(row.items())
    prob = {item: c / len(marginal_rows) for item, c in counts.items()}

    def support(items):
        return sum(1 for r in rows_a if all(r.get(f) == v for f, v in items))

    minimal, suspicious = set(), set()
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(sorted(prob), size):
            if len({f for f, _ in combo}) != size:
                continue
            expected = 1.0
            for item in combo:
                expected *= prob[item]
            if n_a * expected < min_expected:
                continue
            observed = support(combo)
            if observed == 0:
                if all(
                    support(sub) > 0
                    for sub in itertools.combinations(combo, size - 1)
                ):
                    minimal.add(frozenset(combo))
            elif observed / n_a <= ratio * expected:
                suspicious.add((frozenset(combo), observed))
    return minimal, suspicious


def test_miner_matches_oracle_on_random_binary_data():
    rng = np.random.default_rng(31)
    for trial in range(10):
        n_feat = int(rng.integers(3, 7))
        n_rows = int(rng.integers(30, 90))
        fields = [f"f{j}" for j in range(n_feat)]
        probs = rng.uniform(0.15, 0.85, size=n_feat)
        rows = [
            {fields[j]: ("yes" if rng.random() < probs[j] else "no") for j in range(n_feat)}
            for _ in range(n_rows)
        ]
        labels = [("A" if rng.random() < 0.7 else "B") for _ in range(n_rows)]
        if "A" not in labels:
            labels[0] = "A"
        kwargs = dict(max_size=3, ratio=0.25, min_expected=2.0,
                      global_marginals=bool(rng.integers(2)))
        report = mine_antisyndromes(rows, labels, "A", **kwargs)
        want_min, want_sus = _oracle(rows, labels, "A", **kwargs)
        assert {frozenset(m.items) for m in report.minimal} == want_min, trial
        assert {(frozenset(s.items), s.observed) for s in report.suspicious} == want_sus, trial


def test_recognition_rule_and_flags():
    rows, labels = planted_rows()
    report = mine_antisyndromes(rows, labels, "person", max_size=2)
    classify = recognition_rule(report.minimal)
    hit = classify({"sex": "male", "pregnant": "yes"})
    assert hit.verdict == NOT_A
    assert hit.matched
    miss = classify({"sex": "male", "pregnant": "no"})
    assert miss.verdict == CONSISTENT

    warnings = flag_record({"sex": "male", "pregnant": "yes"}, report.minimal)
    assert len(warnings) == 1
    assert "pregnant=yes" in warnings[0] and "sex=male" in warnings[0]
    assert flag_record({"sex": "female", "pregnant": "yes"}, report.minimal) == []


def test_itemize_dataset_discretizes_to_bands():
    schema = schema_from_dict(
        {
            "parameters": [
                {"id": "q", "name": "Q", "kind": "qualitative", "categories": ["a", "b"]},
                {"id": "v", "name": "V", "kind": "quantitative", "unit": "u",
                 "thresholds": {"a1": 1, "a2": 2, "a3": 3, "a4": 4}},
            ]
        }
    )
    ds = LabeledDataset(
        schema=schema,
        records=(
            FeatureVector.from_mapping(schema, {"q": "a", "v": 2.5}),
            FeatureVector.from_mapping(schema, {"q": "b", "v": 9.0}),
        ),
        labels=("x", "y"),
    )
    rows, labels = itemize_dataset(ds)
    assert rows == [{"q": "a", "v": "normal"}, {"q": "b", "v": "strong_high"}]
    assert labels == ["x", "y"]


def test_itemize_records_keeps_category_and_boolean_fields():
    schema = registry_schema_from_dict(
        {
            "registry_id": "r",
            "fields": [
                {"id": "stage", "name": "Stage", "kind": "category",
                 "categories": ["I", "II"]},
                {"id": "consented", "name": "Consented", "kind": "boolean"},
                {"id": "age", "name": "Age", "kind": "number"},
            ],
        }
    )
    records = [
        record_from_dict(
            {"record_id": "r1", "fields": {"stage": "II", "consented": True, "age": 61}},
            schema,
        )
    ]
    assert itemize_records(records) == [{"stage": "II", "consented": "yes"}]
