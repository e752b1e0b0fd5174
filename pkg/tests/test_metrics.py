"""Entity- and link-level precision/recall/F1."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layoutkie.heads import Entity, Link
from layoutkie.metrics import evaluate_ee, evaluate_el


def test_exact_match_arithmetic():
    # 2 matched / 3 predicted / 4 gold -> P=2/3, R=1/2, F1=4/7
    gold = [[Entity(0, (1,)), Entity(0, (2,)), Entity(1, (3, 4)), Entity(1, (5,))]]
    pred = [[Entity(0, (1,)), Entity(1, (3, 4)), Entity(1, (9,))]]
    r = evaluate_ee(pred, gold, ["a", "b"])
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == pytest.approx(1 / 2)
    assert r.f1 == pytest.approx(4 / 7)


def test_match_requires_class_and_exact_ordered_tokens():
    gold = [[Entity(0, (1, 2))]]
    assert evaluate_ee([[Entity(1, (1, 2))]], gold, ["a", "b"]).matched == 0
    assert evaluate_ee([[Entity(0, (2, 1))]], gold, ["a", "b"]).matched == 0
    assert evaluate_ee([[Entity(0, (1,))]], gold, ["a", "b"]).matched == 0
    assert evaluate_ee([[Entity(0, (1, 2))]], gold, ["a", "b"]).matched == 1


def test_relaxed_match_ignores_token_order():
    gold = [[Entity(0, (1, 2))]]
    r = evaluate_ee([[Entity(0, (2, 1))]], gold, ["a"], relaxed=True)
    assert r.matched == 1


def test_matching_is_one_to_one():
    gold = [[Entity(0, (1,))]]
    pred = [[Entity(0, (1,)), Entity(0, (1,))]]  # duplicate prediction
    r = evaluate_ee(pred, gold, ["a"])
    assert (r.matched, r.predicted, r.gold) == (1, 2, 1)


def test_empty_cases_are_zero_not_nan():
    r = evaluate_ee([[]], [[]], ["a"])
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    r = evaluate_ee([[Entity(0, (1,))]], [[]], ["a"])
    assert r.precision == 0.0 and r.recall == 0.0


def test_per_class_breakdown():
    gold = [[Entity(0, (1,)), Entity(1, (2,))]]
    pred = [[Entity(0, (1,)), Entity(1, (9,))]]
    r = evaluate_ee(pred, gold, ["a", "b"])
    assert r.per_class["a"].prf() == (1.0, 1.0, 1.0)
    assert r.per_class["b"].prf()[2] == 0.0
    d = r.to_dict()
    assert d["per_class"]["a"]["f1"] == 1.0
    assert "micro" in r.table()


def test_document_count_mismatch_raises():
    with pytest.raises(ValueError):
        evaluate_ee([[]], [[], []], ["a"])
    with pytest.raises(ValueError):
        evaluate_el([[]], [[], []])


def test_link_evaluation_is_directional():
    gold = [[Link(1, 5)]]
    assert evaluate_el([[Link(1, 5)]], gold).f1 == 1.0
    assert evaluate_el([[Link(5, 1)]], gold).f1 == 0.0


@given(st.integers(0, 20), st.integers(0, 20), st.integers(1, 20))
@settings(max_examples=100, deadline=None)
def test_f1_monotone_in_matches(extra_pred, extra_gold, matched):
    """More matches at fixed pred/gold counts never lowers F1."""
    predicted = matched + extra_pred + 1
    gold = matched + extra_gold + 1

    def f1(m):
        p, r = m / predicted, m / gold
        return 2 * p * r / (p + r) if p + r else 0.0

    assert f1(matched + 1) >= f1(matched)


def test_f1_bounds_random_instances(rng):
    for _ in range(50):
        n_gold = int(rng.integers(0, 6))
        n_pred = int(rng.integers(0, 6))
        gold = [[Entity(0, (int(i),)) for i in rng.choice(20, n_gold, replace=False)]]
        pred = [[Entity(0, (int(i),)) for i in rng.choice(20, n_pred, replace=False)]]
        r = evaluate_ee(pred, gold, ["a"])
        assert 0.0 <= r.f1 <= 1.0
        assert r.matched <= min(r.predicted, r.gold)
