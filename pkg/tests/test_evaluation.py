import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgad.core import DegenerateLabels, LengthMismatch
from cgad.evaluation import f1_point_adjusted, prc_auc, roc_auc
from oracles import brute_roc_auc


def brute_ap(labels, scores):
    order = sorted(range(len(labels)), key=lambda i: -scores[i])
    hits, total = 0, 0.0
    for k, i in enumerate(order, start=1):
        if labels[i]:
            hits += 1
            total += hits / k
    return total / sum(labels)


@pytest.mark.parametrize("labels, preds, expected", [
    ([1, 1, 0, 0], [1, 1, 0, 0], 1.0),
    ([1, 0], [0, 1], 0.0),
    ([1, 1, 1, 0], [1, 0, 0, 0], 0.5),
    ([0, 0, 0], [0, 0, 0], 1.0),
])
def test_f1(labels, preds, expected):
    assert f1_point_adjusted(labels, preds) == pytest.approx(expected)


def test_f1_length_mismatch():
    with pytest.raises(LengthMismatch):
        f1_point_adjusted([1, 0], [1])


def test_roc_examples():
    assert roc_auc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0
    assert roc_auc([1, 0, 1, 0], [0.5] * 4) == 0.5
    assert roc_auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.1]) == 0.75
    with pytest.raises(DegenerateLabels):
        roc_auc([1, 1], [0.1, 0.2])


def test_prc_examples():
    assert prc_auc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0
    assert prc_auc([1, 0], [0.1, 0.9]) == 0.5
    assert prc_auc([1, 1, 0, 0], [0.9, 0.4, 0.8, 0.1]) == pytest.approx((1 + 2 / 3) / 2)
    assert prc_auc([1, 1, 0, 0], [0.9, 0.4, 0.8, 0.1]) == pytest.approx(brute_ap([1, 1, 0, 0], [0.9, 0.4, 0.8, 0.1]))
    with pytest.raises(DegenerateLabels):
        prc_auc([0, 0], [0.1, 0.2])


labeled = st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(-3, 3), min_size=n, max_size=n)))


@settings(max_examples=300, deadline=None)
@given(labeled)
def test_roc_matches_pairwise(case):
    labels, scores = case
    if len(set(labels)) < 2:
        return
    assert roc_auc(labels, scores) == pytest.approx(brute_roc_auc(labels, scores), abs=1e-12)
    # strictly increasing transform
    assert roc_auc(labels, [np.exp(s) for s in scores]) == pytest.approx(roc_auc(labels, scores))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_roc_complement_without_ties(n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    if len(set(labels)) < 2:
        return
    scores = rng.permutation(n).astype(float)
    assert roc_auc(labels, scores) + roc_auc(labels, -scores) == pytest.approx(1.0)
    assert prc_auc(labels, scores) == pytest.approx(prc_auc(labels, 3 * scores + 1))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=20), st.integers(0, 1000))
def test_f1_permutation_invariant(pairs, seed):
    labels, preds = map(list, zip(*pairs))
    perm = np.random.default_rng(seed).permutation(len(pairs))
    assert f1_point_adjusted(labels, preds) == pytest.approx(
        f1_point_adjusted([labels[i] for i in perm], [preds[i] for i in perm]))
    assert 0.0 <= f1_point_adjusted(labels, preds) <= 1.0
