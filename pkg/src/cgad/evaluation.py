"""Segment-level detection metrics."""

from __future__ import annotations

import numpy as np

from .core import DegenerateLabels, LengthMismatch


def _as_binary(values, name):
    arr = np.asarray(values, dtype=int)
    if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must be a 1-D sequence of 0/1")
    return arr


def f1_point_adjusted(labels, predictions) -> float:
    """F1 over segments whose labels were already point-adjusted at segmentation.

    Returns 1.0 when there are neither positive labels nor positive predictions.
    """
    y = _as_binary(labels, "labels")
    yhat = _as_binary(predictions, "predictions")
    if y.shape != yhat.shape:
        raise LengthMismatch(f"{y.size} labels vs {yhat.size} predictions")
    tp = int(np.sum((y == 1) & (yhat == 1)))
    fp = int(np.sum((y == 0) & (yhat == 1)))
    fn = int(np.sum((y == 1) & (yhat == 0)))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def roc_auc(labels, scores) -> float:
    """Probability a random positive outranks a random negative; ties count 1/2.

    Computed from midranks (Mann-Whitney U), O(N log N).
    """
    y = _as_binary(labels, "labels")
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.size} labels vs {s.size} scores")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ROC-AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(s.size)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def prc_auc(labels, scores) -> float:
    """Average precision: mean of precision@k over the ranks k holding a positive.

    Items are ranked by descending score; equal scores keep their input order.
    """
    y = _as_binary(labels, "labels")
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.size} labels vs {s.size} scores")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateLabels("PRC-AUC needs at least one positive")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    precision_at_k = np.cumsum(hits) / np.arange(1, y.size + 1)
    return float(precision_at_k[hits == 1].sum() / n_pos)
