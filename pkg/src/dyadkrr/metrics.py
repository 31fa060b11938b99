"""Ranking metrics."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, UndefinedMetricError


def c_index(true_labels, predicted) -> float:
    """Concordance index (pairwise ranking accuracy) in [0, 1].

    Over all pairs (i, j) with true_labels[i] > true_labels[j], counts 1 for a
    correctly ordered prediction, 0.5 for a predicted tie and 0 otherwise.
    Pairs with tied true labels are excluded from both numerator and
    denominator; 0.5 is chance level.
    """
    y = np.asarray(true_labels, dtype=float).reshape(-1)
    f = np.asarray(predicted, dtype=float).reshape(-1)
    if y.shape != f.shape:
        raise InvalidInputError(
            f"label/prediction length mismatch: {y.shape[0]} vs {f.shape[0]}"
        )
    if y.shape[0] < 2:
        raise InvalidInputError("c_index needs at least two observations")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
        raise InvalidInputError("c_index inputs must be finite")
    # i ranges over the higher-labeled member of each pair
    greater = y[:, None] > y[None, :]
    total = int(np.count_nonzero(greater))
    if total == 0:
        raise UndefinedMetricError("all true labels are equal; c_index is undefined")
    diff = f[:, None] - f[None, :]
    score = np.sum(np.where(diff > 0, 1.0, 0.0)[greater]) + 0.5 * np.count_nonzero(
        diff[greater] == 0.0
    )
    return float(score / total)


def mean_slice_c_index(truth, predicted, axis: str) -> float:
    """Mean concordance over the columns (axis="columns") or rows of a matrix.

    Slices whose true labels are all tied carry no ranking information and are
    skipped; if every slice is tied the metric is undefined.
    """
    truth = np.asarray(truth, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if truth.shape != predicted.shape or truth.ndim != 2:
        raise InvalidInputError("truth and predictions must be matrices of equal shape")
    if axis not in ("rows", "columns"):
        raise InvalidInputError(f"axis must be 'rows' or 'columns', got {axis!r}")
    if axis == "rows":
        truth, predicted = truth.T, predicted.T
    scores = []
    for j in range(truth.shape[1]):
        col = truth[:, j]
        if col.shape[0] < 2 or np.all(col == col[0]):
            continue
        scores.append(c_index(col, predicted[:, j]))
    if not scores:
        raise UndefinedMetricError(
            "every slice has tied labels; mean c-index is undefined"
        )
    return float(np.mean(scores))
