"""Closed-form kernel ridge regression on one kernel, with exact LOO shortcuts.

The same machinery serves both orientations of a label matrix: models fitted
"along rows" regress each column of the labels onto the row kernel; "along
columns" regresses each row onto the column kernel.  Dual coefficients are
always stored with one row per basis element, so prediction is uniformly
``kernel_rows @ duals``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, NumericalDegeneracyError
from .linalg import EigenSystem, shifted_inverse_apply


@dataclass(frozen=True)
class RidgeModel:
    """Fitted multi-label KRR model.

    ``duals`` has shape (kernel dimension, number of outputs); for a model
    fitted along columns the outputs are the label-matrix rows.
    """

    duals: np.ndarray
    lam: float
    basis: EigenSystem
    axis: str
    training_ids: tuple | None = None


def _check_labels(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=float)
    if labels.ndim == 1:
        labels = labels[:, None]
    if labels.ndim != 2:
        raise InvalidInputError("labels must be a vector or a 2-d matrix")
    if not np.all(np.isfinite(labels)):
        raise InvalidInputError("labels contain non-finite entries")
    return labels


def fit_multilabel(
    es: EigenSystem,
    labels,
    lam: float,
    axis: str = "rows",
    training_ids=None,
) -> RidgeModel:
    """Closed-form ridge fit of a label matrix against one kernel.

    axis="rows" solves duals = (K + lam I)^{-1} @ labels, one regression per
    label column over the row kernel; axis="columns" solves the transposed
    problem labels @ (G + lam I)^{-1}, stored transposed so that duals always
    have one row per kernel basis element.
    """
    if axis not in ("rows", "columns"):
        raise InvalidParameterError(f"axis must be 'rows' or 'columns', got {axis!r}")
    labels = _check_labels(labels)
    target = labels if axis == "rows" else labels.T
    if target.shape[0] != es.dim:
        raise InvalidInputError(
            f"label {axis} dimension {target.shape[0]} does not match "
            f"kernel dimension {es.dim}"
        )
    duals = shifted_inverse_apply(es, lam, target)
    ids = tuple(training_ids) if training_ids is not None else None
    if ids is not None and len(ids) != es.dim:
        raise InvalidInputError("training_ids length does not match kernel dimension")
    return RidgeModel(duals=duals, lam=float(lam), basis=es, axis=axis, training_ids=ids)


def loo_diagonal(es: EigenSystem, lam: float) -> np.ndarray:
    """Diagonal of (K + lam I)^{-1}, entry j in O(rank) from the eigensystem."""
    if not (np.isscalar(lam) and np.isfinite(lam) and lam > 0):
        raise InvalidParameterError(f"lambda must be a positive real, got {lam!r}")
    return (es.vectors * es.vectors) @ (1.0 / (es.values + lam))


def loo_predictions(duals, labels, inv_diagonal, axis: str) -> np.ndarray:
    """Exact leave-one-out predictions from dual coefficients in label shape.

    For axis="columns", entry (i, j) is the prediction of labels[i, j] by the
    column-axis model refitted with column j held out, computed in constant
    time as labels - duals / inv_diagonal per column (Rifkin-style identity);
    axis="rows" is the transposed statement.  ``duals`` must be the dual
    coefficient matrix oriented like ``labels`` (e.g. Y @ inv(G + lam I) for
    the column case) and ``inv_diagonal`` the matching shifted-inverse
    diagonal.  A one-sample axis has no training data left, so the prediction
    is exactly zero; a warning is emitted.
    """
    duals = np.asarray(duals, dtype=float)
    labels = _check_labels(labels)
    inv_diagonal = np.asarray(inv_diagonal, dtype=float)
    if duals.shape != labels.shape:
        raise InvalidInputError(
            f"duals shape {duals.shape} does not match labels shape {labels.shape}"
        )
    if axis not in ("rows", "columns"):
        raise InvalidParameterError(f"axis must be 'rows' or 'columns', got {axis!r}")
    size = labels.shape[1] if axis == "columns" else labels.shape[0]
    if inv_diagonal.shape != (size,):
        raise InvalidInputError(
            f"inv_diagonal must have length {size}, got {inv_diagonal.shape}"
        )
    if size == 1:
        warnings.warn(
            "leave-one-out on a single-sample axis predicts 0 (no data remains)",
            stacklevel=2,
        )
        return np.zeros_like(labels)
    if np.any(inv_diagonal <= 0) or not np.all(np.isfinite(inv_diagonal)):
        raise NumericalDegeneracyError(
            "shifted-inverse diagonal has non-positive entries; "
            "the eigensystem is too rank-deficient for the LOO identity"
        )
    if axis == "columns":
        return labels - duals / inv_diagonal[None, :]
    return labels - duals / inv_diagonal[:, None]


def predict(model: RidgeModel, kernel_rows, ids=None) -> np.ndarray:
    """Evaluate the model at new inputs given their kernel rows.

    ``kernel_rows`` has one row per query and one column per training basis
    element, in training order.  When both the model and the caller carry
    ids, they must agree.
    """
    kernel_rows = np.asarray(kernel_rows, dtype=float)
    squeeze = kernel_rows.ndim == 1
    if squeeze:
        kernel_rows = kernel_rows[None, :]
    if kernel_rows.shape[1] != model.duals.shape[0]:
        raise InvalidInputError(
            f"kernel rows have {kernel_rows.shape[1]} columns but the model "
            f"has {model.duals.shape[0]} basis elements"
        )
    if ids is not None and model.training_ids is not None:
        if tuple(ids) != model.training_ids:
            raise InvalidInputError("kernel row ids do not match training ids")
    out = kernel_rows @ model.duals
    return out[0] if squeeze else out
