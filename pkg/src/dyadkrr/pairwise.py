"""Pairwise KRR with the tensor-product kernel on complete training sets.

The nm-by-nm system (Gamma + lambda I) alpha = vec(Y) with Gamma = G kron K is
never materialized: both kernels are eigendecomposed once, the label matrix is
rotated into the joint eigenbasis, and the coefficients are scaled elementwise
by the inverted joint spectrum.  Dual vectors are stored as n-by-m matrices in
the same (object, task) layout as the labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, NumericalDegeneracyError
from .linalg import EigenSystem, shifted_inverse_apply


@dataclass(frozen=True)
class PairwiseModel:
    """Dual matrix (the unvec of alpha) plus the eigensystems used to fit it."""

    dual_matrix: np.ndarray
    object_eigen: EigenSystem
    task_eigen: EigenSystem
    variant: str
    lam: float = 0.0
    lambda_d: float | None = None
    lambda_t: float | None = None


def _check_labels(object_eigen: EigenSystem, task_eigen: EigenSystem, labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=float)
    if labels.ndim != 2:
        raise InvalidInputError("labels must be a 2-d matrix")
    if not np.all(np.isfinite(labels)):
        raise InvalidInputError(
            "pairwise training requires a complete, finite label matrix"
        )
    if labels.shape != (object_eigen.dim, task_eigen.dim):
        raise InvalidInputError(
            f"labels shape {labels.shape} does not match kernels "
            f"({object_eigen.dim} objects, {task_eigen.dim} tasks)"
        )
    return labels


def fit_pairwise_tikhonov(
    object_eigen: EigenSystem, task_eigen: EigenSystem, labels, lam: float
) -> PairwiseModel:
    """Solve (G kron K + lam I) alpha = vec(Y) through the factor eigensystems.

    Cost is dominated by the decompositions, so fitting scales with n^3 + m^3
    rather than (nm)^3.
    """
    if not (np.isscalar(lam) and np.isfinite(lam) and lam > 0):
        raise InvalidParameterError(f"lambda must be a positive real, got {lam!r}")
    labels = _check_labels(object_eigen, task_eigen, labels)
    coeff = object_eigen.vectors.T @ labels @ task_eigen.vectors
    denom = np.outer(object_eigen.values, task_eigen.values) + lam
    dual = object_eigen.vectors @ (coeff / denom) @ task_eigen.vectors.T
    return PairwiseModel(
        dual_matrix=dual,
        object_eigen=object_eigen,
        task_eigen=task_eigen,
        variant="tikhonov",
        lam=float(lam),
    )


def fit_pairwise_two_step_ols(
    object_eigen: EigenSystem,
    task_eigen: EigenSystem,
    labels,
    lambda_d: float,
    lambda_t: float,
) -> PairwiseModel:
    """Ordinary least squares with the delta-shifted pairwise kernel.

    The shifts make the pair kernel matrix (G + lambda_t I) kron (K +
    lambda_d I) invertible, so the dual matrix is simply
    (K + lambda_d I)^{-1} Y (G + lambda_t I)^{-1} -- the same coefficients the
    two-step method produces on a full cold start.
    """
    labels = _check_labels(object_eigen, task_eigen, labels)
    left = shifted_inverse_apply(object_eigen, lambda_d, labels)
    dual = shifted_inverse_apply(task_eigen, lambda_t, left.T).T
    return PairwiseModel(
        dual_matrix=dual,
        object_eigen=object_eigen,
        task_eigen=task_eigen,
        variant="two_step_ols",
        lam=0.0,
        lambda_d=float(lambda_d),
        lambda_t=float(lambda_t),
    )


def predict_pair(model: PairwiseModel, object_kernel_row, task_kernel_row) -> float:
    """Prediction for one object-task pair: k.T @ dual @ g.

    For the two_step_ols variant the kernel rows of a query that coincides
    with a training object/task must include the delta shift (add lambda_d or
    lambda_t at the matching coordinate); unseen queries need no adjustment.
    """
    k = np.asarray(object_kernel_row, dtype=float).reshape(-1)
    g = np.asarray(task_kernel_row, dtype=float).reshape(-1)
    n, m = model.dual_matrix.shape
    if k.shape[0] != n:
        raise InvalidInputError(f"object kernel row has length {k.shape[0]}, expected {n}")
    if g.shape[0] != m:
        raise InvalidInputError(f"task kernel row has length {g.shape[0]}, expected {m}")
    return float(k @ model.dual_matrix @ g)


def predict_grid(model: PairwiseModel, object_kernel_rows, task_kernel_rows) -> np.ndarray:
    """Predictions for the full grid of query objects times query tasks."""
    rows = np.asarray(object_kernel_rows, dtype=float)
    cols = np.asarray(task_kernel_rows, dtype=float)
    if rows.ndim != 2 or cols.ndim != 2:
        raise InvalidInputError("kernel rows must be 2-d (queries x training)")
    n, m = model.dual_matrix.shape
    if rows.shape[1] != n or cols.shape[1] != m:
        raise InvalidInputError(
            f"kernel rows {rows.shape}/{cols.shape} do not match model size ({n}, {m})"
        )
    return rows @ model.dual_matrix @ cols.T


def loo_pair_predictions(
    object_eigen: EigenSystem, task_eigen: EigenSystem, labels, lam: float
) -> np.ndarray:
    """Exact leave-one-pair-out predictions of the Tikhonov pairwise model.

    Uses the hat-matrix identity: with H the diagonal of
    Gamma (Gamma + lam I)^{-1} in pair space, the held-out prediction for pair
    (i, j) is (fitted - H * y) / (1 - H).  H factorizes over the two
    eigensystems, so everything is O(n^2 m + n m^2).
    """
    if not (np.isscalar(lam) and np.isfinite(lam) and lam > 0):
        raise InvalidParameterError(f"lambda must be a positive real, got {lam!r}")
    labels = _check_labels(object_eigen, task_eigen, labels)
    coeff = object_eigen.vectors.T @ labels @ task_eigen.vectors
    joint = np.outer(object_eigen.values, task_eigen.values)
    shrink = joint / (joint + lam)
    fitted = object_eigen.vectors @ (coeff * shrink) @ task_eigen.vectors.T
    hat = (object_eigen.vectors**2) @ shrink @ (task_eigen.vectors**2).T
    residual_scale = 1.0 - hat
    if np.any(residual_scale <= 1e-12):
        raise NumericalDegeneracyError(
            "a pair has leverage 1; leave-one-pair-out is undefined"
        )
    return (fitted - hat * labels) / residual_scale
