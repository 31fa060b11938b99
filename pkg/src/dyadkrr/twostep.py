"""Two-step kernel ridge regression for full and almost-full cold start.

Step one fits a multi-label ridge model over the auxiliary tasks and uses it
to impute target labels for objects the target task has not labeled; step two
fits a single-task ridge model on the completed target vector.  Model
selection runs two independent grid searches driven by exact leave-column-out
and leave-row-out shortcuts, so no model is ever refitted during CV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidParameterError,
    NumericalDegeneracyError,
)
from .linalg import EigenSystem, shifted_inverse_apply
from .metrics import mean_slice_c_index
from .ridge import loo_diagonal, loo_predictions

# 15 logarithmically spaced candidates spanning 1e-6 .. 1e6.
DEFAULT_GRID = tuple(np.logspace(-6.0, 6.0, 15))

ERROR_METRICS = ("mse", "cindex")


@dataclass(frozen=True)
class ColdStartProblem:
    """A target task with complete auxiliary labels and (maybe) a few of its own.

    ``labels`` is the complete n-by-m auxiliary label matrix;
    ``target_task_kernel`` holds the m kernel evaluations between the target
    task and each auxiliary task; ``labeled_mask`` marks the objects labeled
    for the target task and ``labeled_values`` their labels, in object order.
    Full cold start is an all-false mask.
    """

    object_eigen: EigenSystem
    task_eigen: EigenSystem
    labels: np.ndarray
    target_task_kernel: np.ndarray
    labeled_mask: np.ndarray = None
    labeled_values: np.ndarray = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=float)
        if labels.ndim != 2:
            raise InvalidInputError("labels must be a 2-d matrix")
        if not np.all(np.isfinite(labels)):
            raise InvalidInputError(
                "auxiliary labels must be complete; impute missing entries "
                "first (see dataio.mean_impute)"
            )
        n, m = labels.shape
        if self.object_eigen.dim != n:
            raise InvalidInputError(
                f"object eigensystem dimension {self.object_eigen.dim} != {n} label rows"
            )
        if self.task_eigen.dim != m:
            raise InvalidInputError(
                f"task eigensystem dimension {self.task_eigen.dim} != {m} label columns"
            )
        g = np.asarray(self.target_task_kernel, dtype=float).reshape(-1)
        if g.shape != (m,) or not np.all(np.isfinite(g)):
            raise InvalidInputError(f"target task kernel must be a finite vector of length {m}")
        mask = self.labeled_mask
        mask = np.zeros(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != (n,):
            raise InvalidInputError(f"labeled mask must have length {n}")
        z_l = self.labeled_values
        z_l = np.zeros(0) if z_l is None else np.asarray(z_l, dtype=float).reshape(-1)
        if z_l.shape[0] != int(mask.sum()):
            raise InvalidInputError(
                f"{z_l.shape[0]} labeled values for {int(mask.sum())} masked objects"
            )
        if not np.all(np.isfinite(z_l)):
            raise InvalidInputError("labeled target values must be finite")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "target_task_kernel", g)
        object.__setattr__(self, "labeled_mask", mask)
        object.__setattr__(self, "labeled_values", z_l)

    @property
    def n_objects(self) -> int:
        return self.labels.shape[0]

    @property
    def n_tasks(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class TwoStepModel:
    """First-step dual matrix, completed target labels, second-step duals."""

    first_step_duals: np.ndarray
    second_step_duals: np.ndarray
    lambda_t: float
    lambda_d: float
    imputed_labels: np.ndarray


@dataclass(frozen=True)
class SelectionReport:
    """Outcome of the two LOO grid searches."""

    chosen_lambda_t: float
    chosen_lambda_d: float
    loo_matrix_step1: np.ndarray
    loo_matrix_step2: np.ndarray
    error_step1: float
    error_step2: float
    grid_lambda_t: tuple
    grid_lambda_d: tuple
    error_metric: str = "mse"

    @property
    def grid(self) -> tuple:
        return self.grid_lambda_t


def _check_lambdas(lambda_t, lambda_d):
    for name, value in (("lambda_t", lambda_t), ("lambda_d", lambda_d)):
        if not (np.isscalar(value) and np.isfinite(value) and value > 0):
            raise InvalidParameterError(f"{name} must be a positive real, got {value!r}")


def first_step_duals(task_eigen: EigenSystem, labels, lambda_t: float) -> np.ndarray:
    """Multi-label dual matrix C = Y (G + lambda_t I)^{-1} of the first step.

    Depends only on the auxiliary data, so it can be reused across target
    tasks fitted with the same lambda_t.  Multiplication order keeps the cost
    at O(n m r) and the result contiguous.
    """
    if not (np.isscalar(lambda_t) and np.isfinite(lambda_t) and lambda_t > 0):
        raise InvalidParameterError(f"lambda_t must be a positive real, got {lambda_t!r}")
    labels = np.asarray(labels, dtype=float)
    if labels.shape[1] != task_eigen.dim:
        raise InvalidInputError(
            f"labels have {labels.shape[1]} columns but the task eigensystem "
            f"has dimension {task_eigen.dim}"
        )
    coeff = labels @ task_eigen.vectors
    coeff /= task_eigen.values + lambda_t
    return coeff @ task_eigen.vectors.T


def fit_two_step(problem: ColdStartProblem, lambda_t: float, lambda_d: float) -> TwoStepModel:
    """Fit both steps at fixed regularization.

    The completed target vector keeps the problem's labeled values exactly and
    fills unlabeled positions with first-step predictions C @ g; the second
    step solves a = (K + lambda_d I)^{-1} z.
    """
    _check_lambdas(lambda_t, lambda_d)
    c = first_step_duals(problem.task_eigen, problem.labels, lambda_t)
    mask = problem.labeled_mask
    z = np.empty(problem.n_objects)
    z[mask] = problem.labeled_values
    if not mask.all():
        z[~mask] = (c @ problem.target_task_kernel)[~mask]
    a = shifted_inverse_apply(problem.object_eigen, lambda_d, z)
    return TwoStepModel(
        first_step_duals=c,
        second_step_duals=a,
        lambda_t=float(lambda_t),
        lambda_d=float(lambda_d),
        imputed_labels=z,
    )


def fit_full_cold_start_closed_form(
    object_eigen: EigenSystem,
    task_eigen: EigenSystem,
    labels,
    target_task_kernel,
    lambda_t: float,
    lambda_d: float,
) -> np.ndarray:
    """Second-step duals for a task with no labels, in one matrix chain.

    Computes a = (K + lambda_d I)^{-1} Y (G + lambda_t I)^{-1} g, which equals
    :func:`fit_two_step` with an empty mask.
    """
    _check_lambdas(lambda_t, lambda_d)
    labels = np.asarray(labels, dtype=float)
    g = np.asarray(target_task_kernel, dtype=float).reshape(-1)
    w = shifted_inverse_apply(task_eigen, lambda_t, g)
    return shifted_inverse_apply(object_eigen, lambda_d, labels @ w)


def predict_target(model: TwoStepModel, object_kernel_rows) -> np.ndarray:
    """Target-task predictions at new objects from their kernel rows."""
    rows = np.asarray(object_kernel_rows, dtype=float)
    squeeze = rows.ndim == 1
    if squeeze:
        rows = rows[None, :]
    if rows.shape[1] != model.second_step_duals.shape[0]:
        raise InvalidInputError(
            f"kernel rows have {rows.shape[1]} columns but the model has "
            f"{model.second_step_duals.shape[0]} training objects"
        )
    out = rows @ model.second_step_duals
    return float(out[0]) if squeeze else out


def _selection_error(metric: str, loo: np.ndarray, truth: np.ndarray, axis: str) -> float:
    if metric == "mse":
        err = float(np.mean((loo - truth) ** 2))
    elif metric == "cindex":
        err = 1.0 - mean_slice_c_index(truth, loo, axis)
    else:
        raise InvalidParameterError(
            f"unknown error metric {metric!r}; expected one of {ERROR_METRICS}"
        )
    if not np.isfinite(err):
        raise NumericalDegeneracyError(f"selection error is not finite ({err!r})")
    return err


def _validate_grid(grid, name: str) -> tuple:
    values = tuple(float(v) for v in grid)
    if not values:
        raise InvalidParameterError(f"{name} must not be empty")
    if any(not (np.isfinite(v) and v > 0) for v in values):
        raise InvalidParameterError(f"{name} values must be positive reals")
    return values


def select_and_fit(
    problem: ColdStartProblem,
    grid=DEFAULT_GRID,
    metric: str = "mse",
    lambda_d_grid=None,
    verbatim_step2_loo: bool = False,
):
    """LOOCV-driven grid search for both lambdas, then a final two-step fit.

    Step one picks lambda_t by leave-column-out error against the auxiliary
    labels; the winning LOO prediction matrix R becomes the training labels
    for step two, whose lambda_d is picked by leave-row-out error, again
    against the original labels.  Candidates are scanned in ascending order
    and only a strictly smaller error displaces the incumbent, so the
    smallest optimal candidate wins.  ``verbatim_step2_loo`` switches the
    step-two residual base from R to Y (a printed-formula compatibility mode;
    the default matches brute-force LOO retraining).  Returns the fitted
    model and a :class:`SelectionReport`.
    """
    grid_t = _validate_grid(grid, "grid")
    grid_d = grid_t if lambda_d_grid is None else _validate_grid(lambda_d_grid, "lambda_d_grid")
    grid_t = tuple(sorted(grid_t))
    grid_d = tuple(sorted(grid_d))
    y = problem.labels
    # the grid loops reuse two label-sized buffers; fresh arrays are
    # materialized only when a candidate becomes the incumbent
    work = np.empty_like(y)
    resid = np.empty_like(y)

    best_t, best_e1, best_r = None, np.inf, None
    for lam_t in grid_t:
        g_diag = loo_diagonal(problem.task_eigen, lam_t)
        if y.shape[1] == 1 or np.any(g_diag <= 0):
            c = first_step_duals(problem.task_eigen, y, lam_t)
            r = loo_predictions(c, y, g_diag, axis="columns")
        else:
            coeff = y @ problem.task_eigen.vectors
            coeff /= problem.task_eigen.values + lam_t
            np.matmul(coeff, problem.task_eigen.vectors.T, out=work)
            np.divide(work, g_diag[None, :], out=resid)
            r = None  # materialized below only if this candidate wins
        if metric == "mse" and r is None:
            flat = resid.reshape(-1)
            err = float(flat @ flat) / flat.shape[0]
        else:
            if r is None:
                r = y - resid
            err = _selection_error(metric, r, y, axis="columns")
        if err < best_e1:
            best_t, best_e1, best_r = lam_t, err, (y - resid if r is None else r)

    best_d, best_e2, best_loo2 = None, np.inf, None
    for lam_d in grid_d:
        k_diag = loo_diagonal(problem.object_eigen, lam_d)
        base = y if verbatim_step2_loo else best_r
        if y.shape[0] == 1 or np.any(k_diag <= 0):
            a = shifted_inverse_apply(problem.object_eigen, lam_d, best_r)
            t = loo_predictions(a, base, k_diag, axis="rows")
            err = _selection_error(metric, t, y, axis="rows")
        else:
            coeff = problem.object_eigen.vectors.T @ best_r
            coeff /= (problem.object_eigen.values + lam_d)[:, None]
            np.matmul(problem.object_eigen.vectors, coeff, out=work)
            np.divide(work, k_diag[:, None], out=resid)
            np.subtract(base, resid, out=work)  # the LOO prediction matrix
            t = None
            if metric == "mse":
                np.subtract(work, y, out=resid)
                flat = resid.reshape(-1)
                err = float(flat @ flat) / flat.shape[0]
            else:
                err = _selection_error(metric, work, y, axis="rows")
        if err < best_e2:
            best_d, best_e2, best_loo2 = lam_d, err, (work.copy() if t is None else t)

    model = fit_two_step(problem, best_t, best_d)
    report = SelectionReport(
        chosen_lambda_t=best_t,
        chosen_lambda_d=best_d,
        loo_matrix_step1=best_r,
        loo_matrix_step2=best_loo2,
        error_step1=best_e1,
        error_step2=best_e2,
        grid_lambda_t=grid_t,
        grid_lambda_d=grid_d,
        error_metric=metric,
    )
    return model, report
