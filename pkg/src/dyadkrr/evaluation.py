"""Synthetic data generation and the cold-start experiment harness.

The harness replays the four transfer settings on one dataset: single-task
ridge on the target's own labels, multi-task pairwise KRR where target and
auxiliary tasks share the same objects, pairwise and two-step learners with
zero target labels (full cold start), and the two-step learner with a few
target labels on top of all auxiliary data (almost full cold start).  Every
task takes a turn as the target; scores are C-indexes on held-out objects,
averaged per task over repetitions and then over tasks.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, InvalidPlanError
from .kernels import KernelSpec, kernel_matrix
from .linalg import EigenSystem, psd_eigen, shifted_inverse_apply
from .metrics import c_index, mean_slice_c_index
from .pairwise import fit_pairwise_tikhonov, loo_pair_predictions, predict_grid
from .ridge import loo_diagonal, loo_predictions
from .twostep import (
    DEFAULT_GRID,
    ColdStartProblem,
    fit_two_step,
    predict_target,
    select_and_fit,
)

__all__ = [
    "SETTINGS",
    "SyntheticData",
    "ExperimentData",
    "ExperimentPlan",
    "CurvePoint",
    "LearningCurve",
    "c_index",
    "generate_synthetic",
    "run_experiment",
    "curve_to_csv_lines",
    "raw_to_csv_lines",
    "curve_to_json_dict",
    "plan_from_dict",
]

SETTINGS = (
    "single_task",
    "multi_task",
    "full_cold_start_pairwise",
    "full_cold_start_two_step",
    "almost_full_cold_start",
)


@dataclass(frozen=True)
class SyntheticData:
    """Bilinear ground truth plus noisy labels; fully determined by the seed."""

    object_features: np.ndarray
    task_features: np.ndarray
    labels: np.ndarray
    coefficients: np.ndarray

    def ground_truth(self, object_features=None, task_features=None) -> np.ndarray:
        """Noiseless labels for arbitrary feature rows (defaults: training)."""
        phi = self.object_features if object_features is None else np.asarray(object_features)
        psi = self.task_features if task_features is None else np.asarray(task_features)
        return phi @ self.coefficients @ psi.T


def generate_synthetic(
    n_objects: int,
    m_tasks: int,
    object_dim: int,
    task_dim: int,
    noise_sd: float,
    seed: int,
) -> SyntheticData:
    """Sample a random bilinear labeling y(d, t) = phi(d)' W psi(t) + noise.

    Features are standard normal; W is scaled by 1/sqrt(object_dim*task_dim)
    so the clean labels have roughly unit variance and noise_sd is meaningful
    on that scale.  The same seed reproduces the output bit for bit.
    """
    if min(n_objects, m_tasks, object_dim, task_dim) < 1:
        raise InvalidParameterError("all synthetic sizes must be >= 1")
    if noise_sd < 0:
        raise InvalidParameterError("noise_sd must be nonnegative")
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((n_objects, object_dim))
    psi = rng.standard_normal((m_tasks, task_dim))
    w = rng.standard_normal((object_dim, task_dim)) / np.sqrt(object_dim * task_dim)
    noise = rng.standard_normal((n_objects, m_tasks))
    labels = phi @ w @ psi.T + noise_sd * noise
    return SyntheticData(
        object_features=phi, task_features=psi, labels=labels, coefficients=w
    )


@dataclass(frozen=True)
class ExperimentData:
    """Precomputed kernels plus the complete label matrix the harness slices."""

    object_kernel: np.ndarray
    task_kernel: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.object_kernel, dtype=float)
        g = np.asarray(self.task_kernel, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if y.ndim != 2 or not np.all(np.isfinite(y)):
            raise InvalidInputError("labels must be a complete finite matrix")
        if k.shape != (y.shape[0], y.shape[0]):
            raise InvalidInputError("object kernel does not match label row count")
        if g.shape != (y.shape[1], y.shape[1]):
            raise InvalidInputError("task kernel does not match label column count")
        object.__setattr__(self, "object_kernel", k)
        object.__setattr__(self, "task_kernel", g)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_features(cls, object_features, task_features, labels) -> "ExperimentData":
        linear = KernelSpec("linear")
        return cls(
            object_kernel=kernel_matrix(linear, object_features),
            task_kernel=kernel_matrix(linear, task_features),
            labels=labels,
        )

    @classmethod
    def from_synthetic(cls, synthetic: SyntheticData) -> "ExperimentData":
        return cls.from_features(
            synthetic.object_features, synthetic.task_features, synthetic.labels
        )


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative description of one learning-curve experiment.

    ``target_sizes`` is the x-axis: labeled target objects for single_task,
    multi_task and almost_full_cold_start, auxiliary training objects for the
    two full cold start settings (which have no target labels at all).
    ``auxiliary_size`` only applies to almost_full_cold_start, where it fixes
    the auxiliary object count (None = the whole training pool), and to
    multi_task where only "track_target" (auxiliary grows with the target) is
    meaningful.
    """

    setting: str
    target_sizes: tuple
    repetitions: int = 1
    seed: int = 0
    grid: tuple = DEFAULT_GRID
    metric_for_selection: str = "mse"
    auxiliary_size: int | str | None = None
    test_fraction: float = 0.25

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise InvalidPlanError(
                f"unknown setting {self.setting!r}; expected one of {SETTINGS}"
            )
        sizes = tuple(int(s) for s in self.target_sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise InvalidPlanError("target_sizes must be a non-empty list of counts >= 1")
        if self.repetitions < 1:
            raise InvalidPlanError("repetitions must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise InvalidPlanError("test_fraction must be in (0, 1)")
        if self.metric_for_selection not in ("mse", "cindex"):
            raise InvalidPlanError("metric_for_selection must be 'mse' or 'cindex'")
        grid = tuple(float(v) for v in self.grid)
        if not grid or any(v <= 0 for v in grid):
            raise InvalidPlanError("grid values must be positive")
        aux = self.auxiliary_size
        if isinstance(aux, str) and aux != "track_target":
            raise InvalidPlanError(f"auxiliary_size string must be 'track_target', got {aux!r}")
        if self.setting == "multi_task" and isinstance(aux, int):
            raise InvalidPlanError(
                "multi_task uses auxiliary_size='track_target'; fixed counts are undefined"
            )
        if self.setting == "almost_full_cold_start" and aux == "track_target":
            raise InvalidPlanError(
                "almost_full_cold_start needs a fixed auxiliary_size (or None for all)"
            )
        object.__setattr__(self, "target_sizes", sizes)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "repetitions", int(self.repetitions))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class CurvePoint:
    training_size: int
    mean_c_index: float
    std_error: float


@dataclass(frozen=True)
class LearningCurve:
    """Averaged scores per training size, plus the raw per-run scores."""

    setting: str
    repetitions: int
    points: tuple
    raw_scores: np.ndarray = field(repr=False, default=None)  # (size, task, rep)


def _selection_error(metric: str, loo, truth, axis: str) -> float:
    if metric == "mse":
        return float(np.mean((loo - truth) ** 2))
    return 1.0 - mean_slice_c_index(truth, loo, axis)


def _select_ridge_lambda(es: EigenSystem, y: np.ndarray, grid, metric: str) -> float:
    """Leave-object-out grid search for a single-task ridge model."""
    best, best_err = None, np.inf
    labels = y[:, None]
    for lam in grid:
        duals = shifted_inverse_apply(es, lam, labels)
        diag = loo_diagonal(es, lam)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            loo = loo_predictions(duals, labels, diag, axis="rows")
        if metric == "mse":
            err = float(np.mean((loo - labels) ** 2))
        else:
            err = 1.0 - c_index(y, loo[:, 0])
        if err < best_err:
            best, best_err = lam, err
    return best


def _select_pairwise_lambda(
    es_o: EigenSystem, es_t: EigenSystem, y: np.ndarray, grid, metric: str
) -> float:
    """Leave-one-pair-out grid search for the pairwise Tikhonov model."""
    best, best_err = None, np.inf
    for lam in grid:
        loo = loo_pair_predictions(es_o, es_t, y, lam)
        err = _selection_error(metric, loo, y, axis="columns")
        if err < best_err:
            best, best_err = lam, err
    return best


class _RepetitionRunner:
    """Executes all (task, size) cells of one repetition on shared splits."""

    def __init__(self, plan: ExperimentPlan, data: ExperimentData, rep: int):
        self.plan = plan
        self.data = data
        n_all = data.labels.shape[0]
        test_count = max(1, int(round(plan.test_fraction * n_all)))
        # split depends only on (seed, rep) so all settings pair up
        rng = np.random.default_rng([plan.seed, rep])
        order = rng.permutation(n_all)
        self.test_idx = order[:test_count]
        self.pool_idx = order[test_count:]
        self._object_eigen_cache: dict = {}
        self._task_eigen_cache: dict = {}

    def _object_eigen(self, count: int) -> EigenSystem:
        if count not in self._object_eigen_cache:
            idx = self.pool_idx[:count]
            sub = self.data.object_kernel[np.ix_(idx, idx)]
            self._object_eigen_cache[count] = psd_eigen(sub)
        return self._object_eigen_cache[count]

    def _task_eigen(self, excluded_task: int) -> EigenSystem:
        if excluded_task not in self._task_eigen_cache:
            keep = [j for j in range(self.data.labels.shape[1]) if j != excluded_task]
            sub = self.data.task_kernel[np.ix_(keep, keep)]
            self._task_eigen_cache[excluded_task] = psd_eigen(sub)
        return self._task_eigen_cache[excluded_task]

    def _score(self, task: int, predictions: np.ndarray) -> float:
        return c_index(self.data.labels[self.test_idx, task], predictions)

    def run(self) -> np.ndarray:
        plan, data = self.plan, self.data
        m = data.labels.shape[1]
        scores = np.empty((len(plan.target_sizes), m))
        for task in range(m):
            runner = getattr(self, f"_run_{plan.setting}")
            scores[:, task] = runner(task)
        return scores

    def _run_single_task(self, task: int) -> np.ndarray:
        plan, data = self.plan, self.data
        out = np.empty(len(plan.target_sizes))
        for si, size in enumerate(plan.target_sizes):
            train = self.pool_idx[:size]
            es = self._object_eigen(size)
            y = data.labels[train, task]
            lam = _select_ridge_lambda(es, y, plan.grid, plan.metric_for_selection)
            duals = shifted_inverse_apply(es, lam, y)
            k_test = data.object_kernel[np.ix_(self.test_idx, train)]
            out[si] = self._score(task, k_test @ duals)
        return out

    def _run_multi_task(self, task: int) -> np.ndarray:
        plan, data = self.plan, self.data
        es_t_all = self._task_eigen_full()
        g = data.task_kernel[:, task]
        out = np.empty(len(plan.target_sizes))
        for si, size in enumerate(plan.target_sizes):
            train = self.pool_idx[:size]
            es_o = self._object_eigen(size)
            y = data.labels[train, :]
            lam = _select_pairwise_lambda(es_o, es_t_all, y, plan.grid, plan.metric_for_selection)
            model = fit_pairwise_tikhonov(es_o, es_t_all, y, lam)
            k_test = data.object_kernel[np.ix_(self.test_idx, train)]
            out[si] = self._score(task, predict_grid(model, k_test, g[None, :])[:, 0])
        return out

    def _task_eigen_full(self) -> EigenSystem:
        if "all" not in self._task_eigen_cache:
            self._task_eigen_cache["all"] = psd_eigen(self.data.task_kernel)
        return self._task_eigen_cache["all"]

    def _cold_start_pieces(self, task: int, aux_count: int):
        data = self.data
        aux_obj = self.pool_idx[:aux_count]
        aux_tasks = [j for j in range(data.labels.shape[1]) if j != task]
        y_aux = data.labels[np.ix_(aux_obj, aux_tasks)]
        g = data.task_kernel[aux_tasks, task]
        return aux_obj, y_aux, g

    def _run_full_cold_start_two_step(self, task: int) -> np.ndarray:
        plan, data = self.plan, self.data
        es_t = self._task_eigen(task)
        out = np.empty(len(plan.target_sizes))
        for si, size in enumerate(plan.target_sizes):
            aux_obj, y_aux, g = self._cold_start_pieces(task, size)
            problem = ColdStartProblem(self._object_eigen(size), es_t, y_aux, g)
            model, _ = select_and_fit(problem, plan.grid, plan.metric_for_selection)
            k_test = data.object_kernel[np.ix_(self.test_idx, aux_obj)]
            out[si] = self._score(task, predict_target(model, k_test))
        return out

    def _run_full_cold_start_pairwise(self, task: int) -> np.ndarray:
        plan, data = self.plan, self.data
        es_t = self._task_eigen(task)
        out = np.empty(len(plan.target_sizes))
        for si, size in enumerate(plan.target_sizes):
            aux_obj, y_aux, g = self._cold_start_pieces(task, size)
            es_o = self._object_eigen(size)
            lam = _select_pairwise_lambda(es_o, es_t, y_aux, plan.grid, plan.metric_for_selection)
            model = fit_pairwise_tikhonov(es_o, es_t, y_aux, lam)
            k_test = data.object_kernel[np.ix_(self.test_idx, aux_obj)]
            out[si] = self._score(task, predict_grid(model, k_test, g[None, :])[:, 0])
        return out

    def _run_almost_full_cold_start(self, task: int) -> np.ndarray:
        plan, data = self.plan, self.data
        aux_count = (
            len(self.pool_idx) if plan.auxiliary_size is None else int(plan.auxiliary_size)
        )
        aux_obj, y_aux, g = self._cold_start_pieces(task, aux_count)
        es_o = self._object_eigen(aux_count)
        es_t = self._task_eigen(task)
        # Algorithm-2 selection never reads the target labels, so one search
        # serves every target size.
        selection_problem = ColdStartProblem(es_o, es_t, y_aux, g)
        _, report = select_and_fit(selection_problem, plan.grid, plan.metric_for_selection)
        k_test = data.object_kernel[np.ix_(self.test_idx, aux_obj)]
        out = np.empty(len(plan.target_sizes))
        for si, size in enumerate(plan.target_sizes):
            mask = np.zeros(aux_count, dtype=bool)
            mask[:size] = True
            problem = ColdStartProblem(
                es_o, es_t, y_aux, g,
                labeled_mask=mask,
                labeled_values=data.labels[aux_obj[:size], task],
            )
            model = fit_two_step(problem, report.chosen_lambda_t, report.chosen_lambda_d)
            out[si] = self._score(task, predict_target(model, k_test))
        return out


def _validate_plan_against_data(plan: ExperimentPlan, data: ExperimentData):
    n_all = data.labels.shape[0]
    m_all = data.labels.shape[1]
    test_count = max(1, int(round(plan.test_fraction * n_all)))
    pool = n_all - test_count
    if pool < 1:
        raise InvalidPlanError("no training objects left after the test split")
    largest = max(plan.target_sizes)
    if plan.setting == "almost_full_cold_start":
        aux = pool if plan.auxiliary_size is None else int(plan.auxiliary_size)
        if aux < 1 or aux > pool:
            raise InvalidPlanError(
                f"auxiliary_size {aux} outside the training pool of {pool} objects"
            )
        if largest > aux:
            raise InvalidPlanError(
                f"target size {largest} exceeds the {aux} auxiliary objects"
            )
    elif largest > pool:
        raise InvalidPlanError(
            f"target size {largest} exceeds the training pool of {pool} objects"
        )
    if plan.setting != "single_task" and m_all < 2:
        raise InvalidPlanError(f"setting {plan.setting} needs at least 2 tasks")


def run_experiment(
    plan: ExperimentPlan, data: ExperimentData, threads: int = 1
) -> LearningCurve:
    """Execute a plan and aggregate scores into a learning curve.

    Every task serves as target once per repetition; repetitions share the
    derived train/test splits across settings so curves are paired.  Scores
    are averaged over repetitions per task first, then over tasks; the
    standard error is computed across the task means.  Identical plans and
    seeds reproduce the curve bit for bit, regardless of ``threads``.
    """
    _validate_plan_against_data(plan, data)
    m = data.labels.shape[1]
    raw = np.empty((len(plan.target_sizes), m, plan.repetitions))

    def one(rep: int) -> np.ndarray:
        return _RepetitionRunner(plan, data, rep).run()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            for rep, scores in enumerate(executor.map(one, range(plan.repetitions))):
                raw[:, :, rep] = scores
    else:
        for rep in range(plan.repetitions):
            raw[:, :, rep] = one(rep)

    order = np.argsort(np.asarray(plan.target_sizes, dtype=int), kind="stable")
    points = []
    for si in order:
        task_means = raw[si].mean(axis=1)
        mean = float(task_means.mean())
        stderr = float(task_means.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
        points.append(CurvePoint(int(plan.target_sizes[si]), mean, stderr))
    return LearningCurve(
        setting=plan.setting,
        repetitions=plan.repetitions,
        points=tuple(points),
        raw_scores=raw[order],
    )


def curve_to_csv_lines(curve: LearningCurve) -> list:
    """Plot-ready CSV lines: setting,size,mean_c_index,std_error,repetitions."""
    lines = ["setting,size,mean_c_index,std_error,repetitions"]
    for p in curve.points:
        lines.append(
            f"{curve.setting},{p.training_size},{p.mean_c_index!r},"
            f"{p.std_error!r},{curve.repetitions}"
        )
    return lines


def raw_to_csv_lines(curve: LearningCurve) -> list:
    """Per-repetition audit CSV: one row per (size, task, repetition)."""
    lines = ["setting,size,task,repetition,c_index"]
    if curve.raw_scores is None:
        return lines
    sizes = [p.training_size for p in curve.points]
    for si, size in enumerate(sizes):
        for task in range(curve.raw_scores.shape[1]):
            for rep in range(curve.raw_scores.shape[2]):
                lines.append(
                    f"{curve.setting},{size},{task},{rep},"
                    f"{float(curve.raw_scores[si, task, rep])!r}"
                )
    return lines


def curve_to_json_dict(curve: LearningCurve) -> dict:
    return {
        "setting": curve.setting,
        "repetitions": curve.repetitions,
        "points": [
            {
                "size": p.training_size,
                "mean_c_index": p.mean_c_index,
                "std_error": p.std_error,
            }
            for p in curve.points
        ],
    }


def plan_from_dict(config: dict) -> ExperimentPlan:
    """Build a plan from the JSON mirror used by the CLI."""
    known = {
        "setting",
        "target_sizes",
        "repetitions",
        "seed",
        "grid",
        "metric_for_selection",
        "auxiliary_size",
        "test_fraction",
    }
    unknown = set(config) - known
    if unknown:
        raise InvalidPlanError(f"unknown plan fields: {sorted(unknown)}")
    if "setting" not in config or "target_sizes" not in config:
        raise InvalidPlanError("plan requires 'setting' and 'target_sizes'")
    kwargs = {k: v for k, v in config.items() if v is not None}
    if "grid" in kwargs:
        kwargs["grid"] = tuple(kwargs["grid"])
    kwargs["target_sizes"] = tuple(kwargs["target_sizes"])
    return ExperimentPlan(**kwargs)
