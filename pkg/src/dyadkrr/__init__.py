"""Kernel ridge regression toolkit for dyadic (object x task) cold-start prediction.

Implements two-step KRR and tensor-product pairwise KRR with closed-form
SVD-based training, exact leave-one-out model selection, a spectral-filtering
view of both learners, and a learning-curve experiment harness.
"""

from .errors import (
    CapacityError,
    DataFormatError,
    DyadkrrError,
    InvalidInputError,
    InvalidParameterError,
    InvalidPlanError,
    NumericalDegeneracyError,
    SingularFilterError,
    UndefinedMetricError,
)
from .evaluation import (
    ExperimentData,
    ExperimentPlan,
    LearningCurve,
    SyntheticData,
    generate_synthetic,
    run_experiment,
)
from .kernels import KernelSpec, PairwiseKernelSpec, delta_kernel, kernel_matrix, pairwise_kernel_matrix
from .linalg import EigenSystem, economy_svd, kron_apply, psd_eigen, shifted_inverse_apply, unvec, vec
from .metrics import c_index
from .pairwise import (
    PairwiseModel,
    fit_pairwise_tikhonov,
    fit_pairwise_two_step_ols,
    loo_pair_predictions,
    predict_grid,
    predict_pair,
)
from .ridge import RidgeModel, fit_multilabel, loo_diagonal, loo_predictions, predict
from .spectral import (
    AdmissibilityConstants,
    FilterSpec,
    filter_value,
    fit_by_filter,
    kappa_squared,
    verify_admissibility,
)
from .twostep import (
    DEFAULT_GRID,
    ColdStartProblem,
    SelectionReport,
    TwoStepModel,
    fit_full_cold_start_closed_form,
    fit_two_step,
    predict_target,
    select_and_fit,
)

__version__ = "0.1.0"
