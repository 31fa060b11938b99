"""Command-line surface: kernel computation, fitting, prediction, LOOCV, experiments.

Every subcommand is a thin adapter over the library: it loads files, calls the
corresponding functions and serializes the result.  Exit codes: 0 on success,
2 on usage errors, 1 on data or numerical errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dataio import (
    LabeledMatrixFile,
    load_bag_of_words,
    load_matrix,
    load_sequences,
    mean_impute,
    save_matrix,
)
from .errors import DyadkrrError, InvalidInputError
from .evaluation import (
    ExperimentData,
    curve_to_csv_lines,
    curve_to_json_dict,
    generate_synthetic,
    plan_from_dict,
    raw_to_csv_lines,
    run_experiment,
)
from .kernels import KernelSpec, kernel_matrix
from .linalg import psd_eigen
from .pairwise import fit_pairwise_tikhonov, fit_pairwise_two_step_ols, predict_grid
from .twostep import (
    DEFAULT_GRID,
    ColdStartProblem,
    fit_two_step,
    predict_target,
    select_and_fit,
)

MODEL_FORMAT_VERSION = 1


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
    return value


def _grid_arg(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("grid values must be positive numbers")
    return values


def _complete_labels(matrix: LabeledMatrixFile, impute: bool) -> np.ndarray:
    if matrix.complete:
        return matrix.values
    if impute:
        return mean_impute(matrix)
    raise InvalidInputError(
        "label matrix has missing entries; pass --mean-impute or complete it first"
    )


def _load_kernel_inputs(args, side: str):
    """Returns (ids, inputs) for one side of a kernel computation."""
    features = getattr(args, f"{side}features", None)
    sequences = getattr(args, f"{side}sequences", None)
    bow = getattr(args, f"{side}bag_of_words", None)
    given = [p for p in (features, sequences, bow) if p]
    if len(given) > 1:
        raise InvalidInputError("give at most one input file per side")
    if features:
        m = load_matrix(features, kind="features")
        return m.row_ids, m.values
    if sequences:
        ids, seqs = load_sequences(sequences)
        return ids, seqs
    if bow:
        ids, _, mat = load_bag_of_words(bow, normalize=args.normalize_rows)
        return ids, mat
    return None, None


def _cmd_kernel(args) -> int:
    spec = KernelSpec(
        kind=args.kind, gamma=args.gamma, k=args.kmer, normalize=args.normalize
    )
    left_ids, left = _load_kernel_inputs(args, "")
    if left is None:
        raise InvalidInputError("kernel needs --features, --sequences or --bag-of-words")
    right_ids, right = _load_kernel_inputs(args, "right_")
    if args.kind == "delta":
        left = list(left_ids)
        right = list(right_ids) if right_ids is not None else None
    out = kernel_matrix(spec, left, right)
    col_ids = right_ids if right_ids is not None else left_ids
    save_matrix(args.out, left_ids, col_ids, out)
    return 0


def _model_to_json(model_dict: dict, path: str):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_dict, handle, indent=2)
        handle.write("\n")


def _load_target_labels(path, object_ids) -> tuple:
    """Mask and values for the target task from a one-column label file."""
    zfile = load_matrix(path, kind="labels")
    if zfile.values.shape[1] != 1:
        raise InvalidInputError("target labels must be a one-column matrix")
    index = {oid: i for i, oid in enumerate(object_ids)}
    unknown = [rid for rid in zfile.row_ids if rid not in index]
    if unknown:
        raise InvalidInputError(
            f"target label object ids not in the training kernel: {unknown[:5]}"
        )
    mask = np.zeros(len(object_ids), dtype=bool)
    values = np.zeros(len(object_ids))
    for rid, val, miss in zip(zfile.row_ids, zfile.values[:, 0], zfile.missing_mask[:, 0]):
        if miss:
            continue
        mask[index[rid]] = True
        values[index[rid]] = val
    return mask, values[mask]


def _load_problem_parts(args):
    kfile = load_matrix(args.object_kernel, kind="kernel")
    gfile = load_matrix(args.task_kernel, kind="kernel")
    yfile = load_matrix(args.labels, kind="labels")
    if yfile.row_ids != kfile.row_ids:
        raise InvalidInputError("label row ids do not match the object kernel ids")
    if yfile.col_ids != gfile.row_ids:
        raise InvalidInputError("label column ids do not match the task kernel ids")
    labels = _complete_labels(yfile, args.mean_impute)
    return kfile, gfile, labels


def _load_target_vector(path, task_ids) -> np.ndarray:
    gfile = load_matrix(path, kind="labels")
    values = gfile.values
    if gfile.missing_mask.any():
        raise InvalidInputError("target task kernel vector must be complete")
    if values.shape[1] == 1 and gfile.row_ids == task_ids:
        return values[:, 0]
    if values.shape[0] == 1 and gfile.col_ids == task_ids:
        return values[0, :]
    raise InvalidInputError(
        "target task kernel must be a single row or column with the task kernel ids"
    )


def _cmd_fit(args) -> int:
    kfile, gfile, labels = _load_problem_parts(args)
    object_eigen = psd_eigen(kfile.values)
    task_eigen = psd_eigen(gfile.values)
    if args.method == "two-step":
        g = _load_target_vector(args.target_task_kernel, gfile.row_ids)
        mask = values = None
        if args.target_labels:
            mask, values = _load_target_labels(args.target_labels, kfile.row_ids)
        problem = ColdStartProblem(
            object_eigen, task_eigen, labels, g,
            labeled_mask=mask, labeled_values=values,
        )
        model = fit_two_step(problem, args.lambda_t, args.lambda_d)
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "method": "two_step",
            "object_ids": list(kfile.row_ids),
            "task_ids": list(gfile.row_ids),
            "lambda_t": model.lambda_t,
            "lambda_d": model.lambda_d,
            "second_step_duals": model.second_step_duals.tolist(),
            "first_step_duals": model.first_step_duals.tolist(),
            "imputed_labels": model.imputed_labels.tolist(),
        }
    elif args.method == "pairwise":
        if args.lam is None:
            raise InvalidInputError("--lambda is required for --method pairwise")
        model = fit_pairwise_tikhonov(object_eigen, task_eigen, labels, args.lam)
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "method": "pairwise_tikhonov",
            "object_ids": list(kfile.row_ids),
            "task_ids": list(gfile.row_ids),
            "lambda": model.lam,
            "dual_matrix": model.dual_matrix.tolist(),
        }
    else:  # pairwise-ols
        model = fit_pairwise_two_step_ols(
            object_eigen, task_eigen, labels, args.lambda_d, args.lambda_t
        )
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "method": "pairwise_two_step_ols",
            "object_ids": list(kfile.row_ids),
            "task_ids": list(gfile.row_ids),
            "lambda_t": model.lambda_t,
            "lambda_d": model.lambda_d,
            "dual_matrix": model.dual_matrix.tolist(),
        }
    _model_to_json(payload, args.out)
    return 0


def _load_model(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InvalidInputError(f"unsupported model format version {version!r}")
    return payload


def _cmd_predict(args) -> int:
    payload = _load_model(args.model)
    rows_file = load_matrix(args.object_kernel_rows, kind="features")
    if rows_file.col_ids != tuple(payload["object_ids"]):
        raise InvalidInputError("kernel row columns do not match the model's object ids")
    if payload["method"] == "two_step":
        duals = np.asarray(payload["second_step_duals"], dtype=float)
        preds = rows_file.values @ duals
        save_matrix(args.out, rows_file.row_ids, ("prediction",), preds[:, None])
        return 0
    if not args.task_kernel_rows:
        raise InvalidInputError("pairwise models need --task-kernel-rows")
    task_rows_file = load_matrix(args.task_kernel_rows, kind="features")
    if task_rows_file.col_ids != tuple(payload["task_ids"]):
        raise InvalidInputError("task kernel row columns do not match the model's task ids")
    dual = np.asarray(payload["dual_matrix"], dtype=float)
    preds = rows_file.values @ dual @ task_rows_file.values.T
    save_matrix(args.out, rows_file.row_ids, task_rows_file.row_ids, preds)
    return 0


def _cmd_loocv(args) -> int:
    kfile, gfile, labels = _load_problem_parts(args)
    object_eigen = psd_eigen(kfile.values)
    task_eigen = psd_eigen(gfile.values)
    if args.target_task_kernel:
        g = _load_target_vector(args.target_task_kernel, gfile.row_ids)
    else:
        g = np.zeros(labels.shape[1])  # selection never reads it
    mask = values = None
    if args.target_labels:
        mask, values = _load_target_labels(args.target_labels, kfile.row_ids)
    problem = ColdStartProblem(
        object_eigen, task_eigen, labels, g, labeled_mask=mask, labeled_values=values
    )
    model, report = select_and_fit(
        problem,
        grid=args.grid,
        metric=args.metric,
        lambda_d_grid=args.lambda_d_grid,
        verbatim_step2_loo=args.verbatim_step2_loo,
    )
    payload = {
        "chosen_lambda_t": report.chosen_lambda_t,
        "chosen_lambda_d": report.chosen_lambda_d,
        "error_step1": report.error_step1,
        "error_step2": report.error_step2,
        "grid_lambda_t": list(report.grid_lambda_t),
        "grid_lambda_d": list(report.grid_lambda_d),
        "error_metric": report.error_metric,
        "loo_matrix_step1": report.loo_matrix_step1.tolist(),
        "loo_matrix_step2": report.loo_matrix_step2.tolist(),
    }
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
    if args.model_out:
        if not args.target_task_kernel:
            raise InvalidInputError("--model-out requires --target-task-kernel")
        _model_to_json(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "method": "two_step",
                "object_ids": list(kfile.row_ids),
                "task_ids": list(gfile.row_ids),
                "lambda_t": model.lambda_t,
                "lambda_d": model.lambda_d,
                "second_step_duals": model.second_step_duals.tolist(),
                "first_step_duals": model.first_step_duals.tolist(),
                "imputed_labels": model.imputed_labels.tolist(),
            },
            args.model_out,
        )
    return 0


def _experiment_data_from_config(config: dict) -> ExperimentData:
    data_cfg = config.get("data")
    if not isinstance(data_cfg, dict):
        raise InvalidInputError("experiment config needs a 'data' object")
    if "synthetic" in data_cfg:
        synth = generate_synthetic(**data_cfg["synthetic"])
        return ExperimentData.from_synthetic(synth)
    try:
        labels = load_matrix(data_cfg["labels"], kind="labels")
        kfile = load_matrix(data_cfg["object_kernel"], kind="kernel")
        gfile = load_matrix(data_cfg["task_kernel"], kind="kernel")
    except KeyError as exc:
        raise InvalidInputError(f"experiment data config is missing {exc}") from None
    if labels.row_ids != kfile.row_ids or labels.col_ids != gfile.row_ids:
        raise InvalidInputError("experiment data ids are inconsistent across files")
    if not labels.complete:
        raise InvalidInputError("experiment labels must be complete (impute first)")
    return ExperimentData(kfile.values, gfile.values, labels.values)


def _cmd_experiment(args) -> int:
    with open(args.config, encoding="utf-8") as handle:
        config = json.load(handle)
    plan_cfg = config.get("plan")
    if not isinstance(plan_cfg, dict):
        raise InvalidInputError("experiment config needs a 'plan' object")
    if args.seed is not None:
        plan_cfg = dict(plan_cfg, seed=args.seed)
    plan = plan_from_dict(plan_cfg)
    data = _experiment_data_from_config(config)
    curve = run_experiment(plan, data, threads=args.threads)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("\n".join(curve_to_csv_lines(curve)) + "\n")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            json.dump(curve_to_json_dict(curve), handle, indent=2)
            handle.write("\n")
    if args.raw_out:
        with open(args.raw_out, "w", encoding="utf-8") as handle:
            handle.write("\n".join(raw_to_csv_lines(curve)) + "\n")
    return 0


def _default_threads() -> int:
    env = os.environ.get("DYADKRR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadkrr",
        description="Two-step and pairwise kernel ridge regression for dyadic cold-start prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_kernel = sub.add_parser("kernel", help="compute a kernel matrix")
    p_kernel.add_argument("--kind", required=True, choices=["linear", "gaussian", "spectrum", "delta"])
    p_kernel.add_argument("--features")
    p_kernel.add_argument("--sequences")
    p_kernel.add_argument("--bag-of-words", dest="bag_of_words")
    p_kernel.add_argument("--right-features", dest="right_features")
    p_kernel.add_argument("--right-sequences", dest="right_sequences")
    p_kernel.add_argument("--right-bag-of-words", dest="right_bag_of_words")
    p_kernel.add_argument("--gamma", type=_positive_float)
    p_kernel.add_argument("--kmer", type=int)
    p_kernel.add_argument("--normalize", action="store_true")
    p_kernel.add_argument("--normalize-rows", action="store_true",
                          help="l2-normalize bag-of-words rows before the kernel")
    p_kernel.add_argument("--out", required=True)
    p_kernel.set_defaults(func=_cmd_kernel)

    p_fit = sub.add_parser("fit", help="train a model from kernel and label matrices")
    p_fit.add_argument("--method", required=True, choices=["two-step", "pairwise", "pairwise-ols"])
    p_fit.add_argument("--object-kernel", required=True)
    p_fit.add_argument("--task-kernel", required=True)
    p_fit.add_argument("--labels", required=True)
    p_fit.add_argument("--target-task-kernel")
    p_fit.add_argument("--target-labels")
    p_fit.add_argument("--lambda-t", type=_positive_float, default=1.0)
    p_fit.add_argument("--lambda-d", type=_positive_float, default=1.0)
    p_fit.add_argument("--lambda", dest="lam", type=_positive_float)
    p_fit.add_argument("--mean-impute", action="store_true")
    p_fit.add_argument("--out", required=True)
    p_fit.set_defaults(func=_cmd_fit)

    p_predict = sub.add_parser("predict", help="apply a saved model to new kernel rows")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--object-kernel-rows", required=True)
    p_predict.add_argument("--task-kernel-rows")
    p_predict.add_argument("--out", required=True)
    p_predict.set_defaults(func=_cmd_predict)

    p_loocv = sub.add_parser("loocv", help="LOOCV grid search for both lambdas")
    p_loocv.add_argument("--object-kernel", required=True)
    p_loocv.add_argument("--task-kernel", required=True)
    p_loocv.add_argument("--labels", required=True)
    p_loocv.add_argument("--grid", type=_grid_arg, default=DEFAULT_GRID)
    p_loocv.add_argument("--lambda-d-grid", type=_grid_arg)
    p_loocv.add_argument("--metric", choices=["mse", "cindex"], default="mse")
    p_loocv.add_argument("--verbatim-step2-loo", action="store_true",
                         help="reproduce the printed step-2 residual formula (residuals vs Y)")
    p_loocv.add_argument("--target-task-kernel")
    p_loocv.add_argument("--target-labels")
    p_loocv.add_argument("--mean-impute", action="store_true")
    p_loocv.add_argument("--model-out")
    p_loocv.add_argument("--out", required=True)
    p_loocv.set_defaults(func=_cmd_loocv)

    p_exp = sub.add_parser("experiment", help="run a learning-curve experiment plan")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--seed", type=int, help="override the plan seed")
    p_exp.add_argument("--threads", type=int, default=_default_threads())
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--json-out")
    p_exp.add_argument("--raw-out")
    p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fit" and args.method == "two-step" and not args.target_task_kernel:
        parser.error("fit --method two-step requires --target-task-kernel")
    try:
        return args.func(args)
    except (DyadkrrError, OSError, json.JSONDecodeError) as exc:
        print(f"dyadkrr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
