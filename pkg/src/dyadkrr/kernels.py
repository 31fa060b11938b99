"""Kernels over objects and tasks, plus composite kernels on object-task pairs.

Pair indices follow one fixed convention everywhere: pair (i, j) = (object i,
task j) sits at vec position j*n + i, which makes the pairwise Gram matrix the
Kronecker product with the task kernel as the left factor.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidInputError, InvalidParameterError

KERNEL_KINDS = ("linear", "gaussian", "spectrum", "delta", "precomputed")


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a base kernel.

    gamma is required for gaussian kernels, k for spectrum kernels; normalize
    rescales to unit self-similarity, k(x,y)/sqrt(k(x,x)k(y,y)).
    """

    kind: str
    gamma: float | None = None
    k: int | None = None
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidParameterError(
                f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}"
            )
        if self.kind == "gaussian":
            if self.gamma is None or not self.gamma > 0:
                raise InvalidParameterError("gaussian kernel requires gamma > 0")
        if self.kind == "spectrum":
            if self.k is None or int(self.k) < 1:
                raise InvalidParameterError("spectrum kernel requires k >= 1")
            object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class PairwiseKernelSpec:
    """Composite kernel on object-task pairs.

    variant "tensor_product" multiplies the two base kernels; "two_step" adds
    the delta-kernel shifts of the two-step method and requires both lambdas.
    """

    object_kernel: KernelSpec
    task_kernel: KernelSpec
    variant: str = "tensor_product"
    lambda_d: float | None = None
    lambda_t: float | None = None

    def __post_init__(self):
        if self.variant not in ("tensor_product", "two_step"):
            raise InvalidParameterError(f"unknown pairwise variant {self.variant!r}")
        if self.variant == "two_step":
            if self.lambda_d is None or not self.lambda_d > 0:
                raise InvalidParameterError("two_step variant requires lambda_d > 0")
            if self.lambda_t is None or not self.lambda_t > 0:
                raise InvalidParameterError("two_step variant requires lambda_t > 0")


def delta_kernel(id_left, id_right) -> float:
    """Identity indicator: 1.0 iff both arguments are equal."""
    return 1.0 if id_left == id_right else 0.0


def _as_feature_matrix(inputs, name: str) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-d feature array")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def _kmer_counts(sequence: str, k: int) -> Counter:
    return Counter(sequence[i : i + k] for i in range(len(sequence) - k + 1))


def _spectrum_matrix(left, right, k: int) -> np.ndarray:
    for seqs, name in ((left, "left_inputs"), (right, "right_inputs")):
        for s in seqs:
            if len(s) < k:
                raise InvalidInputError(
                    f"{name}: sequence of length {len(s)} is shorter than k={k}"
                )
    left_counts = [_kmer_counts(s, k) for s in left]
    right_counts = [_kmer_counts(s, k) for s in right]
    out = np.empty((len(left), len(right)))
    for i, ci in enumerate(left_counts):
        for j, cj in enumerate(right_counts):
            small, big = (ci, cj) if len(ci) <= len(cj) else (cj, ci)
            out[i, j] = float(sum(c * big[w] for w, c in small.items() if w in big))
    return out


def _raw_kernel_matrix(spec: KernelSpec, left, right) -> np.ndarray:
    if spec.kind == "linear":
        xl = _as_feature_matrix(left, "left_inputs")
        xr = _as_feature_matrix(right, "right_inputs")
        if xl.shape[1] != xr.shape[1]:
            raise InvalidInputError(
                f"feature dimensions differ: {xl.shape[1]} vs {xr.shape[1]}"
            )
        return xl @ xr.T
    if spec.kind == "gaussian":
        xl = _as_feature_matrix(left, "left_inputs")
        xr = _as_feature_matrix(right, "right_inputs")
        if xl.shape[1] != xr.shape[1]:
            raise InvalidInputError(
                f"feature dimensions differ: {xl.shape[1]} vs {xr.shape[1]}"
            )
        sq = (
            np.sum(xl * xl, axis=1)[:, None]
            - 2.0 * (xl @ xr.T)
            + np.sum(xr * xr, axis=1)[None, :]
        )
        return np.exp(-spec.gamma * np.maximum(sq, 0.0))
    if spec.kind == "spectrum":
        return _spectrum_matrix(list(left), list(right), spec.k)
    if spec.kind == "delta":
        left = list(left)
        right = list(right)
        return np.array(
            [[delta_kernel(a, b) for b in right] for a in left], dtype=float
        )
    raise InvalidInputError(
        "precomputed kernels are loaded from file, not evaluated; "
        "see dataio.load_matrix(kind='kernel')"
    )


def kernel_matrix(spec: KernelSpec, left_inputs, right_inputs=None) -> np.ndarray:
    """Gram matrix with entry (i, j) = k(left_inputs[i], right_inputs[j]).

    With ``right_inputs`` omitted the self-kernel is computed and the result
    is symmetric PSD.  Normalization divides by the geometric mean of the two
    self-similarities, so normalized self-kernels have a unit diagonal.
    """
    square = right_inputs is None
    if square:
        right_inputs = left_inputs
    if len(left_inputs) == 0 or len(right_inputs) == 0:
        raise InvalidInputError("kernel inputs must be non-empty")
    out = _raw_kernel_matrix(spec, left_inputs, right_inputs)
    if spec.normalize:
        diag_l = (
            np.diag(out).copy()
            if square
            else np.diag(_raw_kernel_matrix(spec, left_inputs, left_inputs)).copy()
        )
        diag_r = (
            diag_l
            if square
            else np.diag(_raw_kernel_matrix(spec, right_inputs, right_inputs)).copy()
        )
        if np.any(diag_l <= 0) or np.any(diag_r <= 0):
            raise InvalidInputError(
                "cannot normalize: an input has zero self-similarity"
            )
        out = out / np.sqrt(np.outer(diag_l, diag_r))
    if square:
        out = (out + out.T) / 2.0
    return out


def _check_symmetric(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T)) > 1e-8 * scale:
        raise InvalidInputError(f"{name} is not symmetric within tolerance")
    return m


def pairwise_kernel_matrix(
    spec: PairwiseKernelSpec, K, G, max_pair_dim: int = 4096
) -> np.ndarray:
    """Dense Gram matrix over all object-task pairs; desk-scale only.

    Entry ((i,j), (i',j')) equals K[i,i'] * G[j,j'] for the tensor_product
    variant, with pair (i, j) at position j*n + i.  The two_step variant
    shifts both factors by their lambdas first.  Raises CapacityError when
    the n*m pair count exceeds ``max_pair_dim``.
    """
    K = _check_symmetric("K", K)
    G = _check_symmetric("G", G)
    n, m = K.shape[0], G.shape[0]
    if n * m > max_pair_dim:
        raise CapacityError(
            f"pairwise matrix would be {n * m}x{n * m}; cap is {max_pair_dim}"
        )
    if spec.variant == "two_step":
        K = K + spec.lambda_d * np.eye(n)
        G = G + spec.lambda_t * np.eye(m)
    return np.kron(G, K)
