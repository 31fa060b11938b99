"""Deterministic dense linear algebra used by every learner in the package.

Provides economy SVD / PSD eigendecompositions with a fixed sign convention,
column-stacking vec/unvec, Kronecker products applied without materialization,
and shifted-inverse application through a stored eigensystem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

# Eigenvalues below RANK_RTOL * largest are treated as exactly zero and their
# eigenvectors dropped.  Negative eigenvalues above -PSD_RTOL * largest are
# clipped to zero; anything more negative means the input was not PSD.
RANK_RTOL = 1e-12
PSD_RTOL = 1e-8
SYMMETRY_ATOL = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenvectors and nonnegative eigenvalues, descending.

    ``vectors`` is n-by-k with orthonormal columns and ``values`` holds the k
    corresponding eigenvalues of the (implicit) PSD matrix
    ``vectors @ diag(values) @ vectors.T``.  k < n after rank truncation.
    """

    vectors: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if vectors.ndim != 2 or values.ndim != 1:
            raise InvalidInputError("eigensystem needs 2-d vectors and 1-d values")
        if vectors.shape[1] != values.shape[0]:
            raise InvalidInputError(
                f"{vectors.shape[1]} eigenvectors but {values.shape[0]} eigenvalues"
            )
        if not (np.all(np.isfinite(vectors)) and np.all(np.isfinite(values))):
            raise InvalidInputError("eigensystem entries must be finite")
        if np.any(values < 0):
            raise InvalidInputError("eigenvalues must be nonnegative")
        if np.any(np.diff(values) > 0):
            raise InvalidInputError("eigenvalues must be sorted descending")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        """Row dimension of the decomposed matrix."""
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def reconstruct(self) -> np.ndarray:
        """Dense PSD matrix represented by this eigensystem."""
        return (self.vectors * self.values) @ self.vectors.T


def _require_finite_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-d matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is nonnegative.

    Makes decompositions reproducible across LAPACK builds for golden tests.
    """
    if vectors.shape[1] == 0:
        return vectors
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _truncate(vectors: np.ndarray, values: np.ndarray) -> EigenSystem:
    largest = values[0] if values.size else 0.0
    keep = values > RANK_RTOL * largest
    return EigenSystem(_fix_signs(vectors[:, keep]), values[keep])


def economy_svd(features) -> EigenSystem:
    """Eigensystem of ``features @ features.T`` via the thin SVD of ``features``.

    Returns the left singular vectors with the squared singular values, so the
    result decomposes the Gram (kernel) matrix of the feature rows.  Directions
    whose squared singular value falls below ``RANK_RTOL`` times the largest
    are dropped.
    """
    features = _require_finite_matrix(features, "features")
    u, s, _ = np.linalg.svd(features, full_matrices=False)
    return _truncate(u, s * s)


def psd_eigen(kernel) -> EigenSystem:
    """Eigendecomposition of a symmetric PSD kernel matrix.

    Symmetry is required within ``SYMMETRY_ATOL`` (scaled by the largest
    entry); tiny negative eigenvalues from floating-point round-off are
    clipped to zero, anything more negative raises.
    """
    kernel = _require_finite_matrix(kernel, "kernel")
    n, m = kernel.shape
    if n != m:
        raise InvalidInputError(f"kernel must be square, got {n}x{m}")
    scale = max(1.0, float(np.max(np.abs(kernel))))
    if np.max(np.abs(kernel - kernel.T)) > SYMMETRY_ATOL * scale:
        raise InvalidInputError("kernel is not symmetric within tolerance")
    values, vectors = np.linalg.eigh((kernel + kernel.T) / 2.0)
    values, vectors = values[::-1], vectors[:, ::-1]
    largest = max(values[0], 0.0)
    if values[-1] < -PSD_RTOL * max(largest, 1.0):
        raise InvalidInputError(
            f"kernel is not PSD: smallest eigenvalue {values[-1]:.3e}"
        )
    return _truncate(vectors, np.maximum(values, 0.0))


def vec(x) -> np.ndarray:
    """Column-stacking vectorization: vec([[1,2],[3,4]]) = [1,3,2,4]."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InvalidInputError("vec expects a 2-d matrix")
    return x.reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`; raises if the length does not match."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError("unvec expects a 1-d vector")
    if v.shape[0] != rows * cols:
        raise InvalidInputError(
            f"cannot reshape length {v.shape[0]} into {rows}x{cols}"
        )
    return v.reshape((rows, cols), order="F")


def kron_apply(a, b, x) -> np.ndarray:
    """Matrix form of ``(a kron b) @ vec(x)`` without building the product.

    Returns ``b @ x @ a.T``; under the column-stacking convention
    ``vec(kron_apply(a, b, x)) == np.kron(a, b) @ vec(x)``.
    """
    a = _require_finite_matrix(a, "a")
    b = _require_finite_matrix(b, "b")
    x = _require_finite_matrix(x, "x")
    if b.shape[1] != x.shape[0]:
        raise InvalidInputError(
            f"b has {b.shape[1]} columns but x has {x.shape[0]} rows"
        )
    if a.shape[1] != x.shape[1]:
        raise InvalidInputError(
            f"a has {a.shape[1]} columns but x has {x.shape[1]} columns"
        )
    return b @ x @ a.T


def shifted_inverse_apply(es: EigenSystem, lam: float, m) -> np.ndarray:
    """Apply ``(K + lam*I)^{-1}`` to ``m`` through the eigensystem of K.

    For a rank-deficient eigensystem this is the regularized pseudo-apply
    ``V diag(1/(values+lam)) V.T @ m``: components of ``m`` outside the stored
    eigenspace are mapped to zero rather than scaled by 1/lam.
    """
    if not (np.isscalar(lam) and np.isfinite(lam) and lam > 0):
        raise InvalidParameterError(f"lambda must be a positive real, got {lam!r}")
    m = np.asarray(m, dtype=float)
    squeeze = m.ndim == 1
    if squeeze:
        m = m[:, None]
    m = _require_finite_matrix(m, "m")
    if m.shape[0] != es.dim:
        raise InvalidInputError(
            f"m has {m.shape[0]} rows but the eigensystem has dimension {es.dim}"
        )
    coeff = es.vectors.T @ m
    result = es.vectors @ (coeff / (es.values + lam)[:, None])
    return result[:, 0] if squeeze else result
