"""Shared fixtures and independent oracles used across the test modules.

The oracles here deliberate recompute everything the slow way (dense solves,
per-entry loops, retrain-from-scratch cross-validation) so that the fast
closed-form paths in the library are checked against code that shares none of
their structure.
"""

from __future__ import annotations

import numpy as np
import pytest


def rand_psd(rng, n, jitter=0.3):
    """Random full-rank PSD matrix A A^T + jitter I."""
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# ---------------------------------------------------------------------------
# brute-force oracles


def dense_pairwise_solve(K, G, Y, lam):
    """Solve (kron(G, K) + lam I) alpha = vec(Y) densely; returns unvec(alpha)."""
    n, m = Y.shape
    gamma = np.kron(G, K) + lam * np.eye(n * m)
    alpha = np.linalg.solve(gamma, Y.reshape(-1, order="F"))
    return alpha.reshape((n, m), order="F")


def dense_two_step_ols(K, G, Y, lambda_d, lambda_t):
    """OLS on the delta-shifted pairwise kernel, solved densely."""
    n, m = Y.shape
    gamma = np.kron(G + lambda_t * np.eye(m), K + lambda_d * np.eye(n))
    alpha = np.linalg.solve(gamma, Y.reshape(-1, order="F"))
    return alpha.reshape((n, m), order="F")


def brute_loo_columns(Y, G, lam):
    """Leave-column-out predictions by retraining per held-out column."""
    n, m = Y.shape
    out = np.empty_like(Y)
    for j in range(m):
        keep = [t for t in range(m) if t != j]
        shifted = G[np.ix_(keep, keep)] + lam * np.eye(m - 1)
        duals = Y[:, keep] @ np.linalg.inv(shifted)
        out[:, j] = duals @ G[keep, j]
    return out


def brute_loo_rows(labels, K, lam):
    """Leave-row-out predictions by retraining per held-out row."""
    n, m = labels.shape
    out = np.empty_like(labels)
    for i in range(n):
        keep = [o for o in range(n) if o != i]
        shifted = K[np.ix_(keep, keep)] + lam * np.eye(n - 1)
        duals = np.linalg.solve(shifted, labels[keep, :])
        out[i, :] = K[i, keep] @ duals
    return out


def brute_select(Y, K, G, grid, metric="mse"):
    """Exhaustive grid search by brute-force LOO retraining for both steps.

    Mirrors the strict-improvement, ascending-order tie-breaking of the
    library's selection.
    """
    from dyadkrr.metrics import mean_slice_c_index

    def error(pred, truth, axis):
        if metric == "mse":
            return float(np.mean((pred - truth) ** 2))
        return 1.0 - mean_slice_c_index(truth, pred, axis)

    grid = sorted(float(v) for v in grid)
    best_t, best_e, best_r = None, np.inf, None
    for lam_t in grid:
        r = brute_loo_columns(Y, G, lam_t)
        e = error(r, Y, "columns")
        if e < best_e:
            best_t, best_e, best_r = lam_t, e, r
    best_d, best_e2 = None, np.inf
    for lam_d in grid:
        t = brute_loo_rows(best_r, K, lam_d)
        e = error(t, Y, "rows")
        if e < best_e2:
            best_d, best_e2 = lam_d, e
    return best_t, best_d


def brute_loo_pairs(Y, K, G, lam):
    """Leave-one-pair-out by dense retraining on the remaining nm - 1 pairs."""
    n, m = Y.shape
    gamma = np.kron(G, K)
    y = Y.reshape(-1, order="F")
    out = np.empty(n * m)
    for p in range(n * m):
        keep = [q for q in range(n * m) if q != p]
        sub = gamma[np.ix_(keep, keep)] + lam * np.eye(n * m - 1)
        alpha = np.linalg.solve(sub, y[keep])
        out[p] = gamma[p, keep] @ alpha
    return out.reshape((n, m), order="F")


def brute_kmer_kernel(s1, s2, k):
    """Spectrum kernel by explicit enumeration of every k-mer pair."""
    total = 0
    for i in range(len(s1) - k + 1):
        for j in range(len(s2) - k + 1):
            if s1[i : i + k] == s2[j : j + k]:
                total += 1
    return float(total)
