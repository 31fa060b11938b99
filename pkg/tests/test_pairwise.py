import numpy as np
import pytest

from conftest import brute_loo_pairs, dense_pairwise_solve, dense_two_step_ols, rand_psd
from dyadkrr.errors import InvalidInputError, InvalidParameterError
from dyadkrr.linalg import psd_eigen
from dyadkrr.pairwise import (
    fit_pairwise_tikhonov,
    fit_pairwise_two_step_ols,
    loo_pair_predictions,
    predict_grid,
    predict_pair,
)


def make_instance(rng, n, m, jitter=0.3):
    k = rand_psd(rng, n, jitter)
    g = rand_psd(rng, m, jitter)
    y = rng.standard_normal((n, m))
    return psd_eigen(k), psd_eigen(g), k, g, y


class TestFitPairwiseTikhonov:
    def test_scalar(self):
        model = fit_pairwise_tikhonov(psd_eigen([[1.0]]), psd_eigen([[1.0]]), [[1.0]], 1.0)
        assert model.dual_matrix == pytest.approx(np.array([[0.5]]))

    def test_heavy_regularization_shrinks(self, rng):
        eo, et, k, g, y = make_instance(rng, 4, 3)
        model = fit_pairwise_tikhonov(eo, et, y, 1e9)
        assert np.linalg.norm(model.dual_matrix) < 1e-6 * np.linalg.norm(y)

    def test_matches_dense_solve(self, rng):
        eo, et, k, g, y = make_instance(rng, 4, 3)
        model = fit_pairwise_tikhonov(eo, et, y, 0.8)
        assert np.max(np.abs(model.dual_matrix - dense_pairwise_solve(k, g, y, 0.8))) < 1e-9

    def test_all_small_instances_match_dense(self, rng):
        for n in range(1, 9):
            for m in range(1, 9):
                if n * m > 64:
                    continue
                eo, et, k, g, y = make_instance(rng, n, m)
                lam = float(rng.choice([0.1, 1.0, 10.0]))
                model = fit_pairwise_tikhonov(eo, et, y, lam)
                dense = dense_pairwise_solve(k, g, y, lam)
                assert np.max(np.abs(model.dual_matrix - dense)) < 1e-9

    def test_rejects_nonpositive_lambda(self, rng):
        eo, et, _, _, y = make_instance(rng, 3, 2)
        with pytest.raises(InvalidParameterError):
            fit_pairwise_tikhonov(eo, et, y, 0.0)

    def test_rejects_incomplete_labels(self, rng):
        eo, et, _, _, y = make_instance(rng, 3, 2)
        y[0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            fit_pairwise_tikhonov(eo, et, y, 1.0)


class TestFitPairwiseTwoStepOls:
    def test_scalar(self):
        model = fit_pairwise_two_step_ols(
            psd_eigen([[1.0]]), psd_eigen([[1.0]]), [[1.0]], 1.0, 1.0
        )
        assert model.dual_matrix == pytest.approx(np.array([[0.25]]))

    def test_vanishing_shift_limit(self, rng):
        eo, et, k, g, y = make_instance(rng, 4, 3, jitter=1.0)
        model = fit_pairwise_two_step_ols(eo, et, y, 1e-9, 1e-9)
        unshifted = np.linalg.solve(k, y) @ np.linalg.inv(g)
        assert np.max(np.abs(model.dual_matrix - unshifted)) < 1e-5

    def test_matches_dense_eq4_solve(self, rng):
        eo, et, k, g, y = make_instance(rng, 5, 4)
        model = fit_pairwise_two_step_ols(eo, et, y, 0.6, 1.7)
        dense = dense_two_step_ols(k, g, y, 0.6, 1.7)
        assert np.max(np.abs(model.dual_matrix - dense)) < 1e-8

    def test_interpolates_training_pairs_with_delta_rows(self, rng):
        # OLS on the shifted kernel reproduces every training label exactly
        # once the query rows carry the delta contributions
        eo, et, k, g, y = make_instance(rng, 4, 3)
        ld, lt = 0.9, 0.4
        model = fit_pairwise_two_step_ols(eo, et, y, ld, lt)
        for i in range(4):
            for j in range(3):
                k_row = k[i, :].copy()
                k_row[i] += ld
                g_row = g[j, :].copy()
                g_row[j] += lt
                assert predict_pair(model, k_row, g_row) == pytest.approx(
                    y[i, j], abs=1e-8
                )


class TestPredictPair:
    def test_zero_dual(self, rng):
        eo, et, _, _, y = make_instance(rng, 3, 2)
        model = fit_pairwise_tikhonov(eo, et, np.zeros((3, 2)), 1.0)
        assert predict_pair(model, np.ones(3), np.ones(2)) == 0.0

    def test_scalar(self):
        model = fit_pairwise_two_step_ols(
            psd_eigen([[1.0]]), psd_eigen([[1.0]]), [[1.0]], 1.0, 1.0
        )
        assert predict_pair(model, [1.0], [1.0]) == pytest.approx(0.25)

    def test_matches_double_sum(self, rng):
        eo, et, _, _, y = make_instance(rng, 4, 3)
        model = fit_pairwise_tikhonov(eo, et, y, 0.5)
        for _ in range(10):
            k_row = rng.standard_normal(4)
            g_row = rng.standard_normal(3)
            explicit = sum(
                model.dual_matrix[i, j] * k_row[i] * g_row[j]
                for i in range(4)
                for j in range(3)
            )
            assert abs(predict_pair(model, k_row, g_row) - explicit) < 1e-12

    def test_bilinearity(self, rng):
        eo, et, _, _, y = make_instance(rng, 4, 3)
        model = fit_pairwise_tikhonov(eo, et, y, 0.5)
        k1, k2 = rng.standard_normal((2, 4))
        g_row = rng.standard_normal(3)
        a, b = 2.5, -1.25
        combined = predict_pair(model, a * k1 + b * k2, g_row)
        split = a * predict_pair(model, k1, g_row) + b * predict_pair(model, k2, g_row)
        assert combined == pytest.approx(split)
        g1, g2 = rng.standard_normal((2, 3))
        combined = predict_pair(model, k1, a * g1 + b * g2)
        split = a * predict_pair(model, k1, g1) + b * predict_pair(model, k1, g2)
        assert combined == pytest.approx(split)

    def test_length_mismatch(self, rng):
        eo, et, _, _, y = make_instance(rng, 3, 2)
        model = fit_pairwise_tikhonov(eo, et, y, 1.0)
        with pytest.raises(InvalidInputError):
            predict_pair(model, np.ones(4), np.ones(2))
        with pytest.raises(InvalidInputError):
            predict_pair(model, np.ones(3), np.ones(3))


class TestPredictGrid:
    def test_matches_pairwise_loop(self, rng):
        eo, et, _, _, y = make_instance(rng, 4, 3)
        model = fit_pairwise_tikhonov(eo, et, y, 0.5)
        rows = rng.standard_normal((5, 4))
        cols = rng.standard_normal((2, 3))
        grid = predict_grid(model, rows, cols)
        for a in range(5):
            for b in range(2):
                assert grid[a, b] == pytest.approx(predict_pair(model, rows[a], cols[b]))


class TestFilterGapCrossCheck:
    def test_prediction_gap_equals_filter_denominator_gap(self, rng):
        # for unseen queries, tikhonov with lam = lt*ld and two-step OLS differ
        # exactly by the gap between the two filter denominators
        eo, et, k, g, y = make_instance(rng, 5, 4)
        lt, ld = 0.7, 1.6
        tik = fit_pairwise_tikhonov(eo, et, y, lt * ld)
        ols = fit_pairwise_two_step_ols(eo, et, y, ld, lt)
        coeff = eo.vectors.T @ y @ et.vectors
        joint = np.outer(eo.values, et.values)
        d_tik = joint + lt * ld
        d_ols = np.outer(eo.values + ld, et.values + lt)
        gap_dual = eo.vectors @ (coeff * (1.0 / d_tik - 1.0 / d_ols)) @ et.vectors.T
        assert np.all(d_ols >= d_tik)  # two-step regularizes at least as hard
        for _ in range(5):
            k_row = rng.standard_normal(5)
            g_row = rng.standard_normal(4)
            gap_pred = predict_pair(tik, k_row, g_row) - predict_pair(ols, k_row, g_row)
            assert gap_pred == pytest.approx(float(k_row @ gap_dual @ g_row), abs=1e-10)


class TestLooPairPredictions:
    def test_matches_bruteforce_retraining(self, rng):
        eo, et, k, g, y = make_instance(rng, 3, 3)
        for lam in (0.1, 1.0, 10.0):
            fast = loo_pair_predictions(eo, et, y, lam)
            brute = brute_loo_pairs(y, k, g, lam)
            assert np.max(np.abs(fast - brute)) < 1e-8

    def test_rejects_nonpositive_lambda(self, rng):
        eo, et, _, _, y = make_instance(rng, 3, 2)
        with pytest.raises(InvalidParameterError):
            loo_pair_predictions(eo, et, y, -1.0)
