"""Laplace posterior: likelihood math, mode search, prediction, updates."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from prefgp import (
    FitFailureError,
    InvalidInputError,
    InvalidQueryError,
    KernelConfig,
    PreferenceDatum,
    empty_model,
    fit,
    likelihood_grad_hess,
    log_likelihood,
    predict_pair,
    update,
)
from prefgp.kernels import kernel_matrix

from conftest import random_fitted_model, random_problem, ref_log_posterior


def cfg1d(jitter=1e-8):
    return KernelConfig(kind="anchored_rbf", theta=1.0,
                        anchor=np.array([0.5]), jitter=jitter)


def cfg2d(jitter=1e-8, theta=1.0):
    return KernelConfig(kind="anchored_rbf", theta=theta,
                        anchor=np.array([0.5, 0.5]), jitter=jitter)


class TestPreferenceDatum:
    def test_rejects_self_comparison(self):
        with pytest.raises(InvalidQueryError):
            PreferenceDatum(3, 3, 1)

    def test_rejects_bad_response_and_indices(self):
        with pytest.raises(InvalidInputError):
            PreferenceDatum(0, 1, 2)
        with pytest.raises(InvalidInputError):
            PreferenceDatum(-1, 1, 0)


class TestLogLikelihood:
    def test_even_comparison_is_log_half(self):
        val = log_likelihood(np.array([0.3, 0.3]), (PreferenceDatum(0, 1, 1),), 1.0)
        assert val == pytest.approx(-0.6931471805599453, abs=1e-15)

    def test_unit_standardized_difference(self):
        sigma = 0.7
        f = np.array([math.sqrt(2.0) * sigma, 0.0])
        val = log_likelihood(f, (PreferenceDatum(0, 1, 1),), sigma)
        # log Phi(1), recomputed via erfc
        assert val == pytest.approx(-0.1727537790234499, abs=1e-12)

    def test_additivity_over_data(self):
        data = (PreferenceDatum(0, 1, 1), PreferenceDatum(2, 3, 0))
        val = log_likelihood(np.zeros(4), data, 1.0)
        assert val == pytest.approx(2.0 * math.log(0.5), abs=1e-15)

    def test_losing_response_mirrors_sign(self):
        f = np.array([1.0, -1.0])
        win = log_likelihood(f, (PreferenceDatum(0, 1, 1),), 1.0)
        lose = log_likelihood(f, (PreferenceDatum(0, 1, 0),), 1.0)
        assert win == pytest.approx(log_likelihood(-f, (PreferenceDatum(0, 1, 0),), 1.0))
        assert lose < win

    def test_no_overflow_deep_in_the_tail(self):
        f = np.array([40.0, -40.0])
        val = log_likelihood(f, (PreferenceDatum(0, 1, 0),), 1.0)
        assert np.isfinite(val) and val < -1000.0

    def test_index_out_of_range_rejected(self):
        with pytest.raises(InvalidInputError):
            log_likelihood(np.zeros(2), (PreferenceDatum(0, 5, 1),), 1.0)


class TestGradHess:
    def test_zero_data_gives_zeros(self):
        grad, w = likelihood_grad_hess(np.zeros(3), (), 1.0)
        assert not grad.any() and not w.any()

    def test_gradient_matches_central_differences(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 6))
            f = rng.normal(0, 1, size=n)
            m = int(rng.integers(1, 5))
            data = tuple(PreferenceDatum(*map(int, rng.choice(n, 2, replace=False)),
                                         int(rng.integers(0, 2))) for _ in range(m))
            sigma = float(rng.uniform(0.3, 2.0))
            grad, _ = likelihood_grad_hess(f, data, sigma)
            step = 1e-5
            for k in range(n):
                e = np.zeros(n)
                e[k] = step
                fd = (log_likelihood(f + e, data, sigma)
                      - log_likelihood(f - e, data, sigma)) / (2 * step)
                assert grad[k] == pytest.approx(fd, abs=1e-6)

    def test_curvature_matches_central_difference_hessian(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 5))
            f = rng.normal(0, 1, size=n)
            m = int(rng.integers(1, 4))
            data = tuple(PreferenceDatum(*map(int, rng.choice(n, 2, replace=False)),
                                         int(rng.integers(0, 2))) for _ in range(m))
            sigma = float(rng.uniform(0.5, 1.5))
            _, w = likelihood_grad_hess(f, data, sigma)
            step = 1e-5
            for k in range(n):
                e = np.zeros(n)
                e[k] = step
                gp, _ = likelihood_grad_hess(f + e, data, sigma)
                gm, _ = likelihood_grad_hess(f - e, data, sigma)
                fd_row = (gp - gm) / (2 * step)
                # W is the negative Hessian
                np.testing.assert_allclose(-w[k], fd_row, atol=1e-4)

    def test_curvature_is_symmetric_psd(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 6))
            f = rng.normal(0, 1, size=n)
            data = tuple(PreferenceDatum(*map(int, rng.choice(n, 2, replace=False)),
                                         int(rng.integers(0, 2))) for _ in range(4))
            _, w = likelihood_grad_hess(f, data, 1.0)
            np.testing.assert_array_equal(w, w.T)
            assert np.linalg.eigvalsh(w).min() >= -1e-12


class TestFit:
    def test_no_data_mode_is_zero(self):
        pts = np.array([[0.1, 0.1], [0.9, 0.9]])
        model = fit(pts, (), cfg2d(), 1.0)
        np.testing.assert_array_equal(model.mode, np.zeros(2))

    def test_one_query_matches_direct_maximization(self):
        pts = np.array([[0.8], [0.2]])
        data = (PreferenceDatum(0, 1, 1),)
        model = fit(pts, data, cfg1d(), 1.0)
        res = minimize(
            lambda f: -ref_log_posterior(f, data, cfg1d(), pts, 1.0),
            np.zeros(2), method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 20000})
        np.testing.assert_allclose(model.mode, res.x, atol=1e-3)
        # the winner's latent reward sits above the loser's
        assert model.mode[0] > 0 > model.mode[1]

    def test_random_small_problems_match_direct_maximization(self, rng):
        for _ in range(5):
            points, data, kernel, sigma = random_problem(
                rng, n_points=int(rng.integers(2, 5)), n_data=int(rng.integers(1, 4)))
            model = fit(points, data, kernel, sigma)
            res = minimize(
                lambda f: -ref_log_posterior(f, data, kernel, points, sigma),
                np.zeros(points.shape[0]), method="Nelder-Mead",
                options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 40000,
                         "maxfev": 40000})
            np.testing.assert_allclose(model.mode, res.x, atol=1e-3)

    def test_mode_is_stationary(self, rng):
        for _ in range(5):
            model = random_fitted_model(rng, n_points=5, n_data=6)
            grad_ll, _ = likelihood_grad_hess(model.mode, model.data, model.sigma)
            grad = grad_ll - np.linalg.solve(model.gram, model.mode)
            assert np.max(np.abs(grad)) <= 1e-8

    def test_swap_and_flip_leaves_mode_unchanged(self, rng):
        points, data, kernel, sigma = random_problem(rng, 4, 4)
        flipped = tuple(PreferenceDatum(d.second, d.first, 1 - d.response)
                        for d in data)
        a = fit(points, data, kernel, sigma)
        b = fit(points, flipped, kernel, sigma)
        np.testing.assert_array_equal(a.mode, b.mode)

    def test_negating_all_responses_negates_mode(self, rng):
        points, data, kernel, sigma = random_problem(rng, 4, 5)
        negated = tuple(PreferenceDatum(d.first, d.second, 1 - d.response)
                        for d in data)
        a = fit(points, data, kernel, sigma)
        b = fit(points, negated, kernel, sigma)
        np.testing.assert_allclose(a.mode, -b.mode, atol=1e-8)

    def test_refit_is_bit_deterministic(self, rng):
        points, data, kernel, sigma = random_problem(rng, 5, 6)
        a = fit(points, data, kernel, sigma)
        b = fit(points, data, kernel, sigma)
        np.testing.assert_array_equal(a.mode, b.mode)
        np.testing.assert_array_equal(a.correction, b.correction)

    def test_laplace_covariance_nearly_psd(self, rng):
        for _ in range(5):
            model = random_fitted_model(rng, n_points=5, n_data=7)
            post = model.gram - model.gram @ model.correction @ model.gram
            assert np.linalg.eigvalsh(0.5 * (post + post.T)).min() >= -1e-9

    def test_nonconvergence_raises_with_grad_norm(self, rng, monkeypatch):
        monkeypatch.setattr("prefgp.gp.MAX_NEWTON_ITERS", 1)
        points, data, kernel, sigma = random_problem(rng, 4, 4)
        with pytest.raises(FitFailureError) as exc:
            fit(points, data, kernel, sigma)
        assert exc.value.grad_norm > 0.0

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(InvalidInputError):
            fit(np.array([[0.1], [0.9]]), (), cfg1d(), 0.0)


class TestPredictPair:
    def test_anchor_pair_is_pinned_to_zero(self, rng):
        model = random_fitted_model(rng, n_points=4, n_data=4)
        anchor = model.kernel.anchor
        pred = predict_pair(model, anchor, anchor)
        np.testing.assert_allclose(pred.mean, 0.0, atol=1e-9)
        np.testing.assert_allclose(pred.cov, 0.0, atol=1e-9)

    def test_zero_data_recovers_prior(self):
        model = empty_model(cfg2d(), 1.0)
        a, b = np.array([0.2, 0.3]), np.array([0.9, 0.8])
        pred = predict_pair(model, a, b)
        prior = kernel_matrix(np.vstack([a, b]), np.vstack([a, b]), model.kernel)
        np.testing.assert_array_equal(pred.mean, np.zeros(2))
        np.testing.assert_allclose(pred.cov, prior, atol=1e-15)

    def test_training_point_mean_matches_mode(self, rng):
        model = random_fitted_model(rng, n_points=4, n_data=4)
        for i in range(model.n_points):
            pred = predict_pair(model, model.points[i], model.kernel.anchor)
            assert pred.mean[0] == pytest.approx(model.mode[i], abs=1e-6)

    def test_identical_inputs_share_one_computation(self, rng):
        model = random_fitted_model(rng, n_points=4, n_data=4)
        x = np.array([0.3, 0.8])
        pred = predict_pair(model, x, x)
        assert pred.mean[0] == pred.mean[1]
        assert pred.cov[0, 0] == pred.cov[0, 1] == pred.cov[1, 1]
        g = pred.cov[0, 0] + pred.cov[1, 1] - 2 * pred.cov[0, 1]
        assert g == 0.0

    def test_covariance_is_symmetric_with_clamped_diagonal(self, rng):
        model = random_fitted_model(rng, n_points=5, n_data=6)
        pred = predict_pair(model, np.array([0.1, 0.2]), np.array([0.7, 0.9]))
        np.testing.assert_array_equal(pred.cov, pred.cov.T)
        assert pred.cov[0, 0] >= 0.0 and pred.cov[1, 1] >= 0.0


class TestUpdate:
    def test_empty_plus_one_datum_equals_direct_fit(self):
        model = empty_model(cfg2d(), 1.0)
        a, b = np.array([0.2, 0.3]), np.array([0.8, 0.7])
        updated = update(model, a, b, 1)
        direct = fit(np.vstack([a, b]), (PreferenceDatum(0, 1, 1),), cfg2d(), 1.0)
        np.testing.assert_array_equal(updated.mode, direct.mode)
        np.testing.assert_array_equal(updated.points, direct.points)

    def test_observed_preference_moves_the_mean_difference(self, rng):
        model = random_fitted_model(rng, n_points=4, n_data=2)
        a, b = np.array([0.15, 0.85]), np.array([0.85, 0.15])
        before = predict_pair(model, a, b)
        after_model = update(model, a, b, 1)
        after = predict_pair(after_model, a, b)
        assert (after.mean[0] - after.mean[1]) > (before.mean[0] - before.mean[1])

    def test_repeating_a_datum_shrinks_difference_variance(self, rng):
        model = empty_model(cfg2d(), 1.0)
        a, b = np.array([0.2, 0.2]), np.array([0.8, 0.8])

        def g_of(m):
            pred = predict_pair(m, a, b)
            return pred.cov[0, 0] + pred.cov[1, 1] - 2 * pred.cov[0, 1]

        once = update(model, a, b, 1)
        twice = update(once, a, b, 1)
        assert g_of(once) < g_of(model)
        assert g_of(twice) < g_of(once)

    def test_update_is_non_destructive(self, rng):
        model = random_fitted_model(rng, n_points=3, n_data=2)
        before_mode = model.mode.copy()
        before_n = model.n_points
        update(model, np.array([0.11, 0.17]), np.array([0.71, 0.77]), 0)
        np.testing.assert_array_equal(model.mode, before_mode)
        assert model.n_points == before_n

    def test_near_duplicate_vectors_reuse_the_point(self):
        model = empty_model(cfg2d(), 1.0)
        a, b = np.array([0.2, 0.3]), np.array([0.8, 0.7])
        m1 = update(model, a, b, 1)
        m2 = update(m1, a + 1e-15, b, 0)
        assert m2.n_points == 2
        assert len(m2.data) == 2

    def test_same_point_comparison_rejected(self):
        model = empty_model(cfg2d(), 1.0)
        x = np.array([0.4, 0.6])
        with pytest.raises(InvalidQueryError):
            update(model, x, x + 1e-15, 1)

    def test_datum_form_refits_on_existing_points(self, rng):
        model = random_fitted_model(rng, n_points=4, n_data=2)
        updated = update(model, PreferenceDatum(0, 3, 1))
        assert len(updated.data) == len(model.data) + 1
        assert updated.n_points == model.n_points

    def test_datum_with_vectors_together_rejected(self, rng):
        model = random_fitted_model(rng, n_points=3, n_data=1)
        with pytest.raises(InvalidInputError):
            update(model, PreferenceDatum(0, 1, 1), np.array([0.1, 0.2]))
