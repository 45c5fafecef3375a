"""Environments, feature maps, normalization, and synthetic responders."""

import math

import numpy as np
import pytest
from scipy import stats

from prefgp import (
    DimensionMismatchError,
    InvalidInputError,
    Normalizer,
    TrueReward,
    draw_true_reward,
    evaluate_true_reward,
    generate_pool,
    make_environment,
    noiseless_respond,
    oracle_respond,
    poly2_terms,
)
from prefgp.envs import ENVIRONMENT_NAMES, n_poly2_terms

from conftest import ref_phi


class TestEnvironments:
    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidInputError):
            make_environment("warehouse9d")

    def test_minigolf_features_are_the_controls(self):
        env = make_environment("minigolf2d")
        feats = env.feature_map(np.array([[0.3, 2.0]]))
        np.testing.assert_allclose(feats, [[0.3, 2.0]], atol=0.0)

    def test_tosser_zero_speed_never_leaves(self):
        env = make_environment("tosser2d")
        feats = env.feature_map(np.array([[0.7, 0.0]]))
        assert feats[0, 0] == 0.0  # no horizontal travel
        assert feats[0, 1] == 0.0  # and nothing to spin

    def test_tosser_range_closed_form(self):
        env = make_environment("tosser2d")
        angle, speed = 0.6, 2.5
        feats = env.feature_map(np.array([[angle, speed]]))
        assert feats[0, 0] == pytest.approx(
            speed**2 * math.sin(2 * angle) / 9.81, abs=1e-12)
        assert feats[0, 1] == pytest.approx(
            0.5 * speed * (1 + math.cos(2 * angle)), abs=1e-12)

    def test_driver_features_closed_form(self):
        env = make_environment("driver4d")
        steer, accel, offset = 0.4, -0.2, 0.6
        feats = env.feature_map(np.array([[steer, accel, offset]]))
        heading = 0.5 * steer
        speed = 0.75 + 0.25 * accel
        x = 0.5 * offset + speed * math.sin(heading)
        y = speed * math.cos(heading)
        assert feats[0, 0] == pytest.approx(math.hypot(x - 0.1, y - 0.9), abs=1e-12)
        assert feats[0, 1] == pytest.approx(speed, abs=1e-12)
        assert feats[0, 2] == pytest.approx(heading, abs=1e-12)
        assert feats[0, 3] == pytest.approx(
            min(abs(x + 0.5), abs(x), abs(x - 0.5)), abs=1e-12)

    @pytest.mark.parametrize("name", ENVIRONMENT_NAMES)
    def test_pools_are_normalized_and_in_bounds(self, name):
        env = make_environment(name)
        pool = generate_pool(env, 1000, np.random.default_rng(0))
        assert pool.features.shape == (1000, env.dim)
        assert pool.features.min() >= 0.0 and pool.features.max() <= 1.0
        lo, hi = env.param_bounds[:, 0], env.param_bounds[:, 1]
        assert np.all(pool.provenance >= lo) and np.all(pool.provenance <= hi)

    def test_fixed_seed_reproduces_the_pool(self):
        env = make_environment("tosser2d")
        a = generate_pool(env, 50, np.random.default_rng(42))
        b = generate_pool(env, 50, np.random.default_rng(42))
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.provenance, b.provenance)

    def test_minigolf_features_are_uniform(self):
        env = make_environment("minigolf2d")
        pool = generate_pool(env, 1000, np.random.default_rng(11))
        for k in range(2):
            # identity feature map + uniform params: marginals are uniform
            ks = stats.kstest(pool.features[:, k], "uniform")
            assert ks.statistic < 0.05

    def test_small_pools_rejected(self):
        env = make_environment("minigolf2d")
        with pytest.raises(InvalidInputError):
            generate_pool(env, 1, np.random.default_rng(0))


class TestNormalizer:
    def test_maps_observed_range_onto_unit_box(self, rng):
        raw = rng.normal(0, 5, size=(100, 3))
        norm = Normalizer.fit(raw)
        out = norm(raw)
        np.testing.assert_allclose(out.min(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(out.max(axis=0), 1.0, atol=1e-15)

    def test_refit_on_normalized_output_is_identity(self, rng):
        raw = rng.uniform(-3, 7, size=(50, 2))
        norm = Normalizer.fit(raw)
        out = norm(raw)
        again = Normalizer.fit(out)
        np.testing.assert_allclose(again(out), out, atol=1e-15)

    def test_invert_round_trips(self, rng):
        raw = rng.uniform(-2, 2, size=(30, 2))
        norm = Normalizer.fit(raw)
        np.testing.assert_allclose(norm.invert(norm(raw)), raw, atol=1e-12)

    def test_zero_span_dimension_maps_to_zero(self):
        raw = np.array([[1.0, 2.0], [1.0, 5.0]])
        norm = Normalizer.fit(raw)
        out = norm(raw)
        np.testing.assert_array_equal(out[:, 0], [0.0, 0.0])


class TestRewards:
    def test_poly2_term_layout_and_count(self):
        terms = poly2_terms(np.array([2.0, 3.0]))
        np.testing.assert_allclose(terms, [1.0, 2.0, 3.0, 4.0, 6.0, 9.0], atol=0.0)
        assert n_poly2_terms(2) == 6
        assert n_poly2_terms(4) == 15

    def test_single_square_coefficient(self):
        w = np.zeros(6)
        w[3] = 1.0  # the psi1^2 monomial
        r = TrueReward(kind="poly2", dim=2, weights=w)
        assert evaluate_true_reward(r, np.array([0.5, 0.0])) == pytest.approx(0.25, abs=0.0)

    def test_linear_unit_vector_reads_one_coordinate(self):
        r = TrueReward(kind="linear", dim=3, weights=np.array([1.0, 0.0, 0.0]))
        assert evaluate_true_reward(r, np.array([0.7, 0.1, 0.4])) == pytest.approx(0.7, abs=0.0)

    def test_poly2_matches_monomial_enumeration(self, rng):
        for d in (2, 3, 4):
            r = draw_true_reward("poly2", d, rng)
            psi = rng.uniform(0, 1, size=d)
            # independent enumeration: constant, linears, then i<=j products
            acc = r.weights[0]
            for i in range(d):
                acc += r.weights[1 + i] * psi[i]
            k = 1 + d
            for i in range(d):
                for j in range(i, d):
                    acc += r.weights[k] * psi[i] * psi[j]
                    k += 1
            assert evaluate_true_reward(r, psi) == pytest.approx(acc, abs=1e-12)

    def test_weight_length_validated(self):
        with pytest.raises(DimensionMismatchError):
            TrueReward(kind="linear", dim=3, weights=np.zeros(2))
        with pytest.raises(DimensionMismatchError):
            TrueReward(kind="poly2", dim=2, weights=np.zeros(5))

    def test_sigma_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            TrueReward(kind="linear", dim=2, weights=np.zeros(2), sigma=0.0)

    def test_draw_is_seeded_and_sized(self):
        a = draw_true_reward("poly2", 2, np.random.default_rng(5), sigma=0.3)
        b = draw_true_reward("poly2", 2, np.random.default_rng(5), sigma=0.3)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.sigma == 0.3
        assert a.weights.shape == (6,)


class TestResponders:
    def _reward_with_gap(self, gap):
        # linear reward reading the first coordinate; psi pairs give R(a)-R(b)=gap
        r = TrueReward(kind="linear", dim=2, weights=np.array([1.0, 0.0]))
        a = np.array([gap, 0.0])
        b = np.array([0.0, 0.0])
        return r, a, b

    def test_even_match_is_a_coin_flip(self):
        r, a, b = self._reward_with_gap(0.0)
        gen = np.random.default_rng(0)
        n = 100_000
        wins = sum(oracle_respond(r, a, b, gen) for _ in range(n))
        band = 3.0 * math.sqrt(0.25 / n)
        assert abs(wins / n - 0.5) <= band

    def test_one_sigma_standardized_gap_rate(self):
        sigma = 0.8
        r, a, b = self._reward_with_gap(math.sqrt(2.0) * sigma)
        r = TrueReward(kind=r.kind, dim=r.dim, weights=r.weights, sigma=sigma)
        gen = np.random.default_rng(1)
        n = 100_000
        wins = sum(oracle_respond(r, a, b, gen) for _ in range(n))
        p = ref_phi(1.0)  # 0.8413447460685429
        band = 3.0 * math.sqrt(p * (1 - p) / n)
        assert abs(wins / n - p) <= band

    def test_vanishing_noise_is_deterministic(self):
        r, a, b = self._reward_with_gap(0.05)
        r = TrueReward(kind=r.kind, dim=r.dim, weights=r.weights, sigma=1e-9)
        gen = np.random.default_rng(2)
        assert all(oracle_respond(r, a, b, gen) == 1 for _ in range(200))
        assert all(oracle_respond(r, b, a, gen) == 0 for _ in range(200))

    def test_noiseless_follows_the_reward_order(self):
        r, a, b = self._reward_with_gap(1.0)
        assert noiseless_respond(r, a, b) == 1
        assert noiseless_respond(r, b, a) == 0

    def test_noiseless_tie_answers_first_and_warns(self, caplog):
        r, a, b = self._reward_with_gap(0.0)
        with caplog.at_level("WARNING"):
            assert noiseless_respond(r, a, b) == 1
        assert any("tie" in m for m in caplog.messages)

    def test_noiseless_agrees_with_majority_of_noisy_draws(self, rng):
        for _ in range(5):
            r = draw_true_reward("poly2", 2, rng)
            a, b = rng.uniform(0, 1, size=(2, 2))
            gap = float(evaluate_true_reward(r, a) - evaluate_true_reward(r, b))
            if abs(gap) < r.sigma:
                continue  # majority is only guaranteed past the noise scale
            gen = np.random.default_rng(17)
            wins = sum(oracle_respond(r, a, b, gen) for _ in range(2000))
            majority = 1 if wins > 1000 else 0
            assert noiseless_respond(r, a, b) == majority

    def test_calibration_across_gap_bins(self):
        # empirical win rate tracks the cdf of the standardized gap
        r = TrueReward(kind="linear", dim=2, weights=np.array([1.0, 0.0]))
        gen = np.random.default_rng(3)
        n = 20_000
        for gap in np.linspace(-2.0, 2.0, 9):
            a = np.array([gap, 0.0])
            b = np.array([0.0, 0.0])
            wins = sum(oracle_respond(r, a, b, gen) for _ in range(n))
            p = ref_phi(gap / math.sqrt(2.0))
            band = 3.5 * math.sqrt(max(p * (1 - p), 1e-4) / n)
            assert abs(wins / n - p) <= band, gap

    def test_negating_the_reward_flips_noiseless_answers(self, rng):
        r = draw_true_reward("poly2", 2, rng)
        neg = TrueReward(kind=r.kind, dim=r.dim, weights=-r.weights, sigma=r.sigma)
        for _ in range(20):
            a, b = rng.uniform(0, 1, size=(2, 2))
            if evaluate_true_reward(r, a) == evaluate_true_reward(r, b):
                continue
            assert noiseless_respond(r, a, b) == 1 - noiseless_respond(neg, a, b)
