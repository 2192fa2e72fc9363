import numpy as np
import pytest

from chromalab.errors import SingularKernel
from chromalab.optimizer import (
    AcquisitionConfig,
    acquire,
    fit,
    predict,
    propose_batch,
    sample_simplex,
)


def brute_force_gp(X, y, length_scale, signal_var, noise_var, queries):
    """Direct-inversion GP oracle, independent of the factorized code path."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mean, std = y.mean(), y.std() if y.std() > 1e-6 else 1.0
    z = (y - mean) / std

    def k(a, b):
        return signal_var * np.exp(-np.sum((a - b) ** 2) / (2 * length_scale**2))

    n = len(X)
    K = np.array([[k(X[i], X[j]) for j in range(n)] for i in range(n)])
    K_inv = np.linalg.inv(K + noise_var * np.eye(n))
    out = []
    for q in queries:
        ks = np.array([k(q, X[i]) for i in range(n)])
        mu = float(ks @ K_inv @ z) * std + mean
        var = signal_var + noise_var - float(ks @ K_inv @ ks)
        out.append((mu, np.sqrt(max(var, 0.0)) * std))
    return out


def simplex_points(n, d, seed=0):
    return sample_simplex(n, d, seed)


class TestSampleSimplex:
    def test_degenerate_dimension(self):
        points = sample_simplex(5, 1, seed=0)
        assert np.all(points == 1.0)

    def test_rows_sum_to_one(self):
        points = sample_simplex(200, 8, seed=1)
        assert np.all(points >= 0)
        assert np.abs(points.sum(axis=1) - 1.0).max() <= 1e-12

    def test_uniformity_monte_carlo(self):
        # Coordinate of a uniform simplex point is Beta(1, d-1):
        # mean 1/d, variance (d-1) / (d^2 (d+1)).
        d, n = 8, 10_000
        points = sample_simplex(n, d, seed=12345)
        coord_var = (d - 1) / (d**2 * (d + 1))
        stderr = np.sqrt(coord_var / n)
        assert np.abs(points.mean(axis=0) - 1.0 / d).max() <= 3 * stderr

    def test_deterministic(self):
        a = sample_simplex(50, 4, seed=9)
        b = sample_simplex(50, 4, seed=9)
        assert np.array_equal(a, b)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            sample_simplex(0, 3, seed=0)


class TestFitPredict:
    def test_noise_free_interpolation(self):
        X = simplex_points(5, 3, seed=2)
        y = np.array([0.3, 0.9, 0.1, 0.5, 0.7])
        model = fit(X, y, noise_var=1e-6)
        for xi, yi in zip(X, y):
            mu, _ = predict(model, xi)
            assert abs(mu - yi) <= 1e-6

    def test_constant_targets(self):
        X = simplex_points(6, 3, seed=3)
        model = fit(X, np.full(6, 0.42))
        for q in simplex_points(10, 3, seed=4):
            mu, _ = predict(model, q)
            assert abs(mu - 0.42) <= 1e-6

    def test_grid_search_reproducible(self):
        X = simplex_points(12, 4, seed=5)
        y = X[:, 0] * 2 + X[:, 1]
        a, b = fit(X, y), fit(X, y)
        assert (a.length_scale, a.signal_var, a.noise_var) == \
               (b.length_scale, b.signal_var, b.noise_var)
        assert np.array_equal(a.chol, b.chol)
        assert np.array_equal(a.alpha, b.alpha)

    def test_brute_force_oracle_agreement(self):
        for seed in range(4):
            n = 3 + seed  # up to 5 training points
            X = simplex_points(n, 3, seed=seed)
            rng = np.random.default_rng(seed)
            y = np.sin(3 * X[:, 0]) + rng.normal(0, 0.05, n)
            model = fit(X, y, length_scale=0.4, signal_var=1.0, noise_var=1e-4)
            queries = simplex_points(6, 3, seed=100 + seed)
            expected = brute_force_gp(X, y, 0.4, 1.0, 1e-4, queries)
            for q, (mu_exp, sd_exp) in zip(queries, expected):
                mu, sd = predict(model, q)
                assert abs(mu - mu_exp) <= 1e-9
                assert abs(sd - sd_exp) <= 1e-9

    def test_far_point_variance_saturates(self):
        # In standardized space the observation variance tends to
        # signal_var + noise_var far from all training points.
        X = np.eye(5)[:4] * 0.0
        X = simplex_points(4, 5, seed=6) * np.array([1, 1, 1, 1, 1])
        X = X / X.sum(axis=1, keepdims=True)
        y = np.array([0.1, 0.2, 0.3, 0.4])
        model = fit(X, y, length_scale=0.05, signal_var=2.0, noise_var=1e-4)
        corner = np.zeros(5)
        corner[4] = 1.0  # far corner: distance >> 0.05
        _, sd = predict(model, corner)
        sd_z = sd / model.y_std
        assert abs(sd_z**2 - (2.0 + 1e-4)) / (2.0 + 1e-4) <= 0.01

    def test_variance_bounded(self):
        X = simplex_points(20, 4, seed=7)
        y = X[:, 0] + 0.1 * X[:, 1]
        model = fit(X, y)
        _, sd = predict(model, simplex_points(500, 4, seed=8))
        var_z = (sd / model.y_std) ** 2
        assert np.all(var_z >= 0)
        assert np.all(var_z <= model.signal_var + model.noise_var + 1e-9)

    def test_singular_kernel(self):
        X = np.array([[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(SingularKernel):
            fit(X, np.array([0.0, 1.0, -1.0]), noise_var=0.0)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit(np.array([[1.0]]), np.array([1.0]))


class TestAcquire:
    @pytest.fixture()
    def model(self):
        X = simplex_points(10, 3, seed=11)
        return fit(X, X[:, 0] * 2)

    def test_beta_zero_is_mean(self, model):
        q = simplex_points(20, 3, seed=12)
        mu, _ = predict(model, q)
        assert np.allclose(acquire(model, q, 0.0), mu)

    def test_huge_beta_tracks_sigma(self, model):
        q = simplex_points(200, 3, seed=13)
        _, sd = predict(model, q)
        assert np.argmax(acquire(model, q, 1e6)) == np.argmax(sd)

    def test_monotone_in_beta(self, model):
        q = simplex_points(1, 3, seed=14)[0]
        values = [acquire(model, q, b) for b in (0.0, 0.5, 1.0, 2.0)]
        assert values == sorted(values)

    def test_negative_beta_rejected(self, model):
        with pytest.raises(ValueError):
            acquire(model, simplex_points(1, 3, seed=1)[0], -1.0)


class TestProposeBatch:
    @pytest.fixture()
    def model(self):
        X = simplex_points(15, 4, seed=21)
        return fit(X, X[:, 0] - 0.5 * X[:, 1])

    def test_single_pick_is_pool_argmax(self, model):
        config = AcquisitionConfig(beta=1.0, pool_size=500, penalty_weight=0.0)
        batch = propose_batch(model, config, 1, seed=22, keys=list("abcd"))
        pool = sample_simplex(500, 4, seed=22)
        best = pool[np.argmax(acquire(model, pool, 1.0))]
        assert np.allclose(batch[0].to_vector(list("abcd")), best)

    def test_huge_penalty_enforces_radius(self, model):
        config = AcquisitionConfig(beta=1.0, pool_size=2000, diversity_radius=0.05,
                                   penalty_weight=1e9)
        batch = propose_batch(model, config, 16, seed=23, keys=list("abcd"))
        points = np.array([r.to_vector(list("abcd")) for r in batch])
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                assert np.linalg.norm(points[i] - points[j]) >= 0.05

    def test_deterministic(self, model):
        config = AcquisitionConfig(beta=2.0, pool_size=1000)
        a = propose_batch(model, config, 8, seed=24, keys=list("abcd"))
        b = propose_batch(model, config, 8, seed=24, keys=list("abcd"))
        assert a == b

    def test_outputs_on_simplex_and_distinct(self, model):
        config = AcquisitionConfig(beta=2.0, pool_size=1000)
        batch = propose_batch(model, config, 32, seed=25, keys=list("abcd"))
        seen = set()
        for recipe in batch:
            vec = recipe.to_vector(list("abcd"))
            assert vec.min() >= 0 and abs(vec.sum() - 1) <= 1e-9
            seen.add(tuple(vec))
        assert len(seen) == 32

    def test_batch_larger_than_pool_rejected(self, model):
        with pytest.raises(ValueError):
            propose_batch(model, AcquisitionConfig(beta=1.0, pool_size=4), 5,
                          seed=1, keys=list("abcd"))


class TestClosedLoopQuadratic:
    def quadratic(self, x):
        # Smooth objective on the 3-simplex peaking near (0.7, 0.2, 0.1).
        target = np.array([0.7, 0.2, 0.1])
        return 1.0 - 3.0 * np.sum((x - target) ** 2)

    def test_beats_random_in_most_seeds(self):
        wins = 0
        seeds = range(20)
        for seed in seeds:
            keys = list("abc")
            X = sample_simplex(16, 3, np.random.SeedSequence([seed, 1]))
            y = np.array([self.quadratic(x) for x in X])
            for round_index in range(2, 6):
                model = fit(X, y)
                config = AcquisitionConfig(beta=[2, 2, 3, 3, 1][round_index - 1],
                                           pool_size=1000)
                batch = propose_batch(model, config, 16,
                                      np.random.SeedSequence([seed, round_index]), keys)
                newX = np.array([r.to_vector(keys) for r in batch])
                X = np.vstack([X, newX])
                y = np.concatenate([y, [self.quadratic(x) for x in newX]])
            random_pts = sample_simplex(80, 3, np.random.SeedSequence([seed, 99]))
            random_best = max(self.quadratic(x) for x in random_pts)
            if y.max() > random_best:
                wins += 1
        assert wins >= 15
