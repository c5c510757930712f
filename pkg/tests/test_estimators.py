import numpy as np
import pytest

from kinuq.errors import ConfigError
from kinuq.uq.estimators import (
    LevelSpec,
    lambda_coeff,
    mc_estimate,
    mlmc_estimate,
    variance_field,
)
from kinuq.uq.metrics import restrict
from kinuq.uq.sampling import draw_samples


def surrogate_runner(z, level):
    """Cheap stand-in model: smooth field with a resolution-dependent bias."""
    x = (np.arange(level.n_cells) + 0.5) / level.n_cells
    base = (1.0 + 0.5 * z[0]) * np.sin(2 * np.pi * x) + 0.25 * z[1] * np.cos(2 * np.pi * x)
    bias = np.cos(4 * np.pi * x) / level.n_cells
    f = base + bias
    return {"rho": f, "ux": 0.5 * f, "uy": 0.0 * f, "temp": f**2}


def specs(samples):
    return [LevelSpec(i, n, 1e-3 / (2**i), m)
            for i, (n, m) in enumerate(zip((8, 16, 32), samples))]


class TestMc:
    def test_identical_samples(self):
        f = np.arange(5.0)
        assert np.array_equal(mc_estimate([f, f, f]), f)

    def test_two_sample_average(self):
        a, b = np.array([1.0, 3.0]), np.array([2.0, 5.0])
        assert np.array_equal(mc_estimate([a, b]), (a + b) / 2)

    def test_variance_shrinks_at_monte_carlo_rate(self):
        # estimator variance over repetitions drops ~4x when M quadruples
        rng = np.random.default_rng(0)
        reps = 400

        def mc_var(m):
            means = [mc_estimate(rng.uniform(-1, 1, (m, 1)))[0] for _ in range(reps)]
            return np.var(means)

        ratio = mc_var(16) / mc_var(64)
        assert 2.5 < ratio < 6.0


class TestLambda:
    def test_perfect_correlation(self):
        rng = np.random.default_rng(1)
        q = [rng.random(6) for _ in range(10)]
        lam, deg = lambda_coeff(q, q)
        assert np.allclose(lam, 1.0)
        assert not deg.any()

    def test_slope_two(self):
        rng = np.random.default_rng(2)
        q = [rng.random(6) for _ in range(10)]
        lam, _ = lambda_coeff([2 * v for v in q], q)
        assert np.allclose(lam, 2.0)

    def test_independent_pairs_bounded(self):
        rng = np.random.default_rng(3)
        m = 1000
        a = [rng.uniform(-1, 1, 4) for _ in range(m)]
        b = [rng.uniform(-1, 1, 4) for _ in range(m)]
        lam, _ = lambda_coeff(a, b)
        assert np.abs(lam).max() < 3.0 / np.sqrt(m) * 3  # null-correlation scale

    def test_degenerate_coarse_variance(self):
        q = [np.array([1.0, 2.0])] * 5
        fine = [np.array([1.0, 2.0]) * (1 + 0.1 * i) for i in range(5)]
        lam, deg = lambda_coeff(fine, q)
        assert deg.all()
        assert np.all(lam == 1.0)

    def test_in_sample_variance_reduction_exact(self):
        rng = np.random.default_rng(4)
        fine = [rng.random(8) for _ in range(20)]
        coarse = [f + 0.3 * rng.random(8) for f in fine]
        lam, _ = lambda_coeff(fine, coarse)
        fs, cs = np.stack(fine), np.stack(coarse)
        var_lam = np.var(fs - lam * cs, axis=0)
        var_one = np.var(fs - cs, axis=0)
        assert np.all(var_lam <= var_one + 1e-14)


class TestMlmc:
    def test_single_level_reduces_to_mc(self):
        lv = [LevelSpec(0, 8, 1e-3, 12)]
        est = mlmc_estimate(lv, surrogate_runner, master_seed=0, dim=2)
        samples = draw_samples(12, 2, 0, purpose=0)
        direct = mc_estimate([surrogate_runner(s.z, lv[0])["rho"] for s in samples])
        assert np.array_equal(est.combined["rho"], direct)

    def test_telescoping_identity(self):
        # lam = 1, equal counts, shared coupled seeds: the combination equals
        # the finest-level mean restricted to the coarsest grid
        lv = specs((16, 16, 16))
        est = mlmc_estimate(lv, surrogate_runner, master_seed=5, dim=2,
                            share_samples=True, force_unit_lambda=True)
        samples = draw_samples(16, 2, 5, purpose=0)
        fine_mean = mc_estimate([surrogate_runner(s.z, lv[2])["rho"] for s in samples])
        assert np.abs(est.combined["rho"] - restrict(fine_mean, 8)).max() < 1e-12

    def test_sample_ratio_plan_reflected(self):
        lv = specs((64, 16, 4))   # M1 = M0/4, M2 = M0/16
        est = mlmc_estimate(lv, surrogate_runner, master_seed=1, dim=2)
        assert est.model_runs == 64 + 2 * 16 + 2 * 4
        assert [s.samples for s in est.levels] == [64, 16, 4]

    def test_non_nested_meshes_rejected(self):
        bad = [LevelSpec(0, 8, 1e-3, 4), LevelSpec(1, 24, 5e-4, 2)]
        with pytest.raises(ConfigError):
            mlmc_estimate(bad, surrogate_runner, master_seed=0, dim=2)

    def test_unbiased_against_plain_mc_statistics(self):
        lv = specs((32, 8, 2))
        est = mlmc_estimate(lv, surrogate_runner, master_seed=9, dim=2)
        # expectation of rho: bias term vanishes in the mean over z
        x = (np.arange(8) + 0.5) / 8.0
        exact = np.sin(2 * np.pi * x) + np.cos(4 * np.pi * x) / 32.0
        err = np.abs(est.combined["rho"] - exact).max()
        assert err < 0.5  # statistical scale for M0 = 32

    def test_variance_combination_nonnegative_after_clip(self):
        lv = specs((16, 8, 4))
        est = mlmc_estimate(lv, surrogate_runner, master_seed=3, dim=2)
        v = est.variance("temp")
        assert np.all(v >= 0.0)


class TestVarianceField:
    def test_deterministic_zero(self):
        f = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(variance_field([f, f, f, f]), np.zeros(3))

    def test_two_point(self):
        a, b = np.array([1.0, 0.0]), np.array([3.0, 2.0])
        v = variance_field([a, b])
        assert np.array_equal(v, ((a - b) / 2.0) ** 2)
