import numpy as np
import pytest

from alphascreen.errors import NoFactorStructureError
from alphascreen.estimation import (
    bartlett_kernel,
    estimate_alpha,
    estimate_latent,
    long_run_variance,
    ols_alpha_biased,
    regress_out_observed,
)
from alphascreen.linalg import Projector, demean_columns
from alphascreen.panels import FactorPanel, ReturnPanel


def make_panels(values, factors):
    p, n = values.shape
    returns = ReturnPanel(values, [f"e{i}" for i in range(p)], list(range(1, n + 1)))
    fac = FactorPanel(factors, [f"f{j}" for j in range(factors.shape[1])], list(range(1, n + 1)))
    return returns, fac


def simulate_confounded(
    n, p, r_o, r_c, alpha, mu_latent, psi_scale=0.5, noise_sd=0.0, seed=0
):
    """Panel with observed factors plus latent factors carrying a premium."""
    rng = np.random.default_rng(seed)
    f_o = rng.standard_normal((n, r_o))
    w = rng.standard_normal((n, r_c))
    f_c = mu_latent + psi_scale * f_o[:, :r_c] + w
    b_o = rng.standard_normal((p, r_o))
    b_c = rng.standard_normal((p, r_c))
    noise = noise_sd * rng.standard_normal((p, n)) if noise_sd else 0.0
    values = alpha[:, None] + b_o @ f_o.T + b_c @ f_c.T + noise
    returns, fac = make_panels(values, f_o)
    return returns, fac, b_o, b_c


class TestOlsAlphaBiased:
    def test_pure_intercept_model(self):
        rng = np.random.default_rng(0)
        c = np.array([0.5, -1.0, 2.0])
        values = np.tile(c[:, None], (1, 12))
        returns, fac = make_panels(values, rng.standard_normal((12, 2)))
        assert np.allclose(ols_alpha_biased(returns, fac), c, atol=1e-10)

    def test_noiseless_without_confounders(self):
        rng = np.random.default_rng(1)
        n, p, r = 20, 6, 2
        alpha = rng.standard_normal(p)
        b = rng.standard_normal((p, r))
        f = rng.standard_normal((n, r))
        returns, fac = make_panels(alpha[:, None] + b @ f.T, f)
        assert np.abs(ols_alpha_biased(returns, fac) - alpha).max() < 1e-10

    def test_bias_equals_latent_premium_effect(self):
        # with latent factors carrying premium mu, the naive intercept
        # drifts by loadings @ mu
        n, p = 4000, 12
        alpha = np.zeros(p)
        mu = np.array([1.0, -0.5])
        returns, fac, _, b_c = simulate_confounded(
            n, p, r_o=2, r_c=2, alpha=alpha, mu_latent=mu, noise_sd=0.1, seed=7
        )
        biased = ols_alpha_biased(returns, fac)
        expected_bias = b_c @ mu
        assert np.abs(biased - expected_bias).max() < 0.05 * np.abs(expected_bias).max()


class TestRegressOutObserved:
    def test_pure_observed_panel_annihilated(self):
        rng = np.random.default_rng(3)
        n, p, r = 25, 5, 3
        f = rng.standard_normal((n, r))
        b = rng.standard_normal((p, r))
        returns, fac = make_panels(b @ f.T, f)
        _, adjusted = regress_out_observed(returns, fac)
        assert np.abs(adjusted).max() < 1e-9

    def test_intercept_passes_through_unchanged(self):
        # the oblique factor leaves the all-ones direction untouched:
        # a pure-intercept panel comes back identical
        rng = np.random.default_rng(4)
        n, p = 18, 4
        alpha = rng.standard_normal(p)
        f = rng.standard_normal((n, 2))
        returns, fac = make_panels(np.tile(alpha[:, None], (1, n)), f)
        _, adjusted = regress_out_observed(returns, fac)
        assert np.allclose(adjusted, alpha[:, None] * np.ones(n), atol=1e-10)
        assert np.allclose(adjusted.mean(axis=1), alpha, atol=1e-10)

    def test_factor_annihilation_identity(self):
        # F' (I - Fd (Fd'Fd)^{-1} F') = 0, checked on the explicit matrix
        rng = np.random.default_rng(5)
        n, r = 30, 3
        f = rng.standard_normal((n, r)) + 0.7
        fd = demean_columns(f)
        factor = np.eye(n) - fd @ np.linalg.solve(fd.T @ fd, f.T)
        assert np.abs(f.T @ factor).max() < 1e-8

        # and the adjusted returns are exactly X times that factor
        x = rng.standard_normal((6, n))
        returns, fac = make_panels(x, f)
        _, adjusted = regress_out_observed(returns, fac)
        assert np.allclose(adjusted, x @ factor, atol=1e-8)


class TestEstimateLatent:
    def test_planted_rank_one(self):
        rng = np.random.default_rng(6)
        p, n = 200, 60
        b = rng.standard_normal(p)
        b *= np.sqrt(p) / np.linalg.norm(b)
        w = rng.standard_normal(n)
        adjusted = np.outer(b, w) + 1e-4 * rng.standard_normal((p, n))
        fit = estimate_latent(adjusted, rank=1)
        direction = fit.loadings_hat[:, 0]
        sign = np.sign(direction @ b)
        assert np.abs(sign * direction - b).max() < 1e-3 * np.abs(b).max()

    def test_loading_norm_convention(self):
        rng = np.random.default_rng(7)
        adjusted = rng.standard_normal((50, 40)) + np.outer(
            rng.standard_normal(50), 3.0 * rng.standard_normal(40)
        )
        fit = estimate_latent(adjusted, rank=1)
        norms = (fit.loadings_hat**2).sum(axis=0)
        assert np.abs(norms - 50) / 50 < 1e-6

    def test_sign_convention(self):
        rng = np.random.default_rng(8)
        adjusted = np.outer(-np.abs(rng.standard_normal(30)) - 1, rng.standard_normal(25))
        fit = estimate_latent(adjusted, rank=1)
        col = fit.loadings_hat[:, 0]
        assert col[np.argmax(np.abs(col))] > 0

    def test_planted_rank_two_recovered(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            p, n = 300, 120
            b = rng.standard_normal((p, 2))
            w = rng.standard_normal((n, 2)) * 2.0
            adjusted = b @ w.T + rng.standard_normal((p, n))
            fit = estimate_latent(adjusted)
            hits += fit.rank_hat == 2
        assert hits >= 19

    def test_pure_noise_has_small_ratio(self):
        rng = np.random.default_rng(9)
        fit = estimate_latent(rng.standard_normal((40, 60)))
        assert fit.eigen_ratio is not None and fit.eigen_ratio < 3.0

    def test_zero_matrix_rejected(self):
        with pytest.raises(NoFactorStructureError):
            estimate_latent(np.zeros((10, 8)))

    def test_explicit_rank_out_of_range(self):
        rng = np.random.default_rng(10)
        with pytest.raises(Exception):
            estimate_latent(rng.standard_normal((10, 8)), rank=20)


class TestEstimateAlpha:
    def test_exact_null_recovery(self):
        n, p = 40, 30
        alpha = np.zeros(p)
        returns, fac, _, _ = simulate_confounded(
            n, p, r_o=2, r_c=2, alpha=alpha, mu_latent=np.array([0.8, -0.2]), seed=11
        )
        fit = estimate_alpha(returns, fac, rank=2)
        assert np.abs(fit.alpha_hat).max() < 1e-8

    def test_alpha_invariant_to_loading_signs(self):
        rng = np.random.default_rng(12)
        n, p = 60, 40
        returns, fac, _, _ = simulate_confounded(
            n, p, r_o=2, r_c=2, alpha=rng.standard_normal(p) * 0.1,
            mu_latent=np.array([0.5, 0.5]), noise_sd=0.5, seed=13,
        )
        fit = estimate_alpha(returns, fac, rank=2)
        _, adjusted = regress_out_observed(returns, fac)
        flipped = Projector(-fit.latent.loadings_hat, "complement")
        alpha_flipped = flipped.apply(adjusted).mean(axis=1)
        assert np.allclose(alpha_flipped, fit.alpha_hat, atol=1e-10)

    def test_residuals_have_zero_row_means(self):
        rng = np.random.default_rng(14)
        n, p = 50, 25
        returns, fac, _, _ = simulate_confounded(
            n, p, r_o=2, r_c=1, alpha=rng.standard_normal(p) * 0.2,
            mu_latent=np.array([0.3]), noise_sd=1.0, seed=15,
        )
        fit = estimate_alpha(returns, fac, rank=1)
        assert np.abs(fit.residuals.mean(axis=1)).max() < 1e-10

    def test_residual_rows_orthogonal_to_loadings(self):
        rng = np.random.default_rng(16)
        n, p = 50, 25
        returns, fac, _, _ = simulate_confounded(
            n, p, r_o=2, r_c=2, alpha=rng.standard_normal(p) * 0.2,
            mu_latent=np.array([0.3, 0.1]), noise_sd=1.0, seed=17,
        )
        fit = estimate_alpha(returns, fac, rank=2)
        b = fit.latent.loadings_hat
        projected = b.T @ (fit.residuals + fit.alpha_hat[:, None])
        assert np.abs(projected).max() < 1e-8 * np.abs(fit.residuals).max() * p

    def test_subspace_recovery_on_strong_factors(self):
        hits = 0
        runs = 25
        for seed in range(runs):
            rng = np.random.default_rng(1000 + seed)
            n, p, r_c = 200, 1000, 3
            f_o = rng.standard_normal((n, 2))
            b_o = rng.standard_normal((p, 2)) * 0.3
            b_c = rng.standard_normal((p, r_c)) * 0.5
            w = rng.standard_normal((n, r_c)) * 2.0
            values = b_o @ f_o.T + b_c @ w.T + rng.standard_normal((p, n))
            returns, fac = make_panels(values, f_o)
            fit = estimate_alpha(returns, fac, rank=r_c)
            q_hat, _ = np.linalg.qr(fit.latent.loadings_hat)
            q_true, _ = np.linalg.qr(b_c)
            cosines = np.linalg.svd(q_hat.T @ q_true, compute_uv=False)
            sine = np.sqrt(max(0.0, 1.0 - cosines.min() ** 2))
            hits += sine <= 0.2
        assert hits / runs >= 0.95


class TestLongRunVariance:
    def test_tiny_bandwidth_collapses_to_second_moment(self):
        rng = np.random.default_rng(18)
        rows = rng.standard_normal((4, 100))
        out = long_run_variance(rows, bandwidth=0.5)
        assert np.allclose(out, np.mean(rows**2, axis=1), atol=1e-12)

    def test_white_noise_level(self):
        rng = np.random.default_rng(19)
        rows = rng.standard_normal((12, 2000))
        out = long_run_variance(rows)  # default bandwidth 2000**0.2 ~ 4.57
        assert np.all(np.abs(out - 1.0) < 0.15)

    def test_ar1_long_run_variance(self):
        # AR(1) with coefficient 0.5 and unit innovations has long-run
        # variance 1/(1-0.5)^2 = 4; a generous bandwidth keeps the kernel
        # truncation bias inside the tolerance
        from scipy.signal import lfilter

        rng = np.random.default_rng(20)
        rows = lfilter([1.0], [1.0, -0.5], rng.standard_normal((30, 5000)), axis=1)
        out = long_run_variance(rows, bandwidth=40.0)
        assert abs(np.mean(out) - 4.0) / 4.0 < 0.15

    def test_bartlett_kernel_shape(self):
        x = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
        assert np.allclose(bartlett_kernel(x), [0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0])

    def test_non_psd_custom_kernel_floors_with_warning(self):
        def truncated(x):
            return np.where(np.abs(x) <= 1.0, 1.0, 0.0)

        row = np.resize([1.0, -1.0], 60)
        with pytest.warns(RuntimeWarning, match="flooring"):
            out = long_run_variance(row, bandwidth=1.5, kernel=truncated)
        assert out > 0.0

    def test_bandwidth_bounds(self):
        with pytest.raises(ValueError):
            long_run_variance(np.ones((2, 10)), bandwidth=10.0)
        with pytest.raises(ValueError):
            long_run_variance(np.ones((2, 10)), bandwidth=0.0)
