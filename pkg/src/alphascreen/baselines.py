"""Competitor procedures: BH and two calibrated per-entity test baselines.

``bh_procedure`` is the classic step-up rule on p-values.  Two
statistic providers feed it:

* ``sbh_statistics`` — normal calibration of the root-n scaled alphas,
  studentized by a per-entity standard error that treats observations
  as serially independent (sample residual variance inflated by the
  plug-in premium terms of the i.i.d. asymptotic variance).
* ``sn_statistics`` — self-normalized statistics whose normalizer is
  built from recursive partial sums of the residual row, calibrated
  against the simulated law of the limiting Brownian functional.

``bh_statistics`` additionally exposes the naive per-entity OLS t-test
(no latent adjustment) as the plain-BH reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DegenerateNormalizerError
from .estimation import DEFAULT_MAX_RANK, _fit_pipeline
from .linalg import demean_columns, least_squares
from .panels import FactorPanel, ReturnPanel, check_aligned

__all__ = [
    "PValueResult",
    "normal_z",
    "bh_procedure",
    "bh_statistics",
    "sbh_statistics",
    "sn_statistics",
]


@dataclass(frozen=True, eq=False)
class PValueResult:
    """Per-entity statistics with two-sided p-values."""

    p_values: np.ndarray
    statistics: np.ndarray
    method: str  # bh_plain | sbh_normal | sn_calibrated


def normal_z(alpha_hat, residual_variance, inflation, n_periods):
    """Root-n scaled alphas studentized by inflated residual variances.

    Invariant to rescaling any entity's alpha together with its variance
    contribution (``c * alpha`` with ``c^2 * variance``).
    """
    return (
        math.sqrt(n_periods)
        * np.asarray(alpha_hat, dtype=float)
        / np.sqrt(np.asarray(residual_variance, dtype=float) * inflation)
    )


def bh_procedure(p_values: np.ndarray, beta: float) -> np.ndarray:
    """Step-up rule: reject the k smallest p-values where k is the largest
    index with p_(k) <= k * beta / m.  Returns sorted rejected indices."""
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    m = p.size
    if m == 0:
        return np.array([], dtype=int)
    order = np.argsort(p, kind="stable")
    passed = np.flatnonzero(p[order] <= (np.arange(1, m + 1) * beta) / m)
    if passed.size == 0:
        return np.array([], dtype=int)
    k_hat = passed[-1] + 1
    return np.sort(order[:k_hat])


def bh_statistics(
    returns: ReturnPanel, factors: FactorPanel
) -> PValueResult:
    """Naive per-entity t-statistics of the OLS intercept on observed factors.

    Ignores latent structure and serial dependence entirely; serves as
    the uncorrected baseline fed to ``bh_procedure``.
    """
    check_aligned(returns, factors)
    n = returns.n_periods
    design = np.column_stack([np.ones(n), factors.values])
    k = design.shape[1]
    coef = least_squares(design, returns.values.T)
    resid = returns.values - (design @ coef).T
    rss = np.sum(resid * resid, axis=1)
    sigma2 = rss / (n - k)
    if np.any(sigma2 <= 0.0):
        raise DegenerateNormalizerError("an entity has zero OLS residual variance")
    # Var(intercept) = sigma^2 * [(D'D)^{-1}]_{00}, via the QR of the design.
    q, r = np.linalg.qr(design)
    g_inv_00 = float(np.sum(np.linalg.inv(r)[0, :] ** 2))
    z = coef[0] / np.sqrt(sigma2 * g_inv_00)
    p = 2.0 * stats.norm.sf(np.abs(z))
    return PValueResult(p_values=p, statistics=z, method="bh_plain")


def sbh_statistics(
    returns: ReturnPanel,
    factors: FactorPanel,
    rank: Optional[int] = None,
    max_rank: int = DEFAULT_MAX_RANK,
    hac: bool = False,
) -> PValueResult:
    """Normal calibration of the three-step alphas.

    The studentizer is the per-entity residual variance (sample second
    moment of the residual row; the long-run variance when ``hac``)
    inflated by ``1 + premium' cov(scores)^{-1} premium +
    mean(F)' cov(F)^{-1} mean(F)`` with plug-in estimates of the latent
    premium and score covariance, matching the i.i.d. asymptotic
    variance of the estimator when risk premia are nonzero.
    """
    bundle = _fit_pipeline(returns, factors, rank, max_rank)
    n = bundle.n_used
    resid = bundle.residuals
    if hac:
        from .estimation import long_run_variance

        var_e = long_run_variance(resid)
    else:
        var_e = np.mean(resid * resid, axis=1)
    if np.any(var_e <= 0.0):
        raise DegenerateNormalizerError(
            "an entity has zero residual variance; cannot studentize"
        )

    b = bundle.latent.loadings_hat
    scores = (b.T @ bundle.latent.adjusted_returns) / b.shape[0]  # (r, n)
    score_cov = scores @ scores.T / n
    premium = bundle.latent_premium
    f = factors.values
    f_centered = demean_columns(f)
    f_cov = f_centered.T @ f_centered / n
    f_mean = f.mean(axis=0)
    inflation = (
        1.0
        + float(premium @ np.linalg.solve(score_cov, premium))
        + float(f_mean @ np.linalg.solve(f_cov, f_mean))
    )
    z = normal_z(bundle.alpha_hat, var_e, inflation, n)
    p = 2.0 * stats.norm.sf(np.abs(z))
    return PValueResult(p_values=p, statistics=z, method="sbh_normal")


# --- self-normalized calibration -------------------------------------------

_SN_TABLE_SEED = 714025
_SN_GRID = 1000
_sn_table_cache: dict = {}


def _sn_limit_table(mc_paths: int, grid: int = _SN_GRID) -> np.ndarray:
    """Sorted Monte-Carlo draws of the limiting self-normalized ratio.

    The limit is W(1)^2 over the integrated squared Brownian bridge,
    discretized on ``grid`` points.  Built once per (paths, grid) pair
    from a fixed internal seed and cached, so repeated calls see the
    identical table.
    """
    key = (int(mc_paths), int(grid))
    table = _sn_table_cache.get(key)
    if table is None:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=_SN_TABLE_SEED, spawn_key=key)
        )
        increments = rng.standard_normal((key[0], key[1])) / math.sqrt(key[1])
        w = np.cumsum(increments, axis=1)
        w1 = w[:, -1]
        frac = np.arange(1, key[1] + 1) / key[1]
        bridge = w - frac[None, :] * w1[:, None]
        v = np.mean(bridge * bridge, axis=1)
        table = np.sort(w1 * w1 / v)
        _sn_table_cache[key] = table
    return table


def sn_test_rows(rows: np.ndarray) -> np.ndarray:
    """Self-normalized mean-zero test statistic of each row.

    ``n * mean(row)^2 / V`` with ``V = n^{-2} sum_t S_t^2`` and ``S_t``
    the partial sums of the demeaned row.
    """
    y = np.asarray(rows, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    n = y.shape[1]
    mean = y.mean(axis=1)
    partial = np.cumsum(y - mean[:, None], axis=1)
    v = np.sum(partial * partial, axis=1) / n**2
    if np.any(v <= 0.0):
        raise DegenerateNormalizerError(
            "a residual row has no variation; the self-normalizer is zero"
        )
    return n * mean * mean / v


def sn_pvalues(statistics: np.ndarray, mc_paths: int = 10000) -> np.ndarray:
    """Upper-tail p-values of self-normalized statistics under the limit law."""
    if mc_paths < 1000:
        raise ValueError("mc_paths must be at least 1000")
    table = _sn_limit_table(mc_paths)
    stat = np.asarray(statistics, dtype=float)
    n_ge = table.size - np.searchsorted(table, stat, side="left")
    return (1.0 + n_ge) / (table.size + 1.0)


def sn_statistics(
    returns: ReturnPanel,
    factors: FactorPanel,
    rank: Optional[int] = None,
    mc_paths: int = 10000,
    max_rank: int = DEFAULT_MAX_RANK,
) -> PValueResult:
    """Self-normalized test of each alpha after factor adjustment.

    The per-period alpha contributions (latent-projected adjusted
    returns) of each entity form the series whose mean is tested; the
    recursive partial-sum normalizer absorbs the unknown long-run
    variance without any bandwidth choice.
    """
    bundle = _fit_pipeline(returns, factors, rank, max_rank)
    contributions = bundle.residuals + bundle.alpha_hat[:, None]
    stat = sn_test_rows(contributions)
    p = sn_pvalues(stat, mc_paths=mc_paths)
    return PValueResult(p_values=p, statistics=stat, method="sn_calibrated")
