"""Three-step alpha estimation under a factor model with latent confounders.

The pipeline sequentially removes the observed factors (time-series
regression), extracts latent loadings from the adjusted returns by
principal components with eigenvalue-ratio rank selection, and recovers
the alphas by a cross-sectional regression of the average adjusted
returns on the latent loadings.

The observed factors are removed with the oblique factor
``I - Fd (Fd'Fd)^{-1} F'`` (``Fd`` the column-demeaned factors), which
annihilates the factor columns exactly while preserving the intercept:
``F' (I - Fd (Fd'Fd)^{-1} F') = 0`` and ``1' (I - Fd (Fd'Fd)^{-1} F') 1 = n``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, NoFactorStructureError
from .linalg import Projector, demean_columns, least_squares
from .panels import FactorPanel, ReturnPanel, check_aligned

__all__ = [
    "LatentFit",
    "AlphaFit",
    "ols_alpha_biased",
    "regress_out_observed",
    "estimate_latent",
    "estimate_alpha",
    "long_run_variance",
    "bartlett_kernel",
]

# Eigenvalues below this fraction of the leading one are treated as the
# degenerate tail of the adjusted-return spectrum.
EIGENVALUE_FLOOR_REL = 1e-12

DEFAULT_MAX_RANK = 10


@dataclass(frozen=True, eq=False)
class LatentFit:
    """Latent-loading estimate extracted from adjusted returns.

    loadings_hat
        (p, rank_hat) loadings; each column has squared norm p, sign fixed
        so its largest-magnitude entry is positive.
    rank_hat
        Number of latent factors retained.
    eigenvalues
        Descending spectrum of the adjusted-return outer product (computed
        through the n-by-n Gram matrix, which shares the nonzero part).
    adjusted_returns
        (p, n) observed-factor-free returns, additionally demeaned over
        time; this is the matrix whose principal components are taken.
    eigen_ratio
        The winning consecutive-eigenvalue ratio when the rank was chosen
        automatically (diagnostic; None when the rank was supplied).
    """

    loadings_hat: np.ndarray
    rank_hat: int
    eigenvalues: np.ndarray
    adjusted_returns: np.ndarray
    eigen_ratio: Optional[float] = None


@dataclass(frozen=True, eq=False)
class AlphaFit:
    """Alphas plus everything the downstream tests need.

    residuals
        (p, n) fluctuation part of the latent-projected adjusted returns
        (per-entity means, i.e. the alphas, subtracted).
    long_run_variance
        Kernel-weighted long-run variance of each residual row; None only
        when explicitly skipped.
    """

    alpha_hat: np.ndarray
    latent: LatentFit
    observed_loadings_hat: np.ndarray
    residuals: np.ndarray
    n_used: int
    long_run_variance: Optional[np.ndarray] = None


def ols_alpha_biased(returns: ReturnPanel, factors: FactorPanel) -> np.ndarray:
    """Per-entity OLS intercepts of returns on the observed factors.

    Diagnostic baseline only: with latent confounders carrying a nonzero
    premium these intercepts are biased and cross-sectionally dependent.
    """
    check_aligned(returns, factors)
    n = returns.n_periods
    design = np.column_stack([np.ones(n), factors.values])
    coef = least_squares(design, returns.values.T)
    return coef[0].copy()


def regress_out_observed(
    returns: ReturnPanel, factors: FactorPanel
) -> tuple[np.ndarray, np.ndarray]:
    """Remove the observed-factor component from every return series.

    Returns
    -------
    observed_loadings_hat : ndarray, shape (p, r)
        Coefficients of each return series on the demeaned factors.
    adjusted : ndarray, shape (p, n)
        ``X - loadings @ F'``; free of the observed factors but still
        carrying the intercept and the latent structure.
    """
    check_aligned(returns, factors)
    f = factors.values
    fd = demean_columns(f)
    loadings = least_squares(fd, returns.values.T).T
    adjusted = returns.values - loadings @ f.T
    return loadings, adjusted


def estimate_latent(
    adjusted: np.ndarray,
    rank: Optional[int] = None,
    max_rank: int = DEFAULT_MAX_RANK,
) -> LatentFit:
    """Principal-component latent loadings from observed-factor-free returns.

    The adjusted returns are demeaned over time (the intercept column
    would otherwise masquerade as a factor), and the spectrum of the
    outer product is obtained through the n-by-n Gram matrix so that no
    p-by-p object is ever formed.  When ``rank`` is not given it is
    chosen by maximizing consecutive eigenvalue ratios over the first
    ``max_rank`` candidates above the degeneracy floor; ties go to the
    smallest index.

    Raises
    ------
    NoFactorStructureError
        If every eigenvalue sits below the degeneracy floor.
    """
    a = np.asarray(adjusted, dtype=float)
    if a.ndim != 2:
        raise DimensionError("adjusted returns must be a p-by-n matrix")
    p, n = a.shape
    centered = a - a.mean(axis=1, keepdims=True)
    gram = centered.T @ centered
    evals, evecs = np.linalg.eigh(gram)
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1]
    evals[evals < 0.0] = 0.0

    if evals[0] <= 0.0:
        raise NoFactorStructureError("adjusted returns have an all-zero spectrum")
    floor = EIGENVALUE_FLOOR_REL * evals[0]
    n_usable = int(np.sum(evals > floor))

    eigen_ratio = None
    if rank is None:
        limit = min(int(max_rank), n_usable - 1)
        if limit >= 1:
            ratios = evals[:limit] / evals[1 : limit + 1]
            best = int(np.argmax(ratios))
            rank = best + 1
            eigen_ratio = float(ratios[best])
        elif n_usable == 1:
            rank = 1
        else:
            raise NoFactorStructureError(
                "no eigenvalue exceeds the degeneracy floor"
            )
    else:
        rank = int(rank)
        if not 1 <= rank <= n_usable:
            raise DimensionError(
                f"requested rank {rank} outside the usable spectrum [1, {n_usable}]"
            )

    lam = evals[:rank]
    loadings = np.sqrt(p) * (centered @ evecs[:, :rank]) / np.sqrt(lam)
    # Fix the eigenvector sign indeterminacy: largest-|entry| positive.
    for j in range(rank):
        col = loadings[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            loadings[:, j] = -col
    return LatentFit(
        loadings_hat=loadings,
        rank_hat=rank,
        eigenvalues=evals,
        adjusted_returns=centered,
        eigen_ratio=eigen_ratio,
    )


@dataclass(frozen=True, eq=False)
class _FitBundle:
    """Internal pipeline state shared by the estimators built on Step III."""

    observed_loadings: np.ndarray
    adjusted: np.ndarray
    latent: LatentFit
    mean_adjusted: np.ndarray
    latent_premium: np.ndarray
    alpha_hat: np.ndarray
    residuals: np.ndarray
    n_used: int


def _fit_pipeline(
    returns: ReturnPanel,
    factors: FactorPanel,
    rank: Optional[int],
    max_rank: int,
) -> _FitBundle:
    n, r_o = returns.n_periods, factors.n_factors
    observed_loadings, adjusted = regress_out_observed(returns, factors)
    cap = min(int(max_rank), returns.n_entities, n - r_o - 1)
    if cap < 1:
        raise DimensionError("panel too short to carry any latent factor")
    latent = estimate_latent(adjusted, rank=rank, max_rank=cap)
    b = latent.loadings_hat
    mean_adjusted = adjusted.mean(axis=1)
    premium = least_squares(b, mean_adjusted)
    complement = Projector(b, "complement")
    projected = complement.apply(adjusted)
    alpha_hat = projected.mean(axis=1)
    residuals = projected - alpha_hat[:, None]
    return _FitBundle(
        observed_loadings=observed_loadings,
        adjusted=adjusted,
        latent=latent,
        mean_adjusted=mean_adjusted,
        latent_premium=premium,
        alpha_hat=alpha_hat,
        residuals=residuals,
        n_used=n,
    )


def estimate_alpha(
    returns: ReturnPanel,
    factors: FactorPanel,
    rank: Optional[int] = None,
    max_rank: int = DEFAULT_MAX_RANK,
    lrv_bandwidth: Optional[float] = None,
    kernel: Optional[Callable] = None,
) -> AlphaFit:
    """Full three-step alpha estimate.

    Parameters
    ----------
    returns, factors
        Time-aligned panels.
    rank
        Latent rank; estimated by the eigenvalue-ratio rule when None.
    max_rank
        Search cap for the automatic rank choice.
    lrv_bandwidth, kernel
        Passed to :func:`long_run_variance` for the per-entity long-run
        variance of the residual rows (bandwidth defaults to n**0.2).
    """
    bundle = _fit_pipeline(returns, factors, rank, max_rank)
    lrv = long_run_variance(bundle.residuals, bandwidth=lrv_bandwidth, kernel=kernel)
    return AlphaFit(
        alpha_hat=bundle.alpha_hat,
        latent=bundle.latent,
        observed_loadings_hat=bundle.observed_loadings,
        residuals=bundle.residuals,
        n_used=bundle.n_used,
        long_run_variance=lrv,
    )


def bartlett_kernel(x: np.ndarray) -> np.ndarray:
    """Triangular kernel: 1 - |x| on [-1, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    return np.maximum(0.0, 1.0 - np.abs(x))


def long_run_variance(
    residuals: np.ndarray,
    bandwidth: Optional[float] = None,
    kernel: Optional[Callable] = None,
) -> np.ndarray:
    """Kernel-weighted long-run variance of each residual row.

    Computes ``(1/n) sum_{t1,t2} k((t1-t2)/bandwidth) e_{t1} e_{t2}`` in
    its O(n * bandwidth) lag-sum form.  The kernel must be even with
    k(0) = 1 and vanish outside [-1, 1]; the built-in (and default) is
    the Bartlett kernel, whose positive semidefiniteness guarantees a
    nonnegative estimate.  Custom kernels that drive an estimate to zero
    or below are floored at a small positive value with a warning.

    Parameters
    ----------
    residuals : ndarray, shape (p, n) or (n,)
    bandwidth : float, optional
        Defaults to n**0.2.  Must lie in (0, n).
    """
    e = np.asarray(residuals, dtype=float)
    if e.ndim == 1:
        e = e[None, :]
        squeeze = True
    else:
        squeeze = False
    n = e.shape[1]
    ell = float(bandwidth) if bandwidth is not None else float(n) ** 0.2
    if not 0.0 < ell < n:
        raise ValueError(f"bandwidth must lie in (0, {n}), got {ell}")
    phi = kernel if kernel is not None else bartlett_kernel
    custom = kernel is not None

    s2 = np.mean(e * e, axis=1)
    max_lag = min(n - 1, int(np.floor(ell)))
    for lag in range(1, max_lag + 1):
        w = float(phi(lag / ell))
        if w == 0.0:
            continue
        s2 = s2 + 2.0 * w * np.sum(e[:, lag:] * e[:, :-lag], axis=1) / n

    bad = s2 <= 0.0
    if np.any(bad):
        if custom:
            warnings.warn(
                f"{int(bad.sum())} long-run variance estimate(s) were not "
                "positive under the supplied kernel; flooring at 1e-12",
                RuntimeWarning,
                stacklevel=2,
            )
        s2 = np.maximum(s2, 1e-12)
    return s2[0] if squeeze else s2
