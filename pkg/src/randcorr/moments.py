"""Moments of correlation distributions.

Second moments are the workhorse: averaged over Haar-random settings,

    m_A = E[E_A^2] = 3^-|A| * sum of T_mu^2 over indices supported on A.

:func:`estimate_moment` gives the plain sample estimate with its standard
error, :func:`bayes_correct_moment` removes the upward bias caused by finite
shot counts, and :func:`exact_moment` is the tensor oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .quantum import CorrelationTensor, as_mask, popcount, subset_square_sums
from .sampling import CorrelationDataset

GRID_POINTS = 2001
BAYES_MAX_ITER = 200
BAYES_TOL = 1e-7

TAGS = ("raw", "bayes-corrected", "exact")


@dataclass(frozen=True)
class MomentEstimate:
    subset: int
    order: int
    value: float
    error: float
    tag: str

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown estimator tag {self.tag!r}")
        if self.error < 0:
            raise ValueError("standard error must be non-negative")


def exact_moment(T: CorrelationTensor, subset, k: int = 2) -> MomentEstimate:
    if k != 2:
        raise ValueError("exact moments are only available for k = 2")
    mask = as_mask(subset)
    if mask == 0:
        raise ValueError("subset must be nonempty")
    s = subset_square_sums(T.entries[None], [mask])[0, 0]
    return MomentEstimate(mask, 2, float(s / 3 ** popcount(mask)), 0.0, "exact")


def exact_moments(T: CorrelationTensor) -> dict[int, MomentEstimate]:
    """Exact second moments for every nonempty subset."""
    masks = list(range(1, 1 << T.n))
    s = subset_square_sums(T.entries[None], masks)[0]
    return {
        m: MomentEstimate(m, 2, float(v / 3 ** popcount(m)), 0.0, "exact")
        for m, v in zip(masks, s)
    }


def second_moment_error(m2: float, m4: float, n_settings: int) -> float:
    """Standard error of a sample second moment from N_s settings.

    (dm)^2 = [m4 - (N_s - 3)/(N_s - 1) m2^2] / N_s
    """
    if n_settings < 4:
        raise ValueError("need at least 4 settings for the error estimate")
    var = (m4 - (n_settings - 3) / (n_settings - 1) * m2**2) / n_settings
    return float(np.sqrt(max(var, 0.0)))


def estimate_moment(ds: CorrelationDataset, subset, k: int = 2) -> MomentEstimate:
    """Sample k-th moment of the subset correlations over settings."""
    mask = as_mask(subset)
    e = ds.values(mask)
    ns = len(e)
    if ns < 4:
        raise ValueError("need at least 4 settings")
    ek = e**k
    value = float(ek.mean())
    if k == 2:
        err = second_moment_error(value, float(np.mean(e**4)), ns)
    else:
        err = float(ek.std(ddof=1) / np.sqrt(ns))
    return MomentEstimate(mask, k, value, err, "raw")


def shot_kernel(measured: np.ndarray, grid: np.ndarray, n_shots: int) -> np.ndarray:
    """Gaussian likelihood p(E_M | E_R), rows = measured values, cols = grid.

    The width sqrt(1 - E_R^2 / N_c) vanishes at |E_R| = 1; it is floored at
    the grid spacing.
    """
    h = grid[1] - grid[0]
    sigma = np.maximum(np.sqrt(np.clip(1 - grid**2, 0, None) / n_shots), h)
    z = (measured[:, None] - grid[None, :]) / sigma[None, :]
    return np.exp(-0.5 * z**2) / (np.sqrt(2 * np.pi) * sigma[None, :])


def deconvolve(values: np.ndarray, n_shots: int, grid_points: int = GRID_POINTS,
               iterations: Optional[int] = None, tol: float = BAYES_TOL
               ) -> tuple[np.ndarray, np.ndarray]:
    """Estimate the distribution of true correlations from measured ones.

    The prior starts as the measured distribution binned on a uniform grid over
    [-1, 1].  Each pass replaces the prior with the posterior averaged over the
    measured sample,

        p'(E_R) = mean_j p(E_M_j | E_R) p(E_R) / sum_R' p(E_M_j | E_R') p(E_R').

    ``iterations=1`` is a single Bayesian update.  ``None`` repeats until the
    second moment changes by less than ``tol`` (at most 200 passes).

    Returns ``(grid, weights)`` with weights summing to 1.
    """
    grid = np.linspace(-1.0, 1.0, grid_points)
    h = grid[1] - grid[0]
    uniq, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    freq = counts / counts.sum()
    idx = np.clip(np.rint((uniq + 1) / h).astype(int), 0, grid_points - 1)
    prior = np.bincount(idx, weights=freq, minlength=grid_points)
    kernel = shot_kernel(uniq, grid, n_shots)
    max_iter = BAYES_MAX_ITER if iterations is None else iterations
    g2 = grid**2
    m_prev = float(prior @ g2)
    for _ in range(max_iter):
        evidence = kernel @ prior
        prior = prior * (kernel.T @ (freq / np.where(evidence > 0, evidence, 1)))
        prior /= prior.sum()
        m = float(prior @ g2)
        if iterations is None and abs(m - m_prev) < tol:
            break
        m_prev = m
    return grid, prior


def bayes_correct_moment(ds: CorrelationDataset, subset, iterations: Optional[int] = None,
                         grid_points: int = GRID_POINTS) -> MomentEstimate:
    """Second moment with the finite-shot bias removed.

    Exact-mode datasets have no shot noise, so the raw estimate is returned
    (retagged).  The error is the settings-sampling error evaluated with the
    corrected second moment and the sample fourth moment.
    """
    mask = as_mask(subset)
    e = ds.values(mask)
    ns = len(e)
    raw = estimate_moment(ds, mask)
    if ds.n_shots is None:
        return MomentEstimate(mask, 2, raw.value, raw.error, "bayes-corrected")
    grid, w = deconvolve(e, ds.n_shots, grid_points, iterations)
    value = float(w @ grid**2)
    err = second_moment_error(value, float(np.mean(e**4)), ns)
    return MomentEstimate(mask, 2, value, err, "bayes-corrected")


def estimate_all(ds: CorrelationDataset, estimator: str = "bayes-corrected",
                 **kwargs) -> dict[int, MomentEstimate]:
    """Second-moment estimates for every nonempty subset of the dataset."""
    fn = {"raw": estimate_moment, "bayes-corrected": bayes_correct_moment}[estimator]
    return {m: fn(ds, m, **kwargs) for m in range(1, 1 << ds.n)}
