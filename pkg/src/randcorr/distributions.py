"""Distributions of random correlations and the product-distribution test.

For a pure product state of n qubits, |E| over random settings is distributed
like a product of n independent uniform variables on [0, 1], with density
(-ln e)^(n-1) / (n-1)!.  A maximally entangled two-qubit pair gives a flat
distribution, and a maximally mixed state a point mass at zero.

If a pure state factorizes across A|B then E_AB = E_A E_B setting by setting,
so the distribution of E_AB must equal that of a product of independent draws
of E_A and E_B.  :func:`product_distribution_test` checks this with a
two-sample Kolmogorov-Smirnov test.  Rejection points to entanglement across
the cut only when the state is known to be pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .quantum import as_mask
from .sampling import CorrelationDataset

DEFAULT_BINS = 50
CONSISTENT = "consistent-with-product"
REJECTED = "product-rejected"
MODELS = ("product-pure", "uniform", "mixed-delta")


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    mode: str = "counts"

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    statistic: float
    threshold: float
    alpha: float
    pvalue: float

    @property
    def verdict(self) -> str:
        return REJECTED if self.statistic > self.threshold else CONSISTENT

    @property
    def rejected(self) -> bool:
        return self.verdict == REJECTED


def histogram(ds: CorrelationDataset, subset, bins: int = DEFAULT_BINS,
              signed: bool = False, density: bool = False) -> Histogram:
    """Histogram of |E| on [0, 1] (default) or of E on [-1, 1]."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if ds.n_settings == 0:
        raise ValueError("empty dataset")
    e = ds.values(subset)
    lo, x = (-1.0, e) if signed else (0.0, np.abs(e))
    counts, edges = np.histogram(x, bins=bins, range=(lo, 1.0))
    if density:
        return Histogram(edges, counts / (counts.sum() * np.diff(edges)), "density")
    return Histogram(edges, counts.astype(float), "counts")


def product_pure_pdf(x, n: int) -> np.ndarray:
    """Density of |E| for a pure product state of n qubits (diverges at 0 for n > 1)."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.inf if n > 1 else 1.0)
    pos = x > 0
    out[pos] = (-np.log(x[pos])) ** (n - 1) / math.factorial(n - 1)
    out[(x < 0) | (x > 1)] = 0.0
    return out


def product_pure_cdf(x, n: int) -> np.ndarray:
    """CDF of a product of n independent uniform [0, 1] variables."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    pos = x > 0
    lx = -np.log(x[pos])
    out[pos] = x[pos] * sum(lx**k / math.factorial(k) for k in range(n))
    return out


def theoretical_density(model: str, grid, n: int = 1) -> np.ndarray:
    """Reference densities of |E| on [0, 1].

    ``mixed-delta`` is discretized as all mass on the grid point nearest 0
    (height 1/spacing).
    """
    grid = np.asarray(grid, dtype=float)
    if model == "product-pure":
        if n < 1:
            raise ValueError("product-pure needs n >= 1")
        return product_pure_pdf(grid, n)
    if model == "uniform":
        return np.where((grid >= 0) & (grid <= 1), 1.0, 0.0)
    if model == "mixed-delta":
        out = np.zeros_like(grid)
        h = grid[1] - grid[0] if grid.size > 1 else 1.0
        out[np.argmin(np.abs(grid))] = 1.0 / h
        return out
    raise ValueError(f"unsupported model {model!r}; expected one of {MODELS}")


def ks_threshold(n1: int, n2: int | None, alpha: float) -> float:
    """Asymptotic KS critical value; ``n2=None`` for the one-sample test."""
    c = stats.kstwobign.ppf(1 - alpha)
    eff = n1 if n2 is None else n1 * n2 / (n1 + n2)
    return float(c / math.sqrt(eff))


def law_test(values, model: str, n: int = 1, alpha: float = 0.01) -> TestResult:
    """One-sample KS test of |values| against a reference law of |E|."""
    x = np.abs(np.asarray(values, dtype=float))
    if model == "product-pure":
        cdf = lambda t: product_pure_cdf(t, n)  # noqa: E731
    elif model == "uniform":
        cdf = stats.uniform(0, 1).cdf
    else:
        raise ValueError(f"no KS law for model {model!r}")
    res = stats.kstest(x, cdf)
    return TestResult(float(res.statistic), ks_threshold(len(x), None, alpha), alpha, float(res.pvalue))


def product_distribution_test(ds: CorrelationDataset, a, b, alpha: float = 0.01,
                              seed: int = 0) -> TestResult:
    """KS test of E_{A u B} against independently paired E_A * E_B.

    Marginal values are decorrelated by two independent random permutations
    before multiplication.
    """
    ma, mb = as_mask(a), as_mask(b)
    if not ma or not mb:
        raise ValueError("subsets must be nonempty")
    if ma & mb:
        raise ValueError("subsets overlap")
    joint = ds.values(ma | mb)
    rng = np.random.default_rng(seed)
    synth = ds.values(ma)[rng.permutation(ds.n_settings)] * ds.values(mb)[rng.permutation(ds.n_settings)]
    res = stats.ks_2samp(joint, synth)
    thr = ks_threshold(len(joint), len(synth), alpha)
    return TestResult(float(res.statistic), thr, alpha, float(res.pvalue))


def sample_std(ds: CorrelationDataset, subset) -> float:
    return float(np.std(ds.values(subset), ddof=1))
