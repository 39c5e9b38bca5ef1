"""Purity-aware entanglement witnesses built from second moments.

For a set of qubits W the witness is

    M_W = m_W - 1/2 * sum_{A proper nonempty subset of W} m_A m_{W \\ A}

and biseparable states of |W| = 2, 3, 4 qubits obey purity-dependent upper
bounds (:func:`bisep_bound`).  Exceeding the bound certifies entanglement for
two qubits and genuine multipartite entanglement for three and four.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .moments import MomentEstimate, estimate_all, exact_moments
from .quantum import (
    CorrelationTensor,
    as_mask,
    full_mask,
    mask_label,
    popcount,
    submasks,
    subset_square_sums,
)
from .sampling import CorrelationDataset

P0 = (-4 + 3 * math.sqrt(3)) / 2
DETECTED = "entangled"
NOT_DETECTED = "not-detected"
NO_BOUND = "no-bound"
# exact data has zero error; margins below this are rounding
EXACT_TOL = 1e-9


def _bound_and_slope(n: int, p: float) -> tuple[float, float]:
    if n == 2:
        if p >= 0.5:
            return 4 * (1 - p) * p / 9, 4 * (1 - 2 * p) / 9
        return (4 * p - 1) / 9, 4 / 9
    if n == 3:
        if p <= 0.25:
            return (8 * p - 1) / 27, 8 / 27
        if p <= 0.5:
            return 4 * p / 27, 4 / 27
        return 8 * (1 - p) * p / 27, 8 * (1 - 2 * p) / 27
    if n == 4:
        if p <= 0.25:
            return (16 * p - 1) / 81, 16 / 81
        if p <= P0:
            return 2 * (-8 * p**2 + 16 * p + 1) / 243, 2 * (-16 * p + 16) / 243
        return 8 * (1 - p**2) / 81, -16 * p / 81
    raise ValueError(f"no biseparability bound for n = {n}; supported n are 2, 3, 4")


def _check_purity(n: int, p: float, tol: float = 1e-12) -> None:
    if not 2.0**-n - tol <= p <= 1 + tol:
        raise ValueError(f"purity {p} outside the physical range [2^-{n}, 1]")


def bisep_bound(n: int, purity: float) -> float:
    """Largest witness value of a biseparable n-qubit state with this purity."""
    b, _ = _bound_and_slope(n, purity)
    _check_purity(n, purity)
    return b


def bisep_bound_slope(n: int, purity: float) -> float:
    _check_purity(n, purity)
    return _bound_and_slope(n, purity)[1]


def _moment(moments: Mapping[int, MomentEstimate], mask: int) -> MomentEstimate:
    try:
        return moments[mask]
    except KeyError:
        raise KeyError(f"missing moment for subset {mask_label(mask)}") from None


def witness_value(moments: Mapping[int, MomentEstimate], n: Optional[int] = None,
                  subset=None) -> tuple[float, float]:
    """Witness value and first-order propagated error on ``subset``.

    ``subset`` defaults to all ``n`` qubits.  Moment errors are treated as
    independent.
    """
    mask = full_mask(n) if subset is None else as_mask(subset)
    tags = {_moment(moments, a).tag for a in submasks(mask)}
    if len(tags) > 1:
        raise ValueError(f"mixed estimator tags {sorted(tags)}")
    top = _moment(moments, mask)
    value = top.value
    grad = {mask: 1.0}
    for a in submasks(mask):
        if a == mask:
            continue
        b = mask ^ a
        ma, mb = _moment(moments, a).value, _moment(moments, b).value
        value -= 0.5 * ma * mb
        # the pair (a, b) appears twice in the sum, once per ordering
        grad[a] = grad.get(a, 0.0) - mb
    err2 = sum((g * _moment(moments, a).error) ** 2 for a, g in grad.items())
    return float(value), float(math.sqrt(err2))


def subset_purity(moments: Mapping[int, MomentEstimate], subset) -> tuple[float, float]:
    """Purity of the reduced state on ``subset`` and its propagated error.

    P = 2^-|W| sum_{A subset of W} 3^|A| m_A, with m_{} = 1.
    """
    mask = as_mask(subset)
    k = popcount(mask)
    value, err2 = 1.0, 0.0
    for a in submasks(mask):
        m = _moment(moments, a)
        c = 3.0 ** popcount(a)
        value += c * m.value
        err2 += (c * m.error) ** 2
    return value / 2**k, math.sqrt(err2) / 2**k


@dataclass
class SubsetReport:
    subset: int
    purity: float
    purity_error: float
    witness: Optional[float] = None
    witness_error: Optional[float] = None
    bound: Optional[float] = None
    bound_error: Optional[float] = None
    verdict: str = NO_BOUND

    @property
    def size(self) -> int:
        return popcount(self.subset)

    @property
    def combined_error(self) -> float:
        return math.hypot(self.witness_error or 0.0, self.bound_error or 0.0)

    @property
    def detected(self) -> bool:
        return self.verdict == DETECTED


@dataclass
class WitnessReport:
    """Witness analysis of a dataset; the full-set verdict plus one entry per subset."""

    n: int
    estimator: str
    z: float
    subsets: dict[int, SubsetReport] = field(default_factory=dict)

    @property
    def full(self) -> SubsetReport:
        return self.subsets[full_mask(self.n)]

    @property
    def witness(self) -> Optional[float]:
        return self.full.witness

    @property
    def verdict(self) -> str:
        return self.full.verdict

    def detected_subsets(self) -> list[int]:
        return [m for m, r in self.subsets.items() if r.detected]


def assess_subset(moments: Mapping[int, MomentEstimate], subset, z: float = 3.0) -> SubsetReport:
    mask = as_mask(subset)
    k = popcount(mask)
    p, dp = subset_purity(moments, mask)
    rep = SubsetReport(mask, p, dp)
    if k < 2:
        return rep
    rep.witness, rep.witness_error = witness_value(moments, subset=mask)
    if k > 4:
        return rep
    # estimated purity may leave the physical range through noise
    pc = min(max(p, 2.0**-k), 1.0)
    rep.bound = bisep_bound(k, pc)
    rep.bound_error = abs(bisep_bound_slope(k, pc)) * dp
    margin = max(z * rep.combined_error, EXACT_TOL)
    rep.verdict = DETECTED if rep.witness - rep.bound > margin else NOT_DETECTED
    return rep


def report_from_moments(moments: Mapping[int, MomentEstimate], n: int, z: float = 3.0,
                        estimator: str | None = None) -> WitnessReport:
    if estimator is None:
        estimator = next(iter(moments.values())).tag
    rep = WitnessReport(n, estimator, z)
    for mask in range(1, 1 << n):
        rep.subsets[mask] = assess_subset(moments, mask, z)
    return rep


def witness_report(ds: CorrelationDataset, z: float = 3.0,
                   estimator: str = "bayes-corrected", **kwargs) -> WitnessReport:
    """Bias-corrected moments, purities and witness verdicts for every subset."""
    moments = estimate_all(ds, estimator, **kwargs)
    return report_from_moments(moments, ds.n, z, estimator)


def exact_report(T: CorrelationTensor, z: float = 3.0) -> WitnessReport:
    return report_from_moments(exact_moments(T), T.n, z, "exact")


def batch_witness(tensors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact full-set witness and purity for a batch of tensors ``(B, 4, ..., 4)``."""
    n = tensors.ndim - 1
    masks = list(range(1, 1 << n))
    sums = subset_square_sums(tensors, masks)
    m = np.ones((tensors.shape[0], 1 << n))
    for k, mask in enumerate(masks):
        m[:, mask] = sums[:, k] / 3 ** popcount(mask)
    top = full_mask(n)
    w = m[:, top].copy()
    for a in range(1, top):
        w -= 0.5 * m[:, a] * m[:, top ^ a]
    purity = np.sum(tensors.reshape(tensors.shape[0], -1) ** 2, axis=1) / 2**n
    return w, purity
