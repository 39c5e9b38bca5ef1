"""Random biseparable states and numerical checks of the witness bounds.

A biseparable state is a convex mixture of terms rho_A x rho_B, each term
product across its own bipartition A|B.  :func:`sample_biseparable` draws such
mixtures from a few ensembles and :func:`scan_bound` evaluates the exact
witness and purity of many samples, binning them by purity to record the
empirical frontier and any violation of :func:`~randcorr.witnesses.bisep_bound`.

Sample ``i`` of a scan with seed ``s`` uses the substream
``SeedSequence(s, spawn_key=(i,))`` and can be regenerated on its own with
:func:`scan_sample`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from .quantum import DensityMatrix, POSITIVITY_TOL, permute_qubits, tensors_from_matrices
from .witnesses import batch_witness, bisep_bound

BIN_WIDTH = 0.01
VIOLATION_TOL = 1e-9
ENSEMBLES = ("mixture", "pure-pair", "family")
ENSEMBLE_WEIGHTS = (0.6, 0.3, 0.1)


def _bell(sign: int = 1) -> np.ndarray:
    v = np.zeros(4)
    v[0], v[3] = 1, sign
    v /= math.sqrt(2)
    return np.outer(v, v)


_KET0 = np.diag([1.0, 0.0])
_KET1 = np.diag([0.0, 1.0])


def boundary_state(n: int, p: float) -> DensityMatrix:
    """Biseparable mixtures that attain the bound.

    n=2: p|00><00| + (1-p)|11><11|
    n=3: p phi+ x |0><0| + (1-p) phi- x |1><1|
    n=4: p phi+_12 x phi+_34 + (1-p) phi+_13 x phi+_24
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if n == 2:
        m = p * np.kron(_KET0, _KET0) + (1 - p) * np.kron(_KET1, _KET1)
    elif n == 3:
        m = p * np.kron(_bell(1), _KET0) + (1 - p) * np.kron(_bell(-1), _KET1)
    elif n == 4:
        pair = np.kron(_bell(), _bell())
        # swap qubits 2 and 3 to pair 1-3 and 2-4
        m = p * pair + (1 - p) * permute_qubits(pair, [0, 2, 1, 3])
    else:
        raise ValueError(f"no boundary family for n = {n}")
    return DensityMatrix(m)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state on dimension d as a density matrix."""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_mixed(d: int, rng: np.random.Generator) -> np.ndarray:
    """Trace-normalized G G^dag with a random-rank Ginibre G, optionally whitened."""
    k = int(rng.integers(1, d + 1))
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    m /= np.trace(m).real
    if rng.random() < 0.5:
        lam = rng.random()
        m = lam * m + (1 - lam) * np.eye(d) / d
    return m


def random_bipartition(n: int, rng: np.random.Generator) -> list[int]:
    """0-based qubits of side A; side A always holds qubit 0 so each cut appears once."""
    code = int(rng.integers(0, 2 ** (n - 1) - 1))
    rest = [q for q in range(1, n) if code >> (q - 1) & 1]
    return [0] + rest


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    da, db = a.shape[0], b.shape[0]
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(da * db, da * db)


def product_term(n: int, side_a: list[int], rho_a: np.ndarray, rho_b: np.ndarray) -> np.ndarray:
    side_b = [q for q in range(n) if q not in side_a]
    order = side_a + side_b  # factor qubit k sits at position order[k]
    return permute_qubits(_kron(rho_a, rho_b), order)


def _factor(k: int, rng: np.random.Generator, pure_only: bool) -> np.ndarray:
    if pure_only or rng.random() < 0.5:
        return random_pure(1 << k, rng)
    return random_mixed(1 << k, rng)


def _random_lu(n: int, rng: np.random.Generator) -> np.ndarray:
    us = []
    for _ in range(n):
        q = rng.standard_normal(4)
        a, b, c, d = q / np.linalg.norm(q)
        us.append(np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]]))
    return reduce(_kron, us)


def sample_biseparable(n: int, rng: np.random.Generator, ensemble: Optional[str] = None) -> DensityMatrix:
    """Random biseparable state of n qubits.

    ``mixture``: 1-8 product terms with independent cuts, pure or mixed factors
    and Dirichlet weights.  ``pure-pair``: two terms with pure factors.
    ``family``: a boundary family member with random weight, local unitaries
    and qubit relabelling (n = 3, 4 only).
    """
    return DensityMatrix(_biseparable_matrix(n, rng, ensemble))


def _biseparable_matrix(n: int, rng: np.random.Generator, ensemble: Optional[str] = None) -> np.ndarray:
    if ensemble is None:
        ensemble = ENSEMBLES[int(rng.choice(3, p=ENSEMBLE_WEIGHTS))]
    d = 1 << n
    if ensemble == "family" and n in (3, 4):
        m = boundary_state(n, float(rng.random())).matrix
        m = permute_qubits(m, list(rng.permutation(n)))
        u = _random_lu(n, rng)
        m = u @ m @ u.conj().T
    elif ensemble in ("mixture", "pure-pair", "family"):
        terms = 2 if ensemble != "mixture" else int(rng.integers(1, 9))
        pure_only = ensemble != "mixture"
        w = rng.dirichlet(np.full(terms, float(rng.choice([0.2, 1.0, 5.0]))))
        m = np.zeros((d, d), dtype=complex)
        for wt in w:
            side_a = random_bipartition(n, rng)
            ra = _factor(len(side_a), rng, pure_only)
            rb = _factor(n - len(side_a), rng, pure_only)
            m += wt * product_term(n, side_a, ra, rb)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    return (m + m.conj().T) / 2


def sample_arbitrary(n: int, rng: np.random.Generator) -> DensityMatrix:
    """Random n-qubit state with no separability constraint."""
    d = 1 << n
    m = random_pure(d, rng) if rng.random() < 0.5 else random_mixed(d, rng)
    return DensityMatrix((m + m.conj().T) / 2)


def purity_edges(n: int, width: float = BIN_WIDTH) -> np.ndarray:
    lo = 2.0**-n
    edges = np.arange(lo, 1.0, width)
    if 1.0 - edges[-1] < width / 2 and len(edges) > 1:
        edges = edges[:-1]
    return np.append(edges, 1.0)


def whiten_to(m: np.ndarray, target: float) -> Optional[np.ndarray]:
    """Mix with white noise to reach purity ``target``; None if already below it."""
    d = m.shape[0]
    p = float(np.real(np.einsum("ij,ji->", m, m)))
    if p < target:
        return None
    if p - 1 / d < 1e-15:
        return m
    lam = math.sqrt((target - 1 / d) / (p - 1 / d))
    return lam * m + (1 - lam) * np.eye(d) / d


def sample_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def raise_purity(m: np.ndarray, pure: np.ndarray, target: float) -> np.ndarray:
    """Mix ``m`` with the pure state ``pure`` so the purity becomes ``target``.

    P(t) = t^2 P_m + 2 t (1 - t) tr(m pure) + (1 - t)^2 is convex, equals 1 at
    t = 0 and P_m < target at t = 1, so the smaller root is the crossing.
    """
    pm = float(np.real(np.einsum("ij,ji->", m, m)))
    ov = float(np.real(np.einsum("ij,ji->", m, pure)))
    a, b, c = pm - 2 * ov + 1, 2 * ov - 2, 1 - target
    t = (-b - math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    t = min(max(t, 0.0), 1.0)
    return t * m + (1 - t) * pure


def _scan_matrix(n: int, seed: int, index: int, mode: str, bin_width: float) -> np.ndarray:
    rng = sample_stream(seed, index)
    edges = purity_edges(n, bin_width)
    b = index % (len(edges) - 1)
    target = float(edges[b] + rng.random() * (edges[b + 1] - edges[b]))
    if mode == "all":
        d = 1 << n
        m = random_pure(d, rng) if rng.random() < 0.5 else random_mixed(d, rng)
        pure = random_pure(d, rng)
    elif mode == "bisep":
        ensemble = ENSEMBLES[int(rng.choice(3, p=ENSEMBLE_WEIGHTS))]
        m = _biseparable_matrix(n, rng, ensemble)
        if ensemble == "family":
            return m
        side_a = random_bipartition(n, rng)
        pure = product_term(n, side_a, random_pure(1 << len(side_a), rng),
                            random_pure(1 << (n - len(side_a)), rng))
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    out = whiten_to(m, target)
    return out if out is not None else raise_purity(m, pure, target)


def scan_sample(n: int, seed: int, index: int, mode: str = "bisep",
                bin_width: float = BIN_WIDTH) -> DensityMatrix:
    """The state drawn as sample ``index`` of a scan, regenerated exactly.

    Samples are stratified in purity: sample ``i`` aims at bin ``i mod nbins``
    (uniform within the bin).  A state that is too pure is mixed with white
    noise, one that is too mixed is mixed with a random pure product state;
    both keep biseparable states biseparable.  Boundary-family samples keep
    their own purity.  ``mode="all"`` draws unrestricted states instead.
    """
    return DensityMatrix(_scan_matrix(n, seed, index, mode, bin_width))


@dataclass
class FrontierTable:
    """Per purity bin: sample count, largest witness and its bound, violations.

    In ``all`` mode the violation column counts states above the biseparable
    bound, which is expected for entangled states and not a failure.
    """

    n: int
    edges: np.ndarray
    counts: np.ndarray
    max_witness: np.ndarray
    purity_at_max: np.ndarray
    bound_at_max: np.ndarray
    violations: np.ndarray
    mode: str = "bisep"
    offenders: list = field(default_factory=list)
    seed: Optional[int] = None

    @classmethod
    def empty(cls, n: int, edges: np.ndarray, mode: str = "bisep", seed: Optional[int] = None):
        k = len(edges) - 1
        nan = np.full(k, np.nan)
        return cls(n, edges, np.zeros(k, int), nan.copy(), nan.copy(), nan.copy(),
                   np.zeros(k, int), mode, [], seed)

    @property
    def total_violations(self) -> int:
        return int(self.violations.sum())

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())

    def add(self, index: np.ndarray, witness: np.ndarray, purity: np.ndarray,
            tolerance: float = VIOLATION_TOL) -> None:
        bins = np.clip(np.searchsorted(self.edges, purity, side="right") - 1, 0, len(self.counts) - 1)
        for i, w, p, b in zip(index, witness, purity, bins):
            bound = bisep_bound(self.n, float(min(max(p, 2.0**-self.n), 1.0)))
            self.counts[b] += 1
            if not w <= self.max_witness[b]:  # also true for nan
                self.max_witness[b] = w
                self.purity_at_max[b] = p
                self.bound_at_max[b] = bound
            if w - bound > tolerance:
                self.violations[b] += 1
                if self.mode == "bisep":
                    self.offenders.append((int(i), float(p), float(w), float(bound)))

    def merge(self, other: "FrontierTable") -> "FrontierTable":
        """Associative combination: counts add, maxima take the larger witness."""
        if not np.array_equal(self.edges, other.edges) or self.n != other.n:
            raise ValueError("cannot merge tables with different binning")
        out = FrontierTable.empty(self.n, self.edges, self.mode, self.seed)
        out.counts = self.counts + other.counts
        out.violations = self.violations + other.violations
        take = ~(np.nan_to_num(self.max_witness, nan=-np.inf) >= np.nan_to_num(other.max_witness, nan=-np.inf))
        for name in ("max_witness", "purity_at_max", "bound_at_max"):
            a, b = getattr(self, name), getattr(other, name)
            setattr(out, name, np.where(take, b, a))
        out.offenders = sorted(self.offenders + other.offenders)
        return out


def evaluate(matrices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact witness and purity for a batch of n-qubit density matrices.

    Purity is computed both from the tensor and as tr(rho^2); they must agree.
    """
    tensors = tensors_from_matrices(matrices)
    w, p = batch_witness(tensors)
    p_matrix = np.real(np.einsum("bij,bji->b", matrices, matrices))
    if np.max(np.abs(p - p_matrix)) > 1e-10:
        raise AssertionError("purity from tensor and matrix disagree")
    lam = np.linalg.eigvalsh(matrices)
    if lam[:, 0].min() < -POSITIVITY_TOL:
        raise AssertionError("sample is not positive semi-definite")
    return w, p


def _scan_chunk(n, seed, indices, mode, bin_width, tolerance, edges, sampler):
    if sampler is None:
        mats = [_scan_matrix(n, seed, i, mode, bin_width) for i in indices]
    else:
        mats = [np.asarray(getattr(s, "matrix", s)) for s in (sampler(n, seed, i) for i in indices)]
    w, p = evaluate(np.stack(mats))
    table = FrontierTable.empty(n, edges, mode, seed)
    table.add(np.asarray(indices), w, p, tolerance)
    return table


def scan_bound(n: int, samples: int, seed: int = 0, mode: str = "bisep",
               bin_width: float = BIN_WIDTH, tolerance: float = VIOLATION_TOL,
               workers: int = 1, chunk: int = 2048, sampler=None) -> FrontierTable:
    """Sample states, evaluate exact witnesses, and tabulate the frontier.

    ``sampler(n, seed, index)`` overrides the built-in stratified sampler; it
    must return a density matrix (array or :class:`DensityMatrix`).
    """
    if n not in (3, 4) and sampler is None:
        raise ValueError(f"bound scans are defined for n = 3, 4, got {n}")
    if samples < 1:
        raise ValueError("need at least one sample")
    edges = purity_edges(n, bin_width)
    blocks = [range(a, min(a + chunk, samples)) for a in range(0, samples, chunk)]
    job = lambda r: _scan_chunk(n, seed, list(r), mode, bin_width, tolerance, edges, sampler)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(r) for r in blocks]
    return reduce(FrontierTable.merge, parts)
