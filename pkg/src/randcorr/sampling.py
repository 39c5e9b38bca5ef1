"""Random measurement settings and simulated correlation data.

A measurement setting is one unit Bloch vector per qubit.  Correlations for
every qubit subset are evaluated in one contraction of the correlation tensor,
and finite-shot data are drawn from the joint outcome table so that all
marginal correlations of a setting come from the same shots.

Randomness is keyed by index: setting ``j`` uses the substream
``SeedSequence(seed, spawn_key=(0, j))`` and noise block ``b`` uses
``SeedSequence(seed, spawn_key=(1, b))``.  Results therefore do not depend on
how settings are distributed over workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quantum import (
    CorrelationTensor,
    DensityMatrix,
    as_mask,
    bloch_rotation,
    correlation_tensor,
    haar_local_unitary,
    popcount,
)

NEGATIVE_PROB_TOL = 1e-12
NOISE_MODES = ("none", "fresh", "drift")


def sign_matrix(n: int) -> np.ndarray:
    """``S[o, A] = prod_{i in A} o_i`` with outcome bit 1 meaning -1."""
    idx = np.arange(1 << n)
    parity = np.array([[popcount(o & a) & 1 for a in idx] for o in idx])
    return 1 - 2 * parity


@dataclass(frozen=True)
class NoiseModel:
    """Schedule of unknown local unitaries acting before measurement.

    ``none``: no noise.  ``fresh``: new Haar unitaries for every setting.
    ``drift``: one set of unitaries per block of ``block`` consecutive settings.
    """

    mode: str = "none"
    block: int = 1

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.block < 1:
            raise ValueError("drift block length must be >= 1")

    def block_of(self, j: int) -> Optional[int]:
        if self.mode == "none":
            return None
        if self.mode == "fresh":
            return j
        return j // self.block

    def describe(self) -> str:
        return f"drift:{self.block}" if self.mode == "drift" else self.mode

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        if text.startswith("drift"):
            _, _, b = text.partition(":")
            return cls("drift", int(b) if b else 1)
        return cls(text)


@dataclass(frozen=True)
class SettingRecord:
    """Correlations of one setting; ``correlations[mask]`` for every subset."""

    index: int
    directions: np.ndarray
    correlations: np.ndarray
    n_shots: Optional[int]

    def __getitem__(self, subset) -> float:
        return float(self.correlations[as_mask(subset)])


@dataclass
class CorrelationDataset:
    """Per-setting correlations for every nonempty qubit subset.

    ``directions`` has shape ``(N_s, n, 3)``.  ``correlations`` has shape
    ``(N_s, 2**n)`` with column ``mask`` holding the subset correlation and
    column 0 fixed at 1.  ``n_shots`` is ``None`` for exact (infinite-shot)
    data.
    """

    n: int
    directions: np.ndarray
    correlations: np.ndarray
    n_shots: Optional[int]
    seed: Optional[int] = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    state: dict = field(default_factory=dict)

    @property
    def n_settings(self) -> int:
        return self.correlations.shape[0]

    @property
    def exact(self) -> bool:
        return self.n_shots is None

    def values(self, subset) -> np.ndarray:
        mask = as_mask(subset)
        if not 0 < mask < 1 << self.n:
            raise ValueError(f"subset mask {mask} invalid for {self.n} qubits")
        return self.correlations[:, mask]

    def record(self, j: int) -> SettingRecord:
        return SettingRecord(j, self.directions[j], self.correlations[j], self.n_shots)

    @property
    def records(self) -> list[SettingRecord]:
        return [self.record(j) for j in range(self.n_settings)]


def sample_setting(n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent directions uniform on the unit sphere, shape ``(n, 3)``."""
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def all_correlations(T: CorrelationTensor, directions: np.ndarray) -> np.ndarray:
    """Exact correlations of every subset for a batch of settings.

    ``directions`` is ``(n, 3)`` or ``(N_s, n, 3)``; returns ``(2**n,)`` or
    ``(N_s, 2**n)`` indexed by subset mask (entry 0 is 1).
    """
    directions = np.asarray(directions, dtype=float)
    single = directions.ndim == 2
    if single:
        directions = directions[None]
    ns, n, _ = directions.shape
    if n != T.n:
        raise ValueError(f"setting has {n} directions for a {T.n}-qubit state")
    # per qubit: row 0 selects the identity component, row 1 the direction
    w = np.zeros((ns, n, 2, 4))
    w[:, :, 0, 0] = 1.0
    w[:, :, 1, 1:] = directions
    x = np.tensordot(w[:, 0], T.entries, axes=([2], [0]))  # (ns, 2, 4, ..., 4)
    for q in range(1, n):
        x = np.einsum("s...b,sab->s...a", np.moveaxis(x, 1 + q, -1), w[:, q])
        x = np.moveaxis(x, -1, 1 + q)
    # bit q of the column index <-> axis of qubit q
    x = x.transpose([0] + list(range(n, 0, -1))).reshape(ns, 1 << n)
    return x[0] if single else x


def exact_correlation(T: CorrelationTensor, directions: np.ndarray, subset) -> float:
    mask = as_mask(subset)
    if mask == 0:
        raise ValueError("subset must be nonempty")
    return float(all_correlations(T, directions)[mask])


def outcome_distribution(T: CorrelationTensor, directions: np.ndarray) -> np.ndarray:
    """Joint probabilities over outcome tuples in {+1, -1}^n.

    Index bit ``q`` set means qubit ``q + 1`` gave -1.  Entries in
    ``[-1e-12, 0)`` are clipped; anything more negative means the tensor is
    not a physical state.
    """
    e = all_correlations(T, directions)
    return _probabilities(e, sign_matrix(T.n))


def _probabilities(e: np.ndarray, signs: np.ndarray) -> np.ndarray:
    p = signs @ e / signs.shape[0]
    if p.min() < -NEGATIVE_PROB_TOL:
        raise ValueError(f"negative outcome probability {p.min():.3e}; tensor is not physical")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def simulate_setting(T: CorrelationTensor, directions: np.ndarray, n_shots: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Shot-estimated correlations of every subset from ``n_shots`` outcomes."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    signs = sign_matrix(T.n)
    p = _probabilities(all_correlations(T, directions), signs)
    counts = rng.multinomial(n_shots, p)
    return signs.T @ counts / n_shots


def setting_stream(seed: int, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0, j))))


def noise_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, block))))


def _run_chunk(T, n_settings_range, n_shots, noise, seed, signs):
    n = T.n
    idx = list(n_settings_range)
    rngs = [setting_stream(seed, j) for j in idx]
    dirs = np.stack([sample_setting(n, r) for r in rngs])
    if noise.mode != "none":
        rotations = {}
        for k, j in enumerate(idx):
            b = noise.block_of(j)
            if b not in rotations:
                nrng = noise_stream(seed, b)
                rotations[b] = [bloch_rotation(haar_local_unitary(nrng)) for _ in range(n)]
            # U^dag (a.sigma) U = (R^T a).sigma
            dirs[k] = np.stack([rotations[b][q].T @ dirs[k, q] for q in range(n)])
    e = all_correlations(T, dirs)
    if n_shots is None:
        return dirs, e
    out = np.empty_like(e)
    for k, r in enumerate(rngs):
        p = _probabilities(e[k], signs)
        out[k] = signs.T @ r.multinomial(n_shots, p) / n_shots
    return dirs, out


def run_experiment(state, n_settings: int, n_shots: Optional[int] = None,
                   noise: NoiseModel | None = None, seed: int = 0,
                   workers: int = 1, chunk: int = 1024,
                   metadata: dict | None = None) -> CorrelationDataset:
    """Simulate ``n_settings`` random settings with ``n_shots`` shots each.

    ``state`` is a :class:`DensityMatrix` or :class:`CorrelationTensor`.
    ``n_shots=None`` records exact correlations.  Stored directions are the
    effective ones, i.e. after folding in the noise unitaries.
    """
    if n_settings < 1:
        raise ValueError("n_settings must be >= 1")
    if n_shots is not None and n_shots < 1:
        raise ValueError("n_shots must be >= 1 or None")
    noise = noise or NoiseModel()
    T = correlation_tensor(state) if isinstance(state, DensityMatrix) else state
    signs = sign_matrix(T.n)
    ranges = [range(a, min(a + chunk, n_settings)) for a in range(0, n_settings, chunk)]
    job = lambda r: _run_chunk(T, r, n_shots, noise, seed, signs)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, ranges))
    else:
        parts = [job(r) for r in ranges]
    dirs = np.concatenate([p[0] for p in parts])
    corr = np.concatenate([p[1] for p in parts])
    corr[:, 0] = 1.0
    return CorrelationDataset(T.n, dirs, corr, n_shots, seed, noise, dict(metadata or {}))
