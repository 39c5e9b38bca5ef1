"""Exact n-qubit state algebra in the Pauli correlation-tensor picture.

A state on n qubits is stored canonically as its correlation tensor

    T[mu_1, ..., mu_n] = tr(rho sigma_mu_1 x ... x sigma_mu_n),   mu_i in {0, 1, 2, 3}

with axis ``i`` belonging to qubit ``i + 1``.  Density matrices use the usual
Kronecker ordering where qubit 1 is the most significant bit.

Qubit subsets are integer bitmasks: bit ``i`` set means qubit ``i + 1`` is in
the subset.  :func:`as_mask` converts from 1-based qubit labels.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 6
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([I2, SX, SY, SZ])

# tr(rho sigma) = sum_{r,c} rho[r, c] sigma[c, r]; rows index mu, columns r*2+c
_TO_TENSOR = np.stack([p.T.reshape(4) for p in PAULIS])
# rho[r, c] = 1/2 sum_mu T_mu sigma_mu[r, c] (per qubit)
_FROM_TENSOR = np.stack([p.reshape(4) for p in PAULIS], axis=1) / 2

PAULI_INDEX = {"0": 0, "i": 0, "x": 1, "y": 2, "z": 3}

MaskLike = Union[int, Iterable[int]]


class NonPhysicalStateError(ValueError):
    """Raised when a matrix or tensor does not describe a quantum state."""


def as_mask(subset: MaskLike) -> int:
    """Bitmask from an int mask or an iterable of 1-based qubit labels."""
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    mask = 0
    for q in subset:
        if q < 1:
            raise ValueError(f"qubit labels are 1-based, got {q}")
        mask |= 1 << (q - 1)
    return mask


def mask_qubits(mask: int) -> tuple[int, ...]:
    """1-based qubit labels contained in ``mask``."""
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def mask_label(mask: int) -> str:
    """Compact label such as ``'124'`` (qubits 1, 2 and 4)."""
    return "".join(str(q) for q in mask_qubits(mask))


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def full_mask(n: int) -> int:
    return (1 << n) - 1


def nonempty_subsets(n: int) -> list[int]:
    """All nonempty subsets of n qubits ordered by bitmask value."""
    return list(range(1, 1 << n))


def submasks(mask: int) -> list[int]:
    """Nonempty submasks of ``mask``, ascending."""
    return [a for a in range(1, mask + 1) if a & mask == a]


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}, got {n}")


@dataclass(frozen=True)
class DensityMatrix:
    """Validated n-qubit density matrix."""

    matrix: np.ndarray
    n: int

    def __init__(self, matrix, check: bool = True):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("density matrix must be square")
        dim = matrix.shape[0]
        n = dim.bit_length() - 1
        if 1 << n != dim:
            raise ValueError(f"dimension {dim} is not a power of two")
        _check_n(n)
        if check:
            if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
                raise NonPhysicalStateError("matrix is not Hermitian")
            if abs(np.trace(matrix) - 1) > TRACE_TOL:
                raise NonPhysicalStateError("trace differs from 1")
            lam = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
            if lam[0] < -POSITIVITY_TOL:
                raise NonPhysicalStateError(f"negative eigenvalue {lam[0]:.3e}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex).ravel()
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(1 << n) / (1 << n))

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))

    def partial_trace(self, keep: MaskLike) -> "DensityMatrix":
        """Reduced state on the qubits in ``keep``."""
        keep = as_mask(keep)
        n = self.n
        t = self.matrix.reshape((2,) * (2 * n))
        traced = [q for q in range(n) if not keep >> q & 1]
        # highest axes first so remaining axis numbers stay valid
        m = n
        for q in sorted(traced, reverse=True):
            t = np.trace(t, axis1=q, axis2=q + m)
            m -= 1
        d = 1 << m
        return DensityMatrix(t.reshape(d, d))


@dataclass(frozen=True)
class CorrelationTensor:
    """Real Pauli correlation tensor of shape ``(4,) * n``."""

    entries: np.ndarray
    n: int

    def __init__(self, entries, check: bool = True):
        entries = np.array(entries, dtype=float)
        n = entries.ndim
        _check_n(n)
        if entries.shape != (4,) * n:
            raise ValueError(f"tensor must have shape (4,)*n, got {entries.shape}")
        if check and abs(entries[(0,) * n] - 1) > TRACE_TOL:
            raise NonPhysicalStateError("identity entry must equal 1")
        entries[(0,) * n] = 1.0
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "n", n)

    def __getitem__(self, index) -> float:
        """Entry lookup accepting ints or Pauli letters, e.g. ``T['zz00']``."""
        if isinstance(index, str):
            index = tuple(PAULI_INDEX[c] for c in index.lower())
        return float(self.entries[index])


def tensors_from_matrices(rhos: np.ndarray) -> np.ndarray:
    """Batched correlation tensors: ``(B, d, d)`` -> ``(B, 4, ..., 4)``."""
    rhos = np.asarray(rhos)
    b, d, _ = rhos.shape
    n = d.bit_length() - 1
    # interleave (row_q, col_q) pairs into a single axis of length 4 per qubit
    t = rhos.reshape((b,) + (2,) * (2 * n))
    order = [0] + [ax for q in range(n) for ax in (1 + q, 1 + n + q)]
    t = t.transpose(order).reshape((b,) + (4,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(t, _TO_TENSOR, axes=([1 + q], [1])), -1, 1 + q)
    return t.real.copy()


def matrices_from_tensors(tensors: np.ndarray) -> np.ndarray:
    """Inverse of :func:`tensors_from_matrices`."""
    tensors = np.asarray(tensors, dtype=complex)
    b = tensors.shape[0]
    n = tensors.ndim - 1
    t = tensors
    for q in range(n):
        t = np.moveaxis(np.tensordot(t, _FROM_TENSOR, axes=([1 + q], [1])), -1, 1 + q)
    t = t.reshape((b,) + (2,) * (2 * n))
    order = [0] + [1 + 2 * q for q in range(n)] + [2 + 2 * q for q in range(n)]
    d = 1 << n
    return t.transpose(order).reshape(b, d, d)


def correlation_tensor(rho: DensityMatrix) -> CorrelationTensor:
    return CorrelationTensor(tensors_from_matrices(rho.matrix[None])[0])


def state_from_tensor(T: CorrelationTensor) -> DensityMatrix:
    """Density matrix of a correlation tensor.

    Raises :class:`NonPhysicalStateError` when the reconstruction has an
    eigenvalue below ``-1e-9``.
    """
    m = matrices_from_tensors(T.entries[None])[0]
    return DensityMatrix(m)


def marginal_tensor(T: CorrelationTensor, subset: MaskLike) -> CorrelationTensor:
    """Correlation tensor of the reduced state on ``subset``."""
    mask = as_mask(subset)
    if mask == 0:
        raise ValueError("subset must be nonempty")
    if mask >> T.n:
        raise ValueError("subset contains qubits beyond the state")
    index = tuple(slice(None) if mask >> q & 1 else 0 for q in range(T.n))
    return CorrelationTensor(T.entries[index])


def purity(T: CorrelationTensor) -> float:
    """tr(rho^2) = 2^-n sum_mu T_mu^2."""
    return float(np.sum(T.entries**2) / 2**T.n)


def subset_square_sums(tensors: np.ndarray, masks: Sequence[int]) -> np.ndarray:
    """Sum of squared entries supported exactly on each mask.

    ``tensors`` has shape ``(B, 4, ..., 4)``; the result has shape
    ``(B, len(masks))``.  An entry is supported on A when its index is
    nonzero on every qubit of A and zero elsewhere.
    """
    sq = np.asarray(tensors) ** 2
    n = sq.ndim - 1
    out = np.empty((sq.shape[0], len(masks)))
    for k, mask in enumerate(masks):
        index = (slice(None),) + tuple(
            slice(1, None) if mask >> q & 1 else 0 for q in range(n)
        )
        block = sq[index]
        out[:, k] = block.reshape(block.shape[0], -1).sum(axis=1)
    return out


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def apply_local_unitaries(rho: DensityMatrix, unitaries: Sequence[np.ndarray]) -> DensityMatrix:
    """Conjugate ``rho`` by ``U_1 x ... x U_n``."""
    if len(unitaries) != rho.n:
        raise ValueError(f"need {rho.n} unitaries, got {len(unitaries)}")
    for u in unitaries:
        if np.shape(u) != (2, 2):
            raise ValueError("each local unitary must be 2x2")
    u = _kron_all([np.asarray(x, dtype=complex) for x in unitaries])
    m = u @ rho.matrix @ u.conj().T
    return DensityMatrix((m + m.conj().T) / 2)


def haar_local_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) element from a uniform point on the 3-sphere."""
    q = rng.standard_normal(4)
    a, b, c, d = q / np.linalg.norm(q)
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def is_special_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(
        np.max(np.abs(u.conj().T @ u - I2)) < tol and abs(np.linalg.det(u) - 1) < tol
    )


def bloch_rotation(u: np.ndarray) -> np.ndarray:
    """SO(3) matrix R with ``U sigma_k U^dag = sum_l R[l, k] sigma_l``."""
    u = np.asarray(u, dtype=complex)
    conj = np.einsum("ab,kbc,dc->kad", u, PAULIS[1:], u.conj())
    return np.real(np.einsum("lba,kab->lk", PAULIS[1:], conj)) / 2


# --- reference states ---------------------------------------------------

REFERENCE_KINDS = ("trisep", "bisep", "ghz", "cluster")


def _ket(*amps: tuple[str, complex]) -> np.ndarray:
    n = len(amps[0][0])
    v = np.zeros(1 << n, dtype=complex)
    for bits, a in amps:
        v[int(bits, 2)] += a
    return v / np.linalg.norm(v)


def make_reference_state(kind: str, phi: float | None = None) -> DensityMatrix:
    """One of the four 4-qubit reference states.

    ``trisep``: (|00>+|11>) x |0> x |0>
    ``bisep``:  (|00>+|11>) x (sin(phi)|00> + cos(phi)|11>), requires ``phi``
    ``ghz``:    |0000> + |1111>
    ``cluster``: |0000> + |0011> - |1100> + |1111>
    """
    if kind == "trisep":
        v = _ket(("0000", 1), ("1100", 1))
    elif kind == "bisep":
        if phi is None:
            raise ValueError("bisep state requires phi")
        s, c = np.sin(phi), np.cos(phi)
        v = _ket(("0000", s), ("0011", c), ("1100", s), ("1111", c))
    elif kind == "ghz":
        v = _ket(("0000", 1), ("1111", 1))
    elif kind == "cluster":
        v = _ket(("0000", 1), ("0011", 1), ("1100", -1), ("1111", 1))
    else:
        raise ValueError(f"unknown reference state {kind!r}; expected one of {REFERENCE_KINDS}")
    return DensityMatrix.from_ket(v)


def bell_state(kind: str = "phi+") -> DensityMatrix:
    kets = {
        "phi+": _ket(("00", 1), ("11", 1)),
        "phi-": _ket(("00", 1), ("11", -1)),
        "psi+": _ket(("01", 1), ("10", 1)),
        "psi-": _ket(("01", 1), ("10", -1)),
    }
    return DensityMatrix.from_ket(kets[kind])


def product_state(*kets) -> DensityMatrix:
    """Pure product state from single-qubit kets."""
    return DensityMatrix.from_ket(_kron_all([np.asarray(k, dtype=complex) for k in kets]))


def tensor_product(*states: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(_kron_all([s.matrix for s in states]))


def permute_qubits(matrix: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder qubits: qubit ``k`` of the input becomes qubit ``order[k]``.

    ``order`` is a permutation of ``range(n)`` (0-based).
    """
    matrix = np.asarray(matrix)
    d = matrix.shape[-1]
    n = d.bit_length() - 1
    inv = np.argsort(order)
    axes = list(inv) + [n + i for i in inv]
    return matrix.reshape((2,) * (2 * n)).transpose(axes).reshape(d, d)
