import itertools
from functools import reduce

import numpy as np
import pytest

from randcorr.quantum import PAULIS, correlation_tensor, make_reference_state

REFERENCE = {
    "trisep": ("trisep", None),
    "bisep": ("bisep", 0.2),
    "ghz": ("ghz", None),
    "cluster": ("cluster", None),
}


def brute_tensor(matrix):
    """Correlation tensor by explicit Kronecker products and traces."""
    matrix = np.asarray(matrix)
    n = matrix.shape[0].bit_length() - 1
    out = np.zeros((4,) * n)
    for mu in itertools.product(range(4), repeat=n):
        op = reduce(np.kron, [PAULIS[m] for m in mu])
        out[mu] = np.trace(matrix @ op).real
    return out


def brute_correlation(matrix, directions, qubits):
    """tr(rho (a_1.sigma or 1) x ...) with identities off ``qubits`` (0-based)."""
    ops = []
    for q, a in enumerate(directions):
        ops.append(np.einsum("k,kab->ab", a, PAULIS[1:]) if q in qubits else np.eye(2))
    return float(np.trace(np.asarray(matrix) @ reduce(np.kron, ops)).real)


OCTAHEDRON = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)


def design_moment(matrix, qubits, n):
    """Haar second moment by averaging over a spherical 2-design per qubit.

    The six octahedron vertices integrate every polynomial of degree <= 3 on
    the sphere exactly, and E^2 is quadratic in each direction.
    """
    vals = []
    for combo in itertools.product(range(6), repeat=len(qubits)):
        dirs = np.tile([0.0, 0.0, 1.0], (n, 1))
        for q, c in zip(qubits, combo):
            dirs[q] = OCTAHEDRON[c]
        vals.append(brute_correlation(matrix, dirs, qubits) ** 2)
    return float(np.mean(vals))


def random_density(n, rng, rank=None):
    d = 1 << n
    k = rank or int(rng.integers(1, d + 1))
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return m / np.trace(m).real


@pytest.fixture(params=list(REFERENCE))
def reference(request):
    kind, phi = REFERENCE[request.param]
    rho = make_reference_state(kind, phi)
    return request.param, rho, correlation_tensor(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
