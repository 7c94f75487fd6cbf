"""Dense linear algebra and N-qubit states.

Basis convention: node 1 is the most significant bit of a computational-basis
index, so ``kron(A1, A2, ..., AN)`` places ``A1`` on node 1.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InvalidArgumentError

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise InvalidArgumentError(f"dimension {dim} is not a power of two")
    return n


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of arrays, first argument most significant."""
    if not mats:
        raise InvalidArgumentError("kron needs at least one operand")
    return reduce(np.kron, [np.asarray(m) for m in mats])


def _monomial(m: np.ndarray):
    # 2x2 with one nonzero per row: returns (flip bit, values for row 0 and row 1)
    if m[0, 1] == 0 and m[1, 0] == 0:
        return 0, np.array([m[0, 0], m[1, 1]])
    if m[0, 0] == 0 and m[1, 1] == 0:
        return 1, np.array([m[0, 1], m[1, 0]])
    return None


def sparse_kron(factors) -> sp.csr_matrix:
    """Kronecker product of 2x2 factors as a CSR matrix.

    Products of diagonal/antidiagonal factors (Paulis, xy-plane observables)
    stay one-nonzero-per-row and are assembled directly from index arithmetic.
    """
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if not factors:
        return sp.csr_matrix(np.ones((1, 1), dtype=complex))
    mono = [_monomial(f) for f in factors]
    if all(m is not None for m in mono):
        n = len(factors)
        dim = 1 << n
        mask = 0
        for k, (flip, _) in enumerate(mono):
            if flip:
                mask |= 1 << (n - 1 - k)
        vals = reduce(np.kron, [v for _, v in mono])
        rows = np.arange(dim)
        return sp.csr_matrix((vals, (rows, rows ^ mask)), shape=(dim, dim))
    out = sp.csr_matrix(factors[0])
    for f in factors[1:]:
        out = sp.kron(out, sp.csr_matrix(f), format="csr")
    return out


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=tol)


def hermitian_eigs(m: np.ndarray, tol: float = HERMITIAN_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise InvalidArgumentError("matrix is not Hermitian")
    m = (m + m.conj().T) / 2
    return np.linalg.eigh(m)


def max_eigenvalues(mats: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of each Hermitian matrix in a stack of shape (..., k, k)."""
    mats = np.asarray(mats)
    k = mats.shape[-1]
    if k == 1:
        return mats[..., 0, 0].real.copy()
    if k == 2:
        a = mats[..., 0, 0].real
        d = mats[..., 1, 1].real
        b = mats[..., 1, 0]
        return (a + d) / 2 + np.sqrt(((a - d) / 2) ** 2 + (b.real**2 + b.imag**2))
    return np.linalg.eigvalsh(mats)[..., -1]


def block_partition(pattern) -> list[np.ndarray]:
    """Index sets of the irreducible diagonal blocks of a symmetric sparsity pattern.

    A Hermitian operator whose nonzeros connect only indices inside each set is
    block diagonal after permutation, so its spectrum is the union of the block
    spectra.
    """
    pattern = sp.csr_matrix(pattern)
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    return [order[bounds[i]:bounds[i + 1]] for i in range(ncomp)]


def validate_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvalidArgumentError("state vector must be one-dimensional")
    num_qubits(psi.shape[0])
    if abs(np.vdot(psi, psi).real - 1) > tol:
        raise InvalidArgumentError("state vector is not normalized")
    return psi


def validate_density(rho, tol: float = NORM_TOL, check_psd: bool = False) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgumentError("density matrix must be square")
    num_qubits(rho.shape[0])
    if not is_hermitian(rho, HERMITIAN_TOL):
        raise InvalidArgumentError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidArgumentError("density matrix trace is not 1")
    if check_psd and np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidArgumentError("density matrix has a negative eigenvalue")
    return rho


def as_density(source) -> np.ndarray:
    """Density matrix from either a state vector or a density matrix."""
    arr = np.asarray(source, dtype=complex)
    if arr.ndim == 1:
        psi = validate_state(arr)
        return np.outer(psi, psi.conj())
    return validate_density(arr)


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"node count must be an integer >= 2, got {n}")
    return int(n)


def ghz_state(n: int) -> np.ndarray:
    n = _check_n(n)
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def star_state(n: int) -> np.ndarray:
    """Star graph state with node 1 as the center."""
    n = _check_n(n)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
    leaves_plus = kron(*[plus] * (n - 1))
    leaves_minus = kron(*[minus] * (n - 1))
    return (np.kron([1, 0], leaves_plus) + np.kron([0, 1], leaves_minus)) / np.sqrt(2)


def projector(psi) -> np.ndarray:
    psi = validate_state(psi)
    return np.outer(psi, psi.conj())


def white_noise_mix(psi, p: float) -> np.ndarray:
    """``p * I / 2^n + (1 - p) |psi><psi|``."""
    if not 0 <= p <= 1:
        raise InvalidArgumentError(f"noise fraction must lie in [0, 1], got {p}")
    proj = projector(psi)
    dim = proj.shape[0]
    rho = (1 - p) * proj
    rho[np.diag_indices(dim)] += p / dim
    return rho


def fidelity(rho, psi) -> float:
    """``tr(rho |psi><psi|)``; ``rho`` may also be given as a pure state vector."""
    psi = validate_state(psi)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[0] != psi.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: state has {psi.shape[0]}, operator has {rho.shape[0]}"
        )
    if rho.ndim == 1:
        return float(abs(np.vdot(psi, rho)) ** 2)
    return float(np.vdot(psi, rho @ psi).real)


def random_density(n: int, rank: int | None = None, rng=None) -> np.ndarray:
    """Random n-qubit density matrix (Ginibre construction); used by tests and demos."""
    rng = np.random.default_rng(rng)
    dim = 1 << n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def top_eigenpair(op) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of a (possibly sparse) Hermitian operator.

    Works block by block, so large operators that split into small irreducible
    blocks stay cheap.
    """
    op = sp.csr_matrix(op)
    dim = op.shape[0]
    pattern = abs(op) + sp.identity(dim, format="csr")
    best_val, best_vec, best_idx = -np.inf, None, None
    for idx in block_partition(pattern):
        block = op[idx][:, idx].toarray()
        w, v = hermitian_eigs(block)
        if w[-1] > best_val + 1e-12:
            best_val, best_vec, best_idx = w[-1], v[:, -1], idx
    vec = np.zeros(dim, dtype=complex)
    vec[best_idx] = best_vec
    # fix the global phase: largest-magnitude amplitude real and positive
    j = int(np.argmax(np.abs(vec)))
    vec *= np.exp(-1j * np.angle(vec[j]))
    return float(best_val), vec
