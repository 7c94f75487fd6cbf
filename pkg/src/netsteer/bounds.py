"""Classical fidelity bounds: the best fidelity a hybrid network can fake.

``F_nc(N)`` is the maximum, over classical node sets of size ``n_c`` and their
outcome tables, of the largest eigenvalue of the hybrid operator. Three routes
compute it:

``brute``
    every subset and every table, ``C(N, n_c) * 2^((N+1) n_c)`` operators.
``reduced``
    one subset (the GHZ decomposition is permutation symmetric) and only the
    data the operator actually depends on: each classical node's Z outcome and,
    per xy setting ``j``, the product of the classical outcomes.
``closed``
    exact formula from the operator's structure (see :func:`_closed_value`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import qcore
from .errors import InvalidArgumentError, ResourceLimitError
from .hybrid import ClassicalAssignment, HybridNetwork, hybrid_operator
from .protocol import XY_PROTOCOLS, Decomposition, decomposition

METHODS = ("brute", "reduced", "closed")
TIE_TOL = 1e-9
BRUTE_LIMIT = 1 << 22  # operator evaluations
REDUCED_LIMIT = 1 << 31  # batched eigen work, roughly sum of k^3 over blocks
PAULI_BOUND = (1 + math.sqrt(3)) / 4


@dataclass(frozen=True, eq=False)
class Witness:
    """A hybrid strategy achieving a bound: classical tables plus the top eigenvector."""

    classical_nodes: tuple[int, ...]
    assignments: tuple[tuple[int, ...], ...]
    eigenvector: np.ndarray = field(repr=False)

    def hybrid(self, n: int) -> HybridNetwork:
        classical = tuple(ClassicalAssignment(k, v) for k, v in zip(self.classical_nodes, self.assignments))
        return HybridNetwork(n, classical, qcore.projector(self.eigenvector))

    def to_dict(self) -> dict:
        return {
            "classical_nodes": list(self.classical_nodes),
            "assignments": [list(v) for v in self.assignments],
            "eigenvector": [[float(z.real), float(z.imag)] for z in self.eigenvector],
        }


@dataclass(frozen=True, eq=False)
class BoundResult:
    n: int
    n_c: int | None
    bound: float
    method: str
    protocol: str = "ghz-xy"
    witness: Witness | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_c": self.n_c,
            "bound": float(self.bound),
            "method": self.method,
            "protocol": self.protocol,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def _check_sizes(n: int, n_c: int):
    qcore._check_n(n)
    if not 1 <= n_c <= n - 1:
        raise InvalidArgumentError(f"classical node count must lie in 1..{n - 1}, got {n_c}")


def _sign_table(width: int, rows: np.ndarray | None = None) -> np.ndarray:
    """Rows of +/-1 in lexicographic order, +1 before -1, first column most significant."""
    idx = np.arange(1 << width) if rows is None else rows
    shifts = np.arange(width - 1, -1, -1)
    return 1 - 2 * ((idx[:, None] >> shifts) & 1)


def _witness(d: Decomposition, nodes, tables) -> Witness:
    op = hybrid_operator(d.n, d, nodes, tables, sparse=True)
    _, vec = qcore.top_eigenpair(op)
    return Witness(tuple(nodes), tuple(tuple(int(x) for x in v) for v in tables), vec)


# -- brute force ------------------------------------------------------------


def brute_force_size(n: int, n_c: int) -> int:
    return math.comb(n, n_c) * (1 << ((n + 1) * n_c))


def _brute(d: Decomposition, n_c: int, limit: int):
    n = d.n
    total = brute_force_size(n, n_c)
    if total > limit:
        raise ResourceLimitError(
            f"brute force needs {total} operator evaluations for n={n}, n_c={n_c} (limit {limit})"
        )
    coeffs = np.array([c for c, _ in d.terms])
    settings = np.array(d.settings)
    width = (n + 1) * n_c
    subsets = list(itertools.combinations(range(1, n + 1), n_c))
    values = []
    for vc in subsets:
        quantum = [k for k in range(1, n + 1) if k not in vc]
        qstack = np.stack([d.operator(s, nodes=quantum).toarray() for s in d.settings])
        cls = settings[:, [k - 1 for k in vc]]  # (terms, n_c)
        chunk = max(1, (1 << 21) // qstack[0].size)
        for start in range(0, 1 << width, chunk):
            rows = np.arange(start, min(start + chunk, 1 << width))
            table = _sign_table(width, rows).reshape(len(rows), n_c, n + 1)
            factor = np.ones((len(rows), len(coeffs)))
            for i in range(n_c):
                m = cls[:, i]
                picked = table[:, i, np.maximum(m - 1, 0)]
                factor *= np.where(m > 0, picked, 1)
            ops = np.tensordot(factor * coeffs, qstack, axes=(1, 0))
            values.append(qcore.max_eigenvalues(ops))
    values = np.concatenate(values)
    best = float(values.max())
    first = int(np.argmax(values >= best - TIE_TOL))
    per_subset = 1 << width
    vc = subsets[first // per_subset]
    table = _sign_table(width, np.array([first % per_subset])).reshape(n_c, n + 1)
    return best, vc, [tuple(r) for r in table]


# -- reduced search ---------------------------------------------------------


def _reduced(d: Decomposition, n_c: int, limit: int):
    n = d.n
    vc = tuple(range(1, n_c + 1))
    quantum = list(range(n_c + 1, n + 1))
    dim = 1 << len(quantum)

    zparts: dict[int, sp.csr_matrix] = {}
    xyparts: dict[int, sp.csr_matrix] = {}
    for coeff, setting in d.terms:
        cls = setting[:n_c]
        op = coeff * d.operator(setting, nodes=quantum)
        if all(m in (0, n + 1) for m in cls):
            mask = sum(1 << (n_c - 1 - i) for i, m in enumerate(cls) if m)
            zparts[mask] = zparts.get(mask, 0) + op
        elif len(set(cls)) == 1 and 1 <= cls[0] <= n:
            xyparts[cls[0]] = xyparts.get(cls[0], 0) + op
        else:
            raise InvalidArgumentError(
                "reduced search needs a decomposition whose xy terms share one setting on every node"
            )

    pattern = sp.identity(dim, format="csr")
    for op in [*zparts.values(), *xyparts.values()]:
        pattern = pattern + abs(sp.csr_matrix(op))
    pattern = pattern.tocoo()
    rows, cols = pattern.row, pattern.col

    def on_pattern(op) -> np.ndarray:
        return np.asarray(sp.csr_matrix(op)[rows, cols]).ravel()

    masks = sorted(zparts)
    zvals = np.stack([on_pattern(zparts[m]) for m in masks])  # (masks, nnz)
    xvals = np.stack([on_pattern(xyparts[j]) if j in xyparts else np.zeros(len(rows), complex)
                      for j in range(1, n + 1)])  # (n, nnz)

    # Z-part operator for every choice of classical Z outcomes; identical ones are evaluated once
    svec = _sign_table(n_c)
    # character prod_{i in mask} s_i is the parity of the -1 bits of s inside the mask
    overlap = np.arange(1 << n_c)[:, None] & np.array(masks)[None, :]
    parity = np.zeros_like(overlap)
    for b in range(n_c):
        parity ^= (overlap >> b) & 1
    chars = 1 - 2 * parity
    dvals = chars @ zvals
    keys = np.round(dvals, 12)
    _, first_s, s_to_u = np.unique(keys.view(np.float64).reshape(len(svec), -1), axis=0,
                                   return_index=True, return_inverse=True)
    s_to_u = np.asarray(s_to_u).ravel()
    uvals = dvals[first_s]

    blocks = qcore.block_partition(sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(dim, dim)))
    block_of = np.empty(dim, dtype=int)
    local = np.empty(dim, dtype=int)
    for b, idx in enumerate(blocks):
        block_of[idx] = b
        local[idx] = np.arange(len(idx))
    sizes = np.array([len(b) for b in blocks])

    tvec = _sign_table(n)
    work = len(uvals) * len(tvec) * int(np.sum(sizes.astype(float) ** 3))
    if work > limit:
        raise ResourceLimitError(f"reduced search for n={n}, n_c={n_c} needs ~{work:.3g} work units")

    values = np.full((len(uvals), len(tvec)), -np.inf)
    for k in np.unique(sizes):
        members = np.flatnonzero(sizes == k)
        slot = np.full(len(blocks), -1)
        slot[members] = np.arange(len(members))
        sel = slot[block_of[rows]] >= 0
        gb, li, lj = slot[block_of[rows[sel]]], local[rows[sel]], local[cols[sel]]

        def scatter(vals):
            out = np.zeros((len(members), k, k), dtype=complex)
            out[gb, li, lj] = vals[sel]
            return out

        a = np.stack([scatter(x) for x in xvals])  # (n, blocks, k, k)
        chunk = max(1, (1 << 22) // (len(members) * k * k))
        for u, dv in enumerate(uvals):
            dblk = scatter(dv)
            for start in range(0, len(tvec), chunk):
                t = tvec[start:start + chunk]
                ops = dblk[None] + np.tensordot(t, a, axes=(1, 0))
                vals = qcore.max_eigenvalues(ops).max(axis=1)
                values[u, start:start + chunk] = np.maximum(values[u, start:start + chunk], vals)

    best = float(values.max())
    for s_idx in range(len(svec)):
        hits = np.flatnonzero(values[s_to_u[s_idx]] >= best - TIE_TOL)
        if hits.size:
            s, t = svec[s_idx], tvec[hits[0]]
            break
    # node vc[0] carries the xy products; the others answer +1 on every xy setting
    tables = [tuple(int(x) for x in t) + (int(s[0]),)]
    tables += [(1,) * n + (int(s[i]),) for i in range(1, n_c)]
    return best, vc, tables


# -- closed forms -----------------------------------------------------------


def _closed_value(n: int, n_c: int) -> float:
    # The operator only couples each basis string of the quantum nodes with its
    # complement. The top eigenvalue sits in the (0..0, 1..1) block, which has
    # diagonal (1/2, 0) and off-diagonal (1/2N) sum_j +/- exp(i j n_Q pi/N) with
    # free signs. Those phases fall on M = N/g directions mod pi, g = gcd(n_Q, N),
    # each g times, so the best signed sum is g csc(pi/2M).
    g = math.gcd(n - n_c, n)
    m = n // g
    off = 1 / (2 * m * math.sin(math.pi / (2 * m)))
    return 0.25 + math.sqrt(1 / 16 + off * off)


def closed_form_bound(n: int) -> float:
    """Reference classical bound formula: ``(1 + sqrt(1 + 4 csc^2(pi/2N)/N^2))/4`` for odd N, ``(1+sqrt 3)/4`` for even N.

    Exact for even and prime N. For odd composite N the true bound is larger
    (N = 9 reaches 2/3); use :func:`classical_bound` for certification.
    """
    n = qcore._check_n(n)
    if n % 2 == 0:
        return (1 + math.sqrt(3)) / 4
    csc = 1 / math.sin(math.pi / (2 * n))
    return (1 + math.sqrt(1 + 4 * csc * csc / (n * n))) / 4


def two_by_two_bound(n: int) -> float:
    """Top eigenvalue of the single-quantum-node operator, i.e. ``F_{N-1}(N) = F_1(N)``.

    For odd N this equals :func:`closed_form_bound`; for even N it is the
    smaller ``n_c = 1`` value, not the classical bound.
    """
    n = qcore._check_n(n)
    off = sum(np.exp(1j * j * math.pi / n) for j in range(1, n + 1)) / (2 * n)
    mat = np.array([[0.5, np.conj(off)], [off, 0.0]])
    return float(qcore.hermitian_eigs(mat)[0][-1])


# -- public entry points ----------------------------------------------------


def max_classical_fidelity(n: int, n_c: int, method: str = "reduced", protocol: str = "ghz-xy",
                           *, witness: bool = True, limit: int | None = None) -> BoundResult:
    """Best fidelity reachable with exactly ``n_c`` classical nodes.

    Ties are broken by the first (subset, table) in lexicographic order, with
    +1 ordered before -1.
    """
    _check_sizes(n, n_c)
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "closed":
        if protocol not in XY_PROTOCOLS:
            raise InvalidArgumentError("closed form is only available for the xy-plane protocols")
        return BoundResult(n, n_c, _closed_value(n, n_c), "closed", protocol)
    d = decomposition(n, protocol)
    if method == "brute":
        best, vc, tables = _brute(d, n_c, BRUTE_LIMIT if limit is None else limit)
    else:
        best, vc, tables = _reduced(d, n_c, REDUCED_LIMIT if limit is None else limit)
    wit = _witness(d, vc, tables) if witness else None
    return BoundResult(n, n_c, best, method, protocol, wit)


def classical_bound(n: int, method: str = "closed", protocol: str = "ghz-xy",
                    *, witness: bool = True, limit: int | None = None) -> BoundResult:
    """Maximum of :func:`max_classical_fidelity` over ``n_c = 1..n-1``."""
    n = qcore._check_n(n)
    results = [max_classical_fidelity(n, nc, method, protocol, witness=False, limit=limit)
               for nc in range(1, n)]
    best = max(r.bound for r in results)
    top = next(r for r in results if r.bound >= best - TIE_TOL)
    if witness and method != "closed":
        top = max_classical_fidelity(n, top.n_c, method, protocol, witness=True, limit=limit)
    return BoundResult(n, top.n_c, best, method, protocol, top.witness)


def steering_bound(n: int, protocol: str) -> float:
    """Threshold a measured fidelity must exceed to certify genuine n-node steering."""
    if protocol == "pauli":
        return PAULI_BOUND
    if protocol not in XY_PROTOCOLS:
        raise InvalidArgumentError(f"unknown protocol {protocol!r}")
    return classical_bound(n, "closed", protocol).bound


def small_grid(method: str = "reduced") -> list[BoundResult]:
    """Every ``(n, n_c)`` with ``n = 2..6``."""
    return [max_classical_fidelity(n, nc, method, witness=False) for n in range(2, 7) for nc in range(1, n)]


def large_n_rows(method: str = "reduced") -> list[BoundResult]:
    """``n = 7..12`` with one and with ``n - 1`` classical nodes."""
    return [max_classical_fidelity(n, nc, method, witness=False) for n in range(7, 13) for nc in (1, n - 1)]


# -- constructions of extremal hybrids --------------------------------------

_ALPHA = -1 + 1j * math.sqrt(3)
_BETA = (1 + math.sqrt(3)) * np.exp(1j * math.pi / 4) / math.sqrt(2)
_GAMMA = (2 + math.sqrt(2 * (4 + math.sqrt(2)))) / (1 + math.sqrt(2) + 1j)


def _two_level(coef: complex, n_qubits: int) -> np.ndarray:
    # (coef |0..0> + |1..1>) / norm
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0], psi[-1] = coef, 1
    return psi / np.linalg.norm(psi)


EXTREMAL_CASES = {
    # n, classical tables by node, quantum state over the remaining nodes
    "e1_3": (3, {2: (1, 1, 1, 1)}, _two_level(_ALPHA, 2)),
    "e2_4": (4, {1: (1, 1, 1, 1, 1), 2: (1, -1, -1, 1, 1)}, _two_level(_BETA, 2)),
    "e3_4": (4, {2: (1, 1, 1, 1, 1), 3: (1, 1, 1, 1, 1), 4: (-1, 1, 1, -1, 1)}, _two_level(_GAMMA, 1)),
}


def extremal_hybrid(case) -> HybridNetwork:
    """Hybrid network reaching a classical bound.

    ``case`` is one of ``"e1_3"``, ``"e2_4"``, ``"e3_4"`` (explicit constructions
    for N = 3 with one classical node and N = 4 with two and three), or an
    ``(n, n_c)`` pair, which returns the reduced-search witness.
    """
    if isinstance(case, str):
        try:
            n, tables, psi = EXTREMAL_CASES[case]
        except KeyError:
            raise InvalidArgumentError(f"unknown extremal case {case!r}") from None
        classical = tuple(ClassicalAssignment(k, v) for k, v in tables.items())
        return HybridNetwork(n, classical, qcore.projector(psi))
    n, n_c = case
    result = max_classical_fidelity(n, n_c, "reduced")
    return result.witness.hybrid(n)
