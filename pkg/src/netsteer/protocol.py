"""Measurement settings and projector decompositions for GHZ / star targets.

A setting vector ``m = (m_1, ..., m_N)`` assigns a setting index to each node,
node 1 first. Index 0 is the identity (no measurement) and ``N + 1`` is the
Z-type setting. For the xy-plane protocols, indices ``1..N`` are the observables
``cos(m pi/N) X + sin(m pi/N) Y`` (rotated by a Hadamard on the star leaves). For
the Pauli protocol, 1 is X and 2 is Y.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import qcore
from .errors import IncompleteDataError, InvalidArgumentError

PROTOCOLS = ("ghz-xy", "star-xy", "pauli")
XY_PROTOCOLS = ("ghz-xy", "star-xy")


@dataclass(frozen=True)
class Observable:
    """Single-qubit observable ``x X + y Y + z Z``, or the identity when ``bloch`` is None."""

    bloch: tuple[float, float, float] | None

    def __post_init__(self):
        if self.bloch is not None:
            norm = math.sqrt(sum(c * c for c in self.bloch))
            if abs(norm - 1) > 1e-12:
                raise InvalidArgumentError(f"Bloch vector must have unit length, got {norm}")

    @property
    def is_identity(self) -> bool:
        return self.bloch is None

    @property
    def matrix(self) -> np.ndarray:
        if self.bloch is None:
            return qcore.I2.copy()
        x, y, z = self.bloch
        # exact zeros keep products one-nonzero-per-row for sparse assembly
        return x * qcore.X + y * qcore.Y + z * qcore.Z


IDENTITY = Observable(None)


def _clean(v: float) -> float:
    return 0.0 if abs(v) < 1e-15 else float(v)


def _check_index(n: int, m: int, allowed=None):
    if n < 2:
        raise InvalidArgumentError(f"node count must be >= 2, got {n}")
    ok = 0 <= m <= n + 1 if allowed is None else m in allowed
    if not ok:
        raise InvalidArgumentError(f"setting index {m} out of range for n={n}")


def _check_node(n: int, k: int):
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"node {k} out of range 1..{n}")


def ghz_observable(n: int, m: int, k: int = 1) -> Observable:
    _check_index(n, m)
    _check_node(n, k)
    if m == 0:
        return IDENTITY
    if m == n + 1:
        return Observable((0.0, 0.0, 1.0))
    theta = m * math.pi / n
    return Observable((_clean(math.cos(theta)), _clean(math.sin(theta)), 0.0))


def star_observable(n: int, m: int, k: int) -> Observable:
    _check_index(n, m)
    _check_node(n, k)
    if k == 1:
        return ghz_observable(n, m, k)
    if m == 0:
        return IDENTITY
    if m == n + 1:
        return Observable((1.0, 0.0, 0.0))
    theta = m * math.pi / n
    return Observable((0.0, _clean(-math.sin(theta)), _clean(math.cos(theta))))


def pauli_observable(n: int, m: int, k: int = 1) -> Observable:
    _check_index(n, m, allowed=(0, 1, 2, n + 1))
    _check_node(n, k)
    return {0: IDENTITY, 1: Observable((1.0, 0.0, 0.0)), 2: Observable((0.0, 1.0, 0.0)),
            n + 1: Observable((0.0, 0.0, 1.0))}[m]


_OBSERVABLES = {"ghz-xy": ghz_observable, "star-xy": star_observable, "pauli": pauli_observable}


def context_of(setting, n: int) -> tuple[int, ...]:
    """Measurement context a setting is read from: identity entries become the Z-type setting."""
    return tuple(n + 1 if m == 0 else int(m) for m in setting)


@dataclass(frozen=True)
class Decomposition:
    """``|psi><psi| = sum_t coeff_t * kron_k R[k, m_tk]`` for a fixed protocol."""

    n: int
    protocol: str
    terms: tuple[tuple[float, tuple[int, ...]], ...]

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InvalidArgumentError(f"unknown protocol {self.protocol!r}")
        for coeff, setting in self.terms:
            if len(setting) != self.n:
                raise InvalidArgumentError(f"setting {setting} does not have {self.n} entries")
            for k, m in enumerate(setting, start=1):
                _OBSERVABLES[self.protocol](self.n, m, k)
            if not np.isreal(coeff):
                raise InvalidArgumentError("coefficients must be real")

    def observable(self, k: int, m: int) -> Observable:
        """Observable for node ``k`` (1-based) under setting index ``m``."""
        return _OBSERVABLES[self.protocol](self.n, m, k)

    def local_matrices(self, setting, nodes=None) -> list[np.ndarray]:
        nodes = range(1, self.n + 1) if nodes is None else nodes
        return [self.observable(k, setting[k - 1]).matrix for k in nodes]

    def operator(self, setting, nodes=None) -> sp.csr_matrix:
        """Sparse tensor product of the setting's observables restricted to ``nodes``."""
        return qcore.sparse_kron(self.local_matrices(setting, nodes))

    @property
    def settings(self) -> list[tuple[int, ...]]:
        return [s for _, s in self.terms]

    @cached_property
    def contexts(self) -> list[tuple[int, ...]]:
        seen: dict[tuple[int, ...], None] = {}
        for _, s in self.terms:
            seen.setdefault(context_of(s, self.n), None)
        return list(seen)

    def matrix(self) -> np.ndarray:
        """Dense reassembly of the decomposed projector."""
        dim = 1 << self.n
        acc = sp.csr_matrix((dim, dim), dtype=complex)
        for coeff, setting in self.terms:
            acc = acc + coeff * self.operator(setting)
        return acc.toarray()

    def target_state(self) -> np.ndarray:
        return qcore.star_state(self.n) if self.protocol == "star-xy" else qcore.ghz_state(self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "protocol": self.protocol,
            "terms": [{"coeff": float(c), "setting": list(s)} for c, s in self.terms],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Decomposition":
        try:
            terms = tuple((float(t["coeff"]), tuple(int(m) for m in t["setting"])) for t in doc["terms"])
            return cls(int(doc["n"]), str(doc["protocol"]), terms)
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed decomposition document: {exc}") from exc


def _diag_expectation(psi: np.ndarray, op: sp.csr_matrix) -> float:
    val = np.vdot(psi, op @ psi)
    return float(val.real)


def _round_to(value: float, allowed, tol: float = 1e-9) -> int:
    for a in allowed:
        if abs(value - a) < tol:
            return a
    raise ArithmeticError(f"expectation {value} not within {tol} of {allowed}")


def _xy_terms(n: int) -> tuple[tuple[float, tuple[int, ...]], ...]:
    psi = qcore.ghz_state(n)
    terms = []
    for setting in itertools.product((0, n + 1), repeat=n):
        op = qcore.sparse_kron([ghz_observable(n, m).matrix for m in setting])
        c = _round_to(_diag_expectation(psi, op), (0, 1))
        if c:
            terms.append((2.0**-n, setting))
    for j in range(1, n + 1):
        terms.append(((-1) ** j / (2 * n), (j,) * n))
    return tuple(terms)


def ghz_decomposition(n: int) -> Decomposition:
    """N+1-setting decomposition of the GHZ projector.

    The Z-part keeps the I/Z strings whose GHZ expectation is 1 (even Z weight),
    each weighted 2^-n; the xy part has one all-equal setting per j = 1..n with
    weight (-1)^j / 2n.
    """
    n = qcore._check_n(n)
    return Decomposition(n, "ghz-xy", _xy_terms(n))


def star_decomposition(n: int) -> Decomposition:
    """Same coefficients as :func:`ghz_decomposition` with star observables on the leaves."""
    n = qcore._check_n(n)
    return Decomposition(n, "star-xy", _xy_terms(n))


def pauli_decomposition(n: int) -> Decomposition:
    """Stabilizer-group expansion of the GHZ projector in Pauli strings.

    ``|G><G| = 2^-n sum_P <G|P|G> P``; only I/Z strings of even weight and X/Y
    strings with an even number of Y survive, grouped into 2^(n-1) X/Y contexts
    and one Z context.
    """
    n = qcore._check_n(n)
    psi = qcore.ghz_state(n)
    terms = []
    for alphabet in ((0, n + 1), (1, 2)):
        for setting in itertools.product(alphabet, repeat=n):
            op = qcore.sparse_kron([pauli_observable(n, m).matrix for m in setting])
            c = _round_to(_diag_expectation(psi, op), (-1, 0, 1))
            if c:
                terms.append((c * 2.0**-n, setting))
    return Decomposition(n, "pauli", tuple(terms))


_BUILDERS = {"ghz-xy": ghz_decomposition, "star-xy": star_decomposition, "pauli": pauli_decomposition}


@lru_cache(maxsize=64)
def _cached(n: int, protocol: str) -> Decomposition:
    return _BUILDERS[protocol](n)


def decomposition(n: int, protocol: str) -> Decomposition:
    """Cached decomposition for ``protocol``; the result is immutable and shared."""
    n = qcore._check_n(n)
    if protocol not in _BUILDERS:
        raise InvalidArgumentError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    return _cached(n, protocol)


def setting_count(d: Decomposition) -> int:
    """Number of distinct global measurement contexts the decomposition needs."""
    return len(d.contexts)


def _unpack(entry) -> tuple[float, float]:
    if isinstance(entry, (tuple, list)):
        value, stderr = entry
        return float(value), float(stderr)
    return float(entry), 0.0


def fidelity_from_expectations(d: Decomposition, expectations: Mapping) -> tuple[float, float]:
    """Weighted sum of measured correlators, with stderr combined in quadrature.

    ``expectations`` maps setting tuples to a value or a ``(value, stderr)`` pair.
    The all-identity term needs no entry.
    """
    identity = (0,) * d.n
    missing = [s for s in d.settings if s != identity and s not in expectations]
    if missing:
        raise IncompleteDataError(missing)
    value = 0.0
    var = 0.0
    for coeff, setting in d.terms:
        if setting == identity and setting not in expectations:
            value += coeff
            continue
        v, e = _unpack(expectations[setting])
        value += coeff * v
        var += (coeff * e) ** 2
    return value, math.sqrt(var)


def exact_expectations(rho, d: Decomposition) -> dict[tuple[int, ...], tuple[float, float]]:
    """``tr(rho kron_k R)`` for every setting in ``d`` (stderr 0)."""
    rho = qcore.as_density(rho)
    if rho.shape[0] != 1 << d.n:
        raise InvalidArgumentError(f"state dimension {rho.shape[0]} does not match n={d.n}")
    out = {}
    rho_t = rho.T
    for setting in d.settings:
        op = d.operator(setting)
        val = op.multiply(rho_t).sum()
        out[setting] = (float(np.real(val)), 0.0)
    return out
