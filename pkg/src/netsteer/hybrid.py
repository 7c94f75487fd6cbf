"""Quantum-classical hybrid networks.

A classical node answers every setting from a fixed table of +/-1 outcomes; the
remaining nodes share a quantum state. Node labels are 1-based throughout, and
the quantum state is ordered by increasing node label (lowest label most
significant).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import qcore
from .errors import InvalidArgumentError
from .protocol import Decomposition


@dataclass(frozen=True)
class ClassicalAssignment:
    """Pre-set outcomes of one classical node; ``outcomes[m - 1]`` answers setting ``m``."""

    node: int
    outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(int(v) for v in self.outcomes))
        if any(v not in (1, -1) for v in self.outcomes):
            raise InvalidArgumentError(f"classical outcomes must be +/-1, got {self.outcomes}")

    def value(self, m: int) -> int:
        # the identity is not a measurement: factor 1 whatever the table says
        return 1 if m == 0 else self.outcomes[m - 1]


@dataclass(frozen=True, eq=False)
class HybridNetwork:
    n: int
    classical: tuple[ClassicalAssignment, ...]
    quantum_state: np.ndarray = field(repr=False)

    def __post_init__(self):
        classical = tuple(sorted(self.classical, key=lambda a: a.node))
        object.__setattr__(self, "classical", classical)
        nodes = [a.node for a in classical]
        n_c = len(nodes)
        if not 1 <= n_c <= self.n - 1:
            raise InvalidArgumentError(
                f"a hybrid needs between 1 and n-1 classical nodes, got {n_c} of {self.n}"
            )
        if len(set(nodes)) != n_c or any(not 1 <= k <= self.n for k in nodes):
            raise InvalidArgumentError(f"classical nodes {nodes} must be distinct labels in 1..{self.n}")
        for a in classical:
            if len(a.outcomes) != self.n + 1:
                raise InvalidArgumentError(
                    f"node {a.node} needs {self.n + 1} outcomes, got {len(a.outcomes)}"
                )
        rho = qcore.as_density(self.quantum_state)
        if rho.shape[0] != 1 << (self.n - n_c):
            raise InvalidArgumentError(
                f"quantum state dimension {rho.shape[0]} does not match {self.n - n_c} quantum nodes"
            )
        object.__setattr__(self, "quantum_state", rho)

    @property
    def classical_nodes(self) -> tuple[int, ...]:
        return tuple(a.node for a in self.classical)

    @property
    def quantum_nodes(self) -> tuple[int, ...]:
        vc = set(self.classical_nodes)
        return tuple(k for k in range(1, self.n + 1) if k not in vc)

    @property
    def outcomes(self) -> list[tuple[int, ...]]:
        return [a.outcomes for a in self.classical]

    def classical_factor(self, setting) -> int:
        f = 1
        for a in self.classical:
            f *= a.value(setting[a.node - 1])
        return f

    def to_dict(self) -> dict:
        rho = self.quantum_state
        return {
            "n": self.n,
            "classical": [{"node": a.node, "outcomes": list(a.outcomes)} for a in self.classical],
            "quantum_state": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "HybridNetwork":
        try:
            rho = np.array([[complex(re, im) for re, im in row] for row in doc["quantum_state"]])
            classical = tuple(ClassicalAssignment(int(c["node"]), tuple(c["outcomes"])) for c in doc["classical"])
            return cls(int(doc["n"]), classical, rho)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"malformed hybrid network document: {exc}") from exc


def hybrid_expectation(h: HybridNetwork, d: Decomposition, setting) -> float:
    """Quantum correlator over the quantum nodes times the fixed classical outcomes."""
    setting = tuple(setting)
    if len(setting) != h.n or d.n != h.n:
        raise InvalidArgumentError("setting, decomposition and network sizes differ")
    op = d.operator(setting, nodes=h.quantum_nodes)
    q = op.multiply(h.quantum_state.T).sum()
    return float(np.real(q)) * h.classical_factor(setting)


def hybrid_fidelity(h: HybridNetwork, d: Decomposition) -> float:
    return sum(c * hybrid_expectation(h, d, s) for c, s in d.terms)


def _resolve(n: int, classical_nodes: Sequence[int], assignments) -> list[ClassicalAssignment]:
    if len(classical_nodes) != len(assignments):
        raise InvalidArgumentError("one outcome table is needed per classical node")
    out = []
    for k, a in zip(classical_nodes, assignments):
        if isinstance(a, ClassicalAssignment):
            if a.node != k:
                raise InvalidArgumentError(f"assignment for node {a.node} given for node {k}")
            out.append(a)
        else:
            out.append(ClassicalAssignment(int(k), tuple(a)))
    for a in out:
        if len(a.outcomes) != n + 1:
            raise InvalidArgumentError(f"node {a.node} needs {n + 1} outcomes")
    return out


def hybrid_operator(n: int, d: Decomposition, classical_nodes: Sequence[int], assignments,
                    sparse: bool = False):
    """Operator on the quantum nodes whose expectation is the hybrid fidelity.

    Its largest eigenvalue is the best fidelity any quantum state on the
    remaining nodes can reach against these classical tables.
    """
    if d.n != n:
        raise InvalidArgumentError(f"decomposition is for n={d.n}, not {n}")
    table = _resolve(n, classical_nodes, assignments)
    vc = {a.node for a in table}
    if len(vc) != len(table) or not 1 <= len(vc) <= n - 1 or any(not 1 <= k <= n for k in vc):
        raise InvalidArgumentError(f"invalid classical node set {sorted(vc)} for n={n}")
    quantum = [k for k in range(1, n + 1) if k not in vc]
    dim = 1 << len(quantum)
    acc = sp.csr_matrix((dim, dim), dtype=complex)
    for coeff, setting in d.terms:
        f = 1
        for a in table:
            f *= a.value(setting[a.node - 1])
        acc = acc + (coeff * f) * d.operator(setting, nodes=quantum)
    return acc if sparse else acc.toarray()


def network_operator(h: HybridNetwork, d: Decomposition, sparse: bool = False):
    return hybrid_operator(h.n, d, h.classical_nodes, h.outcomes, sparse=sparse)
