"""Finite-shot measurement simulation and scenario runs.

Outcome bitstrings list node 1 first; '0' is the +1 eigenvalue of that node's
observable and '1' is -1. A setting with identity entries is measured in its
context (identity replaced by the Z-type setting) and marginalized later.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import qcore
from .bounds import extremal_hybrid
from .certify import CertificationResult, verdict
from .errors import IncompleteDataError, InvalidArgumentError
from .hybrid import HybridNetwork
from .protocol import PROTOCOLS, Decomposition, context_of, decomposition, fidelity_from_expectations

SOURCES = ("ghz", "star", "noise", "hybrid", "density")


@dataclass(frozen=True)
class MeasurementRecord:
    n: int
    setting: tuple[int, ...]
    shots: int
    counts: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "setting", tuple(int(m) for m in self.setting))
        object.__setattr__(self, "counts", {str(k): int(v) for k, v in sorted(self.counts.items())})
        if len(self.setting) != self.n:
            raise InvalidArgumentError(f"setting {self.setting} does not have {self.n} entries")
        if self.shots <= 0:
            raise InvalidArgumentError("a record needs a positive shot count")
        for key, c in self.counts.items():
            if len(key) != self.n or set(key) - {"0", "1"}:
                raise InvalidArgumentError(f"outcome {key!r} is not a length-{self.n} bitstring")
            if c < 0:
                raise InvalidArgumentError(f"negative count for outcome {key!r}")
        if sum(self.counts.values()) != self.shots:
            raise InvalidArgumentError(f"counts for setting {self.setting} do not sum to {self.shots}")

    def to_dict(self) -> dict:
        return {"setting": list(self.setting), "shots": self.shots, "counts": dict(self.counts)}


@dataclass(frozen=True)
class Scenario:
    """What to simulate: a source, a protocol, and the sampling budget."""

    name: str
    source: str
    n: int | None = None
    protocol: str = "ghz-xy"
    shots: int = 100_000
    seed: int = 0
    p: float | None = None
    case: str | None = None
    density: np.ndarray | None = field(default=None, repr=False, compare=False)

    def resolve(self):
        """Return the simulated object (density matrix or hybrid) and the decomposition."""
        if self.protocol not in PROTOCOLS:
            raise InvalidArgumentError(f"unknown protocol {self.protocol!r}")
        if self.source not in SOURCES:
            raise InvalidArgumentError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        if self.source == "hybrid":
            if self.case is None:
                raise InvalidArgumentError("hybrid scenarios need a case")
            h = extremal_hybrid(self.case)
            if self.n is not None and self.n != h.n:
                raise InvalidArgumentError(f"case {self.case} has {h.n} nodes, not {self.n}")
            return h, decomposition(h.n, self.protocol)
        if self.source == "density":
            if self.density is None:
                raise InvalidArgumentError("density scenarios need a density matrix")
            rho = qcore.as_density(self.density)
            return rho, decomposition(qcore.num_qubits(rho.shape[0]), self.protocol)
        if self.n is None:
            raise InvalidArgumentError(f"{self.source} scenarios need a node count")
        d = decomposition(self.n, self.protocol)
        if self.source == "ghz":
            return qcore.ghz_state(self.n), d
        if self.source == "star":
            return qcore.star_state(self.n), d
        if self.p is None:
            raise InvalidArgumentError("noise scenarios need a noise fraction p")
        return qcore.white_noise_mix(d.target_state(), self.p), d

    def config(self) -> dict:
        return {"name": self.name, "source": self.source, "n": self.n, "protocol": self.protocol,
                "shots": self.shots, "seed": self.seed, "p": self.p, "case": self.case}


def _eigenbasis(obs: np.ndarray) -> np.ndarray:
    # columns: +1 eigenvector, then -1 eigenvector
    _, vecs = qcore.hermitian_eigs(obs)
    return vecs[:, ::-1]


def _outcome_probabilities(state: np.ndarray, bases: list[np.ndarray]) -> np.ndarray:
    """Joint outcome distribution when qubit ``k`` is measured in the columns of ``bases[k]``."""
    nq = len(bases)
    if state.ndim == 1:
        amp = state.reshape((2,) * nq)
        for k, u in enumerate(bases):
            amp = np.moveaxis(np.tensordot(u.conj().T, amp, axes=(1, k)), 0, k)
        probs = np.abs(amp.ravel()) ** 2
    else:
        rho = state.reshape((2,) * (2 * nq))
        for k, u in enumerate(bases):
            rho = np.moveaxis(np.tensordot(u.conj().T, rho, axes=(1, k)), 0, k)
            rho = np.moveaxis(np.tensordot(rho, u, axes=(nq + k, 0)), -1, nq + k)
        probs = np.real(np.diagonal(rho.reshape(1 << nq, 1 << nq)))
    probs = np.clip(probs, 0, None)
    return probs / probs.sum()


def _stream(seed: int, setting) -> np.random.Generator:
    # position independent: depends only on the seed and the setting itself
    return np.random.default_rng(np.random.SeedSequence([int(seed), len(setting), *map(int, setting)]))


def sample_setting(source, setting, shots: int, seed: int, d: Decomposition) -> MeasurementRecord:
    """Draw ``shots`` joint outcomes for one setting from a state, density matrix or hybrid.

    Identity entries are measured in the Z-type setting, so the returned
    record's setting is the measurement context.
    """
    n = d.n
    setting = tuple(int(m) for m in setting)
    if len(setting) != n:
        raise InvalidArgumentError(f"setting {setting} does not have {n} entries")
    if shots <= 0:
        raise InvalidArgumentError("shots must be positive")
    for k, m in enumerate(setting, start=1):
        d.observable(k, m)
    ctx = context_of(setting, n)

    if isinstance(source, HybridNetwork):
        if source.n != n:
            raise InvalidArgumentError(f"hybrid has {source.n} nodes, decomposition has {n}")
        qnodes = list(source.quantum_nodes)
        state = source.quantum_state
        fixed = {a.node: "0" if a.value(ctx[a.node - 1]) == 1 else "1" for a in source.classical}
    else:
        state = np.asarray(source, dtype=complex)
        if state.shape[0] != 1 << n:
            raise InvalidArgumentError(f"state dimension {state.shape[0]} does not match n={n}")
        qnodes = list(range(1, n + 1))
        fixed = {}

    bases = [_eigenbasis(d.observable(k, ctx[k - 1]).matrix) for k in qnodes]
    probs = _outcome_probabilities(state, bases)
    counts_by_index = _stream(seed, ctx).multinomial(shots, probs)

    counts = {}
    nq = len(qnodes)
    for idx in np.flatnonzero(counts_by_index):
        qbits = format(int(idx), f"0{nq}b") if nq else ""
        bits, qi = [], 0
        for k in range(1, n + 1):
            if k in fixed:
                bits.append(fixed[k])
            else:
                bits.append(qbits[qi])
                qi += 1
        counts["".join(bits)] = int(counts_by_index[idx])
    return MeasurementRecord(n, ctx, shots, counts)


def expectation_from_record(r: MeasurementRecord, setting) -> tuple[float, float]:
    """Mean of the product of outcomes over the nodes where ``setting`` is not the identity."""
    setting = tuple(int(m) for m in setting)
    if r.shots <= 0:
        raise InvalidArgumentError("record has zero shots")
    if len(setting) != r.n:
        raise InvalidArgumentError(f"setting {setting} does not have {r.n} entries")
    if context_of(setting, r.n) != context_of(r.setting, r.n):
        raise InvalidArgumentError(f"setting {setting} cannot be read from a record taken at {r.setting}")
    active = [k for k, m in enumerate(setting) if m != 0]
    total = 0
    for key, c in r.counts.items():
        parity = sum(key[k] == "1" for k in active) & 1
        total += -c if parity else c
    value = total / r.shots
    return value, math.sqrt(max(0.0, 1 - value * value) / r.shots)


def expectations_from_records(records, d: Decomposition) -> dict:
    """ExpectationMap for every setting of ``d``; identity terms come from context marginals."""
    by_context = {context_of(r.setting, d.n): r for r in records}
    out, missing = {}, []
    for setting in d.settings:
        rec = by_context.get(context_of(setting, d.n))
        if rec is None:
            if any(setting):
                missing.append(setting)
            continue
        out[setting] = expectation_from_record(rec, setting)
    if missing:
        raise IncompleteDataError(missing)
    return out


def certify_records(records, n: int, protocol: str) -> CertificationResult:
    d = decomposition(n, protocol)
    value, err = fidelity_from_expectations(d, expectations_from_records(records, d))
    return verdict(n, protocol, value, err)


def run_scenario(s: Scenario) -> tuple[list[MeasurementRecord], CertificationResult]:
    """Sample every measurement context of the protocol and certify the estimate."""
    source, d = s.resolve()
    records = [sample_setting(source, ctx, s.shots, s.seed, d) for ctx in d.contexts]
    return records, certify_records(records, d.n, d.protocol)


def records_to_dict(records, n: int, protocol: str) -> dict:
    return {"n": n, "protocol": protocol, "records": [r.to_dict() for r in records]}


def records_from_dict(doc: Mapping) -> tuple[int, str, list[MeasurementRecord]]:
    from .schemas import validate

    validate(doc, "records")
    n = int(doc["n"])
    return n, doc["protocol"], [MeasurementRecord(n, r["setting"], r["shots"], r["counts"]) for r in doc["records"]]


def write_records(path, records, n: int, protocol: str, extra: Mapping | None = None) -> None:
    doc = records_to_dict(records, n, protocol)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_records(path) -> tuple[int, str, list[MeasurementRecord]]:
    return records_from_dict(json.loads(Path(path).read_text()))
