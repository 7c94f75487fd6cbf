"""Entanglement-witness and steering verdicts, and white-noise tolerance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import bisect

from . import qcore
from .bounds import PAULI_BOUND, steering_bound
from .errors import InvalidArgumentError
from .hybrid import HybridNetwork, hybrid_fidelity
from .protocol import PROTOCOLS, decomposition, exact_expectations, fidelity_from_expectations

EW_BOUND = 0.5
MARGINAL_SIGMAS = 3.0
DENSE_NOISE_LIMIT = 10  # largest n for which the bisection oracle builds the full density matrix


@dataclass(frozen=True)
class CertificationResult:
    n: int
    protocol: str
    fidelity: float
    stderr: float
    ew_positive: bool
    steering_positive: bool
    bound_used: float
    margin_sigmas: float | None
    marginal_flag: bool

    def exceeds_bound(self, sigmas: float) -> bool:
        """Whether the fidelity clears the bound by more than ``sigmas`` standard errors.

        A reporting aid for finite-shot data; the verdicts themselves stay strict.
        """
        return self.fidelity - self.bound_used > sigmas * self.stderr

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CertificationResult":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__})


def ew_verdict(f: float) -> bool:
    return f > EW_BOUND


def steering_verdict(f: float, n: int, protocol: str = "ghz-xy") -> bool:
    return f > steering_bound(n, protocol)


def verdict(n: int, protocol: str, fidelity: float, stderr: float = 0.0) -> CertificationResult:
    """Assemble a :class:`CertificationResult` from a fidelity estimate."""
    if stderr < 0 or not math.isfinite(stderr):
        raise InvalidArgumentError(f"stderr must be finite and non-negative, got {stderr}")
    bound = steering_bound(n, protocol)
    margin = (fidelity - bound) / stderr if stderr > 0 else None
    return CertificationResult(
        n=n,
        protocol=protocol,
        fidelity=float(fidelity),
        stderr=float(stderr),
        ew_positive=ew_verdict(fidelity),
        steering_positive=fidelity > bound,
        bound_used=float(bound),
        margin_sigmas=None if margin is None else float(margin),
        marginal_flag=abs(fidelity - bound) < MARGINAL_SIGMAS * stderr,
    )


def certify(source, n: int, protocol: str = "ghz-xy") -> CertificationResult:
    """Certify a state vector, density matrix, hybrid network or expectation map.

    Expectation maps go through :func:`fidelity_from_expectations` and carry
    its propagated stderr; exact inputs have stderr 0.
    """
    if protocol not in PROTOCOLS:
        raise InvalidArgumentError(f"unknown protocol {protocol!r}")
    d = decomposition(n, protocol)
    if isinstance(source, HybridNetwork):
        if source.n != n:
            raise InvalidArgumentError(f"hybrid has {source.n} nodes, not {n}")
        return verdict(n, protocol, hybrid_fidelity(source, d))
    if isinstance(source, Mapping):
        value, err = fidelity_from_expectations(d, source)
        return verdict(n, protocol, value, err)
    value, _ = fidelity_from_expectations(d, exact_expectations(source, d))
    return verdict(n, protocol, value)


def noise_threshold(n: int, protocol: str = "ghz-xy") -> float:
    """White-noise fraction at which the target-state fidelity falls to the steering bound."""
    n = qcore._check_n(n)
    return (1 - steering_bound(n, protocol)) / (1 - 2.0**-n)


def _noisy_fidelity(n: int, psi: np.ndarray):
    if n <= DENSE_NOISE_LIMIT:
        return lambda p: qcore.fidelity(qcore.white_noise_mix(psi, p), psi)
    # too large for a dense density matrix: combine the two mixture components
    pure = qcore.fidelity(psi, psi)
    mixed = float(np.vdot(psi, psi).real) / psi.shape[0]
    return lambda p: (1 - p) * pure + p * mixed


def noise_threshold_bisection(n: int, protocol: str = "ghz-xy", xtol: float = 1e-13) -> float:
    """Numerical oracle for :func:`noise_threshold`: root of F(p) - bound on [0, 1]."""
    n = qcore._check_n(n)
    bound = steering_bound(n, protocol)
    psi = qcore.star_state(n) if protocol == "star-xy" else qcore.ghz_state(n)
    f = _noisy_fidelity(n, psi)
    return float(bisect(lambda p: f(p) - bound, 0.0, 1.0, xtol=xtol))


def noise_comparison(n_max: int = 14, n_min: int = 2) -> list[tuple[int, float, float]]:
    """Rows ``(n, threshold for the xy protocol, threshold for the Pauli baseline)``."""
    if not 2 <= n_min <= n_max <= 14:
        raise InvalidArgumentError(f"need 2 <= n_min <= n_max <= 14, got {n_min}, {n_max}")
    return [(n, noise_threshold(n, "ghz-xy"), noise_threshold(n, "pauli")) for n in range(n_min, n_max + 1)]


__all__ = [
    "CertificationResult", "EW_BOUND", "PAULI_BOUND", "certify", "ew_verdict", "noise_comparison",
    "noise_threshold", "noise_threshold_bisection", "steering_bound", "steering_verdict", "verdict",
]
