"""Fidelity and genuine multi-node steering certification for GHZ and star-graph networks."""

from .bounds import (BoundResult, Witness, classical_bound, closed_form_bound, extremal_hybrid,
                     max_classical_fidelity, two_by_two_bound)
from .certify import (CertificationResult, certify, ew_verdict, noise_comparison, noise_threshold,
                      steering_bound, steering_verdict)
from .errors import IncompleteDataError, InvalidArgumentError, ResourceLimitError
from .harness import MeasurementRecord, Scenario, expectation_from_record, run_scenario, sample_setting
from .hybrid import ClassicalAssignment, HybridNetwork, hybrid_expectation, hybrid_fidelity, hybrid_operator
from .protocol import (Decomposition, Observable, decomposition, exact_expectations, fidelity_from_expectations,
                       ghz_decomposition, pauli_decomposition, setting_count, star_decomposition)
from .qcore import fidelity, ghz_state, star_state, white_noise_mix

__version__ = "0.1.0"
