import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netsteer import bounds, qcore, schemas
from netsteer.errors import InvalidArgumentError, ResourceLimitError
from netsteer.hybrid import hybrid_fidelity, hybrid_operator
from netsteer.protocol import ghz_decomposition, pauli_decomposition

REFERENCE_GRID = {
    (2, 1): 0.683,
    (3, 1): 0.667, (3, 2): 0.667,
    (4, 1): 0.6613, (4, 2): 0.683, (4, 3): 0.6613,
    (5, 1): 0.6589, (5, 2): 0.6589, (5, 3): 0.6589, (5, 4): 0.6589,
    (6, 1): 0.6576, (6, 2): 0.667, (6, 3): 0.683, (6, 4): 0.667, (6, 5): 0.6576,
}
REFERENCE_ONE_NODE_ROW = {7: 0.6569, 8: 0.6564, 9: 0.6560, 10: 0.6558, 11: 0.6556, 12: 0.6555}
TABLE_TOL = 5e-4
EIG_TOL = 1e-9


@pytest.mark.parametrize("key", sorted(REFERENCE_GRID))
def test_reduced_matches_reference_grid(key):
    n, n_c = key
    assert abs(bounds.max_classical_fidelity(n, n_c, "reduced").bound - REFERENCE_GRID[key]) < TABLE_TOL


@pytest.mark.parametrize("n", range(2, 5))
def test_brute_and_reduced_agree(n):
    for n_c in range(1, n):
        b = bounds.max_classical_fidelity(n, n_c, "brute").bound
        r = bounds.max_classical_fidelity(n, n_c, "reduced").bound
        assert abs(b - r) < 1e-10


def test_brute_witness_uses_first_lexicographic_maximiser():
    res = bounds.max_classical_fidelity(2, 1, "brute")
    assert res.witness.classical_nodes == (1,)
    assert res.witness.assignments == ((1, 1, 1),)


@pytest.mark.parametrize("method", ["brute", "reduced"])
@pytest.mark.parametrize("n,n_c", [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_witness_reevaluates_to_bound(method, n, n_c):
    res = bounds.max_classical_fidelity(n, n_c, method)
    h = res.witness.hybrid(n)
    assert abs(hybrid_fidelity(h, ghz_decomposition(n)) - res.bound) < EIG_TOL


@pytest.mark.parametrize("n,n_c", [(5, 2), (6, 3), (7, 1), (8, 4)])
def test_reduced_witness_reevaluates_to_bound(n, n_c):
    res = bounds.max_classical_fidelity(n, n_c, "reduced")
    assert abs(hybrid_fidelity(res.witness.hybrid(n), ghz_decomposition(n)) - res.bound) < EIG_TOL


def test_classical_bound_examples():
    assert abs(bounds.classical_bound(3, "reduced").bound - 2 / 3) < EIG_TOL
    assert abs(bounds.classical_bound(4, "reduced").bound - (1 + math.sqrt(3)) / 4) < EIG_TOL
    assert abs(bounds.classical_bound(5, "reduced").bound - 0.6589) < TABLE_TOL


def test_closed_form_bound_examples():
    assert bounds.closed_form_bound(3) == pytest.approx(2 / 3, abs=1e-15)
    assert bounds.closed_form_bound(4) == (1 + math.sqrt(3)) / 4
    assert abs(bounds.closed_form_bound(5) - 0.6589) < TABLE_TOL
    assert abs(bounds.closed_form_bound(100001) - 0.6547) < TABLE_TOL
    limit = (1 + math.sqrt(1 + 16 / math.pi**2)) / 4
    assert abs(bounds.closed_form_bound(100001) - limit) < 1e-9


def test_closed_form_bound_decreases_over_odd_n():
    values = [bounds.closed_form_bound(n) for n in range(3, 200, 2)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_two_by_two_bound_examples():
    assert abs(bounds.two_by_two_bound(3) - 2 / 3) < 1e-12
    assert abs(bounds.two_by_two_bound(5) - 0.658927) < 1e-6
    assert abs(bounds.two_by_two_bound(11) - 0.6556) < TABLE_TOL


@pytest.mark.parametrize("n", range(3, 30, 2))
def test_two_by_two_bound_equals_closed_form_for_odd_n(n):
    assert abs(bounds.two_by_two_bound(n) - bounds.closed_form_bound(n)) < 1e-12


@pytest.mark.parametrize("n", range(2, 9))
def test_two_by_two_bound_is_one_classical_node_bound(n):
    reduced = bounds.max_classical_fidelity(n, 1, "reduced", witness=False).bound
    assert abs(bounds.two_by_two_bound(n) - reduced) < 1e-10


@pytest.mark.parametrize("n", range(2, 13))
def test_reduced_agrees_with_structural_closed_form(n):
    for n_c in range(1, n):
        r = bounds.max_classical_fidelity(n, n_c, "reduced", witness=False).bound
        c = bounds.max_classical_fidelity(n, n_c, "closed").bound
        assert abs(r - c) < EIG_TOL, (n, n_c)


@pytest.mark.parametrize("n", [n for n in range(2, 13) if n != 9])
def test_odd_n_formula_is_the_classical_bound(n):
    assert abs(bounds.classical_bound(n, "closed").bound - bounds.closed_form_bound(n)) < EIG_TOL


def test_nine_nodes_exceed_odd_n_formula():
    # six classical nodes and three quantum ones reach 2/3, above the odd-N formula
    res = bounds.max_classical_fidelity(9, 6, "reduced")
    assert abs(res.bound - 2 / 3) < EIG_TOL
    assert res.bound > bounds.closed_form_bound(9) + 0.01
    d = ghz_decomposition(9)
    op = hybrid_operator(9, d, res.witness.classical_nodes, res.witness.assignments)
    assert abs(np.linalg.eigvalsh(op)[-1] - 2 / 3) < EIG_TOL
    assert abs(hybrid_fidelity(res.witness.hybrid(9), d) - 2 / 3) < EIG_TOL


@pytest.mark.parametrize("n", [3, 5])
def test_odd_n_is_flat_in_classical_count(n):
    values = [bounds.max_classical_fidelity(n, n_c, "reduced", witness=False).bound for n_c in range(1, n)]
    assert max(values) - min(values) < EIG_TOL


@pytest.mark.parametrize("n", [4, 6])
def test_even_n_is_symmetric_with_peak_at_half(n):
    values = {n_c: bounds.max_classical_fidelity(n, n_c, "reduced", witness=False).bound for n_c in range(1, n)}
    for n_c in range(1, n):
        assert abs(values[n_c] - values[n - n_c]) < EIG_TOL
    assert max(values, key=values.get) == n // 2


def test_half_classical_four_nodes_equals_pauli_three_nodes_one_classical():
    ghz = bounds.max_classical_fidelity(4, 2, "brute").bound
    pauli = bounds.max_classical_fidelity(3, 1, "brute", "pauli").bound
    assert abs(ghz - pauli) < EIG_TOL
    assert abs(pauli - bounds.PAULI_BOUND) < EIG_TOL


@pytest.mark.parametrize("n", range(2, 15))
def test_classical_bound_exceeds_one_half(n):
    assert bounds.classical_bound(n, "closed").bound > 0.5


def test_star_protocol_shares_ghz_bounds():
    for n, n_c in [(3, 1), (4, 2), (5, 3)]:
        star = bounds.max_classical_fidelity(n, n_c, "reduced", "star-xy").bound
        ghz = bounds.max_classical_fidelity(n, n_c, "reduced", "ghz-xy").bound
        assert abs(star - ghz) < EIG_TOL


def test_resource_limits():
    with pytest.raises(ResourceLimitError):
        bounds.max_classical_fidelity(8, 3, "brute")
    with pytest.raises(ResourceLimitError):
        bounds.max_classical_fidelity(6, 3, "reduced", limit=10)


def test_invalid_arguments():
    with pytest.raises(InvalidArgumentError):
        bounds.max_classical_fidelity(4, 0)
    with pytest.raises(InvalidArgumentError):
        bounds.max_classical_fidelity(4, 4)
    with pytest.raises(InvalidArgumentError):
        bounds.max_classical_fidelity(4, 2, "annealing")
    with pytest.raises(InvalidArgumentError):
        bounds.max_classical_fidelity(4, 2, "reduced", "pauli")
    with pytest.raises(InvalidArgumentError):
        bounds.max_classical_fidelity(4, 2, "closed", "pauli")
    with pytest.raises(InvalidArgumentError):
        bounds.extremal_hybrid("e9_9")


def test_extremal_cases():
    d3, d4 = ghz_decomposition(3), ghz_decomposition(4)
    assert abs(hybrid_fidelity(bounds.extremal_hybrid("e1_3"), d3) - 2 / 3) < EIG_TOL
    assert abs(hybrid_fidelity(bounds.extremal_hybrid("e2_4"), d4) - (1 + math.sqrt(3)) / 4) < EIG_TOL
    e3 = hybrid_fidelity(bounds.extremal_hybrid("e3_4"), d4)
    assert abs(e3 - 0.6613) < TABLE_TOL
    assert abs(e3 - bounds.max_classical_fidelity(4, 1, "reduced").bound) < EIG_TOL


@pytest.mark.parametrize("case", sorted(bounds.EXTREMAL_CASES))
def test_extremal_states_are_top_eigenvectors(case):
    h = bounds.extremal_hybrid(case)
    op = hybrid_operator(h.n, ghz_decomposition(h.n), h.classical_nodes, h.outcomes)
    w, v = qcore.hermitian_eigs(op)
    psi = np.linalg.eigh(h.quantum_state)[1][:, -1]
    assert abs(abs(np.vdot(v[:, -1], psi)) - 1) < 1e-9
    assert abs(np.trace(h.quantum_state @ op).real - w[-1]) < EIG_TOL


@given(st.sampled_from([(3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (5, 2)]))
def test_generic_extremal_hybrid_reaches_bound(key):
    n, n_c = key
    h = bounds.extremal_hybrid(key)
    bound = bounds.max_classical_fidelity(n, n_c, "closed").bound
    assert len(h.classical) == n_c
    assert abs(hybrid_fidelity(h, ghz_decomposition(n)) - bound) < EIG_TOL


def test_tables():
    s1 = bounds.small_grid()
    assert {(r.n, r.n_c) for r in s1} == set(REFERENCE_GRID)
    s2 = bounds.large_n_rows("closed")
    for r in s2:
        assert abs(r.bound - REFERENCE_ONE_NODE_ROW[r.n]) < TABLE_TOL


def test_bound_result_serializes_against_schema():
    res = bounds.max_classical_fidelity(3, 1, "brute")
    schemas.validate({"results": [res.to_dict(), bounds.classical_bound(4).to_dict()]}, "bound")


def test_pauli_brute_bound_is_baseline():
    res = bounds.classical_bound(3, "brute", "pauli")
    assert abs(res.bound - bounds.PAULI_BOUND) < EIG_TOL and res.n_c == 1


def test_pauli_hybrid_operator_matches_brute_witness():
    res = bounds.max_classical_fidelity(3, 1, "brute", "pauli")
    op = hybrid_operator(3, pauli_decomposition(3), res.witness.classical_nodes, res.witness.assignments)
    assert abs(np.linalg.eigvalsh(op)[-1] - res.bound) < EIG_TOL
