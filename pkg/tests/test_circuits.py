import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_ising.circuits import Circuit, CircuitError, Gate, build_factorizer, build_sat, \
    circuit_satisfied, clamp_output_true, clamp_product, compose, factorizer_state, \
    plant_assignment, planted_energy, read_factors, sat_state, simulate
from sparse_ising.cnf import CnfFormula, load_bundled, satisfied_clauses
from sparse_ising.gates import GateKind, ground_states
from sparse_ising.model import bitstring, energy, enumerate_states

AND_OR = Circuit(5, (Gate(GateKind.AND, (0, 1, 2)), Gate(GateKind.OR, (2, 3, 4))), {4: 1})


def ground_strings(circuit, nodes):
    return {bitstring(s[nodes]) for s in ground_states(compose(circuit))}


def test_and_or_fused_ground_states():
    assert ground_strings(AND_OR, [0, 1, 2, 3]) == {"0001", "0101", "1001", "1110", "1111"}


def test_and_or_fused_matrix():
    m = compose(AND_OR)
    # the fused node sums the AND output row and the OR input row
    assert m.h[2] == -2 + -1
    assert m.weight(2, 3) == -1 and m.weight(0, 2) == 2 and m.weight(2, 4) == 2


@pytest.mark.parametrize("m,expected", [(2, 14), (3, 30), (4, 52), (8, 200), (16, 784)])
def test_factorizer_node_count(m, expected):
    # 2m inputs, m^2 AND outputs, 2m(m-1) adder outputs, m zero constants
    assert 2 * m + m * m + 2 * m * (m - 1) + m == expected
    assert build_factorizer(m).n == expected


@pytest.mark.parametrize("m", [2, 3, 4])
def test_factorizer_multiplies(m):
    c = build_factorizer(m)
    for A, B in itertools.product(range(1 << m), repeat=2):
        s = factorizer_state(c, A, B)
        assert read_factors(c, s) == (A, B, A * B)
        assert energy(compose(c), s) == pytest.approx(c.ground_energy_bound)


def test_factorizer_2bit_inverse_mode():
    c = clamp_product(build_factorizer(2), 9)
    words = set()
    for s in ground_states(compose(c)):
        A, B, P = read_factors(c, s)
        words.add((A, B))
        assert P == 9
    assert words == {(3, 3)}
    assert planted_energy(c) == pytest.approx(c.ground_energy_bound)


def test_factorizer_2bit_6_has_both_orders():
    c = clamp_product(build_factorizer(2), 6)
    pairs = {read_factors(c, s)[:2] for s in ground_states(compose(c))}
    assert pairs == {(2, 3), (3, 2)}


def test_clamp_product_validation():
    c = build_factorizer(3)
    with pytest.raises(CircuitError):
        clamp_product(c, 1 << 6)
    with pytest.raises(CircuitError):
        clamp_product(c, 35, (5, 8))
    assert clamp_product(c, 35).meta["factors"] == [7, 5]
    assert clamp_product(c, 59).planted is None  # prime too large for 3-bit factors


def test_single_clause_has_seven_ground_states():
    c = clamp_output_true(build_sat(CnfFormula(3, ((1, 2, 3),))))
    gs = ground_states(compose(c))
    assert len(gs) == 7
    assert all(circuit_satisfied(c, s) == 1 for s in gs)


@st.composite
def formulas(draw):
    v = draw(st.integers(3, 5))
    lit = st.integers(1, v).flatmap(lambda x: st.sampled_from([x, -x]))
    return CnfFormula(v, tuple(draw(st.lists(st.tuples(lit, lit, lit), min_size=1, max_size=3))))


@settings(max_examples=30, deadline=None)
@given(formulas())
def test_sat_ground_states_are_satisfying_assignments(f):
    c = clamp_output_true(build_sat(f))
    sat = {a for a in itertools.product((0, 1), repeat=f.v) if satisfied_clauses(f, a) == f.c}
    gs = {tuple((s[:f.v] + 1) // 2) for s in ground_states(compose(c))}
    if sat:
        assert gs == sat
    else:
        assert all(satisfied_clauses(f, a) < f.c for a in gs)


def test_sat_sizes():
    f = load_bundled("uf20-01")
    c = build_sat(f)
    assert c.n == f.v + f.c + 1 == 112
    assert build_sat(load_bundled("uf100-010")).n == 531


def test_sat_state_and_planting():
    f = CnfFormula(3, ((1, -2, 3), (-1, 2, 3)))
    c = clamp_output_true(build_sat(f))
    s = sat_state(c, [1, 1, 0])
    assert circuit_satisfied(c, s) == 2
    p = plant_assignment(c, [1, 1, 0])
    assert planted_energy(p) == pytest.approx(c.ground_energy_bound)
    with pytest.raises(CircuitError):
        plant_assignment(c, [1, 0, 0])


def test_simulate_requires_inputs():
    with pytest.raises(CircuitError):
        simulate(AND_OR, {0: 1})


def test_conflicting_clamps_rejected():
    with pytest.raises(CircuitError):
        AND_OR.with_clamps({4: -1})


def test_json_roundtrip():
    c = clamp_product(build_factorizer(3), 35)
    d = Circuit.from_json(c.to_json())
    assert d.n == c.n and d.clamps == c.clamps and d.meta == c.meta
    assert np.array_equal(d.planted, c.planted)
    assert compose(d) == compose(c)


def test_gate_ground_energy():
    assert Gate(GateKind.FULL_ADDER, (0, 1, 2, 3, 4)).ground_energy == -4
    assert Gate(GateKind.AND, (0, 1, 2)).ground_energy == -3
    assert min(energy(compose(Circuit(2, (Gate(GateKind.NOT, (0, 1)),))),
                      enumerate_states(compose(Circuit(2, (Gate(GateKind.NOT, (0, 1)),)))))) == -1
