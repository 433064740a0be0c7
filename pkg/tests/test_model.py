import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_ising.model import (
    BINARY, BIPOLAR, IsingModel, ModelError, boltzmann_exact, effective_beta, energy,
    enumerate_states, local_field, local_fields, lut_lookup, pbit_update, random_state,
    state_index, tanh_lut, to_binary, to_bipolar,
)


@st.composite
def small_models(draw, max_n=6):
    n = draw(st.integers(2, max_n))
    weights = st.integers(-3, 3)
    edges = [(i, j, draw(weights)) for i in range(n) for j in range(i + 1, n)
             if draw(st.booleans())]
    h = [draw(weights) for _ in range(n)]
    return IsingModel.from_edges(n, edges, h)


def dense_energy(J, h, m):
    # Independent oracle: the quadratic form with the 1/2 on the full symmetric J.
    m = np.asarray(m, dtype=float)
    return -(0.5 * m @ J @ m + h @ m)


def test_single_edge_energies():
    m = IsingModel.from_edges(2, [(0, 1, 1.0)])
    assert energy(m, [1, 1]) == -1
    assert energy(m, [1, -1]) == 1


def test_field_is_negative_energy_gradient():
    m = IsingModel.from_dense([[0, 2], [2, 0]], [0.5, -1])
    s = np.array([1, -1])
    # E(m_0=+1) - E(m_0=-1) = -2 I_0
    flipped = s.copy()
    flipped[0] = -1
    assert energy(m, s) - energy(m, flipped) == pytest.approx(-2 * local_field(m, s, 0))


@settings(max_examples=60, deadline=None)
@given(small_models(), st.data())
def test_energy_matches_dense_form(model, data):
    s = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=model.n, max_size=model.n)))
    assert energy(model, s) == pytest.approx(dense_energy(model.J, model.h, s))
    assert local_fields(model, s) == pytest.approx(model.J @ s + model.h)


@settings(max_examples=40, deadline=None)
@given(small_models())
def test_binary_conversion_preserves_fields_and_law(model):
    b = to_binary(model)
    states = enumerate_states(model)
    bits = (states + 1) // 2
    for s, x in zip(states, bits):
        fb = b.J @ x + b.h
        assert fb == pytest.approx(model.J @ s + model.h)
    # Energies differ by a factor 2 and a constant, so the binary law needs 2*beta.
    eb = np.array([energy(b, x) for x in bits])
    es = np.array([energy(model, s) for s in states])
    assert np.allclose(eb - es / 2, (eb - es / 2)[0])
    assert np.allclose(boltzmann_exact(b, 0.7).probs, boltzmann_exact(model, 0.7).probs)
    assert to_bipolar(b) == model


def test_effective_beta():
    m = IsingModel.from_edges(2, [(0, 1, 1.0)])
    assert effective_beta(m, 1.5) == 1.5
    assert effective_beta(to_binary(m), 1.5) == 3.0


def test_from_edges_merges_and_drops_zero():
    m = IsingModel.from_edges(3, [(0, 1, 1), (1, 0, 2), (1, 2, 1), (2, 1, -1)])
    assert m.num_edges == 1
    assert m.weight(0, 1) == 3 and m.weight(1, 2) == 0


def test_rejects_malformed():
    with pytest.raises(ModelError):
        IsingModel.from_edges(2, [(0, 0, 1)])
    with pytest.raises(ModelError):
        IsingModel.from_dense([[0, 1], [2, 0]])
    with pytest.raises(ModelError):
        IsingModel.from_edges(2, [(0, 5, 1)])
    with pytest.raises(ModelError):
        IsingModel.from_edges(2, clamps={0: 0})
    with pytest.raises(ModelError):
        energy(IsingModel.from_edges(2), [1, 0])


def test_pbit_probability_single_node():
    # P(+1) = (1 + tanh(beta I)) / 2 for u uniform on (-1, 1)
    rng = np.random.default_rng(3)
    u = rng.uniform(-1, 1, 200_000)
    out = pbit_update(np.ones_like(u), 1.0, u)
    p = (out == 1).mean()
    expected = (1 + math.tanh(1.0)) / 2
    assert abs(p - expected) < 3 * math.sqrt(expected * (1 - expected) / u.size) + 1e-12


def test_pbit_deterministic_limits():
    assert pbit_update(5.0, 100.0, 0.999) == 1
    assert pbit_update(-5.0, 100.0, -0.999) == -1


@pytest.mark.parametrize("bits", [4, 6, 8, 10])
def test_tanh_lut_error_bound(bits):
    table, step = tanh_lut(bits)
    x = np.linspace(-12, 12, 20001)
    err = np.abs(lut_lookup(table, step, x) - np.tanh(x))
    assert err.max() <= 2.0 ** -(bits - 1)


def test_boltzmann_exact_two_spin():
    m = IsingModel.from_edges(2, [(0, 1, 1.0)])
    d = boltzmann_exact(m, 1.0)
    # states in order 00,01,10,11 (bipolar -1/-1 ...)
    w = np.exp([1, -1, -1, 1])
    assert d.probs == pytest.approx(w / w.sum())


def test_clamped_enumeration_and_index():
    m = IsingModel.from_edges(3, [(0, 1, 1), (1, 2, 1)], clamps={1: 1})
    states = enumerate_states(m)
    assert len(states) == 4 and np.all(states[:, 1] == 1)
    assert list(state_index(states, m.free_nodes)) == [0, 1, 2, 3]


def test_random_state_respects_clamps():
    m = IsingModel.from_edges(4, clamps={2: -1})
    s = random_state(m, np.random.default_rng(0))
    assert s[2] == -1 and set(np.unique(s)) <= {-1, 1}


def test_json_roundtrip_and_immutability():
    m = IsingModel.from_edges(3, [(0, 1, 2), (0, 2, -1.5)], [1, 0, -1], {2: 1}, labels=list("abc"))
    assert IsingModel.from_json(m.to_json()) == m
    with pytest.raises(ValueError):
        m.h[0] = 4


def test_bias_clamped_matches_hard_clamp_ground_states():
    m = IsingModel.from_dense([[0, -1, 2], [-1, 0, 2], [2, 2, 0]], [1, 1, -2], clamps={2: 1})
    soft = m.bias_clamped()
    e = energy(soft, enumerate_states(soft))
    best = enumerate_states(soft)[np.isclose(e, e.min())]
    assert [list(s) for s in best] == [[1, 1, 1]]


def test_enumeration_covers_all_states():
    m = IsingModel.from_edges(3)
    rows = {tuple(s) for s in enumerate_states(m)}
    assert rows == set(itertools.product((-1, 1), repeat=3))


def test_binary_representation_values():
    b = IsingModel.from_edges(2, [(0, 1, 1)], representation=BINARY)
    assert set(np.unique(enumerate_states(b))) == {0, 1}
    assert b.representation == BINARY and IsingModel.from_edges(1).representation == BIPOLAR
