import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_ising.circuits import build_factorizer, build_sat, clamp_output_true, clamp_product, \
    compose
from sparse_ising.cnf import load_bundled
from sparse_ising.coloring import density, density_max, dsatur, validate
from sparse_ising.model import IsingModel, ModelError
from sparse_ising.sparsify import sparsify


@st.composite
def graphs(draw):
    n = draw(st.integers(2, 25))
    p = draw(st.floats(0.05, 0.9))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    clamps = {int(i): 1 for i in np.flatnonzero(rng.random(n) < 0.15)}
    return IsingModel.from_edges(n, edges, clamps=clamps)


@settings(max_examples=80, deadline=None)
@given(graphs())
def test_dsatur_is_proper_and_within_greedy_bound(model):
    col = dsatur(model)
    assert validate(model, col)
    free = ~model.clamped_mask
    assert np.all(col.colors[~free] == -1) and np.all(col.colors[free] >= 0)
    # bound uses degree among free nodes only
    sub = model.J[np.ix_(free, free)] != 0
    bound = int(sub.sum(axis=1).max()) + 1 if free.any() else 0
    assert col.num_colors <= bound
    assert sorted(np.concatenate(col.blocks).tolist()) == np.flatnonzero(free).tolist()


def test_known_chromatic_numbers():
    def cycle(n):
        return IsingModel.from_edges(n, [(i, (i + 1) % n, 1) for i in range(n)])

    assert dsatur(cycle(8)).num_colors == 2
    assert dsatur(cycle(9)).num_colors == 3
    k6 = IsingModel.from_edges(6, [(i, j, 1) for i in range(6) for j in range(i + 1, 6)])
    assert dsatur(k6).num_colors == 6
    grid = [(r * 5 + c, r * 5 + c + 1, 1) for r in range(5) for c in range(4)]
    grid += [(r * 5 + c, (r + 1) * 5 + c, 1) for r in range(4) for c in range(5)]
    assert dsatur(IsingModel.from_edges(25, grid)).num_colors == 2


def test_validate_detects_conflict():
    m = IsingModel.from_edges(3, [(0, 1, 1), (1, 2, 1)])
    col = dsatur(m)
    bad = type(col)(np.zeros(3, dtype=np.int64))
    assert validate(m, col) and not validate(m, bad)


def test_sparse_factorizer_colors():
    m, _ = sparsify(clamp_product(build_factorizer(8), 143), 5)
    col = dsatur(m)
    assert validate(m, col) and col.num_colors <= 6


def test_sparse_sat_colors():
    m, _ = sparsify(clamp_output_true(build_sat(load_bundled("uf20-01"))), 4)
    col = dsatur(m)
    assert validate(m, col) and col.num_colors <= 5


def test_density_definition():
    m = IsingModel.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    assert density(m) == pytest.approx(2 * 2 / 12)
    assert density_max(3, 4) == 1.0
    with pytest.raises(ModelError):
        density(IsingModel.from_edges(1))


def test_density_bounded_by_max_for_sparse_graphs():
    m, _ = sparsify(compose(build_factorizer(6)), 4)
    assert density(m) <= density_max(4, m.n)


def test_csv(tmp_path):
    m = IsingModel.from_edges(3, [(0, 1, 1)], clamps={2: 1})
    text = dsatur(m).to_csv(tmp_path / "c.csv")
    assert text.splitlines() == ["node,color", "0,0", "1,1", "2,-1"]
    assert (tmp_path / "c.csv").read_text() == text
