"""Ising/Boltzmann substrate shared by every other module.

An :class:`IsingModel` stores a sparse symmetric coupling graph as a canonical
upper-triangular edge list ``(i, j, w)`` with ``i < j`` plus a bias vector and a
set of clamped (frozen) nodes.  Energies follow

    E(m) = -( sum_{i<j} J_ij m_i m_j + sum_i h_i m_i )

with ``m`` either bipolar (+-1) or binary (0/1) according to
``model.representation``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

BIPOLAR = "bipolar"
BINARY = "binary"
MAX_ENUM_FREE = 24

_VALUES = {BIPOLAR: (-1, 1), BINARY: (0, 1)}


class ModelError(ValueError):
    """Raised for malformed models or states that do not match a model."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Immutable sparse Ising model.

    Use :meth:`from_edges` rather than the raw constructor: it merges duplicate
    edges, drops zero weights and sorts edges canonically by ``(i, j)``.
    """

    n: int
    edges: np.ndarray
    weights: np.ndarray
    h: np.ndarray
    clamps: Mapping[int, int] = field(default_factory=dict)
    representation: str = BIPOLAR
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.representation not in _VALUES:
            raise ModelError(f"unknown representation {self.representation!r}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        h = np.asarray(self.h, dtype=np.float64).reshape(-1)
        if h.shape[0] != self.n:
            raise ModelError(f"h has length {h.shape[0]}, expected {self.n}")
        if edges.shape[0] != weights.shape[0]:
            raise ModelError("edges and weights differ in length")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ModelError("edge index out of range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ModelError("edges must be stored with i < j (no self-edges)")
        lo, hi = _VALUES[self.representation]
        clamps = {}
        for k, v in dict(self.clamps).items():
            k, v = int(k), int(v)
            if not 0 <= k < self.n:
                raise ModelError(f"clamp index {k} out of range")
            if v not in (lo, hi):
                raise ModelError(f"clamp value {v} invalid for {self.representation}")
            clamps[k] = v
        if self.labels is not None and len(self.labels) != self.n:
            raise ModelError("labels must have one entry per node")
        object.__setattr__(self, "edges", _freeze(edges))
        object.__setattr__(self, "weights", _freeze(weights))
        object.__setattr__(self, "h", _freeze(h))
        object.__setattr__(self, "clamps", MappingProxyType(dict(sorted(clamps.items()))))

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int, float]] = (),
        h: Iterable[float] | None = None,
        clamps: Mapping[int, int] | None = None,
        representation: str = BIPOLAR,
        labels: Iterable[str] | None = None,
    ) -> "IsingModel":
        """Build a model from ``(i, j, w)`` triples in any order or orientation.

        Duplicate pairs are summed, which is exactly what fusing gate pins
        requires.  Self-edges are rejected.
        """
        acc: dict[tuple[int, int], float] = {}
        for i, j, w in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ModelError(f"self-edge on node {i}")
            key = (i, j) if i < j else (j, i)
            acc[key] = acc.get(key, 0.0) + float(w)
        keys = sorted(k for k, w in acc.items() if w != 0.0)
        e = np.array(keys, dtype=np.int64).reshape(-1, 2)
        w = np.array([acc[k] for k in keys], dtype=np.float64)
        hv = np.zeros(n) if h is None else np.asarray(list(h), dtype=np.float64)
        return cls(n, e, w, hv, dict(clamps or {}), representation,
                   None if labels is None else tuple(labels))

    @classmethod
    def from_dense(cls, J, h=None, clamps=None, representation=BIPOLAR, labels=None):
        J = np.asarray(J, dtype=np.float64)
        if J.shape[0] != J.shape[1] or not np.array_equal(J, J.T):
            raise ModelError("J must be square and symmetric")
        if np.any(np.diag(J) != 0):
            raise ModelError("J must have a zero diagonal")
        i, j = np.nonzero(np.triu(J, 1))
        return cls.from_edges(J.shape[0], zip(i, j, J[i, j]), h, clamps, representation, labels)

    # ---- derived structure -------------------------------------------------

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as ``(indptr, indices, data)`` with sorted rows."""
        if len(self.edges) == 0:
            return (np.zeros(self.n + 1, np.int64), np.zeros(0, np.int64), np.zeros(0))
        i, j = self.edges[:, 0], self.edges[:, 1]
        mat = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights]),
             (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        ).tocsr()
        mat.sort_indices()
        return (_freeze(mat.indptr.astype(np.int64)), _freeze(mat.indices.astype(np.int64)),
                _freeze(mat.data.astype(np.float64)))

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        indptr, indices, data = self.csr
        return sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    @property
    def J(self) -> np.ndarray:
        """Dense coupling matrix; only sensible for small models."""
        return self.matrix.toarray()

    @cached_property
    def degree(self) -> np.ndarray:
        return _freeze(np.diff(self.csr[0]))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def clamped_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.clamps)] = True
        return _freeze(mask)

    @cached_property
    def free_nodes(self) -> np.ndarray:
        return _freeze(np.flatnonzero(~self.clamped_mask))

    @property
    def num_free(self) -> int:
        return int(self.n - len(self.clamps))

    def weight(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        idx = np.searchsorted(self.edges[:, 0] * self.n + self.edges[:, 1], i * self.n + j)
        if idx < len(self.edges) and tuple(self.edges[idx]) == (i, j):
            return float(self.weights[idx])
        return 0.0

    # ---- variants ----------------------------------------------------------

    def replace(self, **changes) -> "IsingModel":
        kw = dict(n=self.n, edges=self.edges, weights=self.weights, h=self.h,
                  clamps=dict(self.clamps), representation=self.representation,
                  labels=self.labels)
        kw.update(changes)
        return IsingModel(**kw)

    def with_clamps(self, clamps: Mapping[int, int], replace: bool = False) -> "IsingModel":
        merged = {} if replace else dict(self.clamps)
        merged.update({int(k): int(v) for k, v in clamps.items()})
        return self.replace(clamps=merged)

    def bias_clamped(self, magnitude: float | None = None) -> "IsingModel":
        """Replace frozen clamps by large biases (the soft clamping variant).

        The default magnitude ``2 * (max_i sum_j |J_ij| + max |h|)`` dominates any
        field a clamped node can receive.
        """
        if self.representation != BIPOLAR:
            raise ModelError("bias clamping is defined for bipolar models")
        if magnitude is None:
            rowsum = np.asarray(abs(self.matrix).sum(axis=1)).ravel()
            magnitude = 2.0 * ((rowsum.max() if self.n else 0.0) + np.abs(self.h).max(initial=0.0))
        h = self.h.copy()
        for node, value in self.clamps.items():
            h[node] = magnitude * value
        return self.replace(h=h, clamps={})

    # ---- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "representation": self.representation,
            "edges": [[int(i), int(j), _num(w)] for (i, j), w in zip(self.edges, self.weights)],
            "h": [_num(x) for x in self.h],
            "clamps": {str(k): v for k, v in self.clamps.items()},
        }
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "IsingModel":
        return cls.from_edges(
            int(d["n"]), (tuple(e) for e in d["edges"]), d["h"],
            {int(k): int(v) for k, v in d.get("clamps", {}).items()},
            d.get("representation", BIPOLAR), d.get("labels"),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "IsingModel":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (self.n == other.n and self.representation == other.representation
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.h, other.h)
                and dict(self.clamps) == dict(other.clamps))

    __hash__ = None

    def __repr__(self) -> str:
        return (f"IsingModel(n={self.n}, edges={self.num_edges}, "
                f"clamped={len(self.clamps)}, {self.representation})")


def _num(x: float):
    x = float(x)
    return int(x) if x.is_integer() else x


# ---- states -----------------------------------------------------------------

def check_state(model: IsingModel, state, representation: str | None = None) -> np.ndarray:
    """Validate a spin vector against ``model`` and return it as an array."""
    s = np.asarray(state)
    if s.shape[-1] != model.n:
        raise ModelError(f"state has {s.shape[-1]} entries, model has {model.n} nodes")
    rep = representation or model.representation
    if rep != model.representation:
        raise ModelError(f"state is {rep} but model is {model.representation}")
    lo, hi = _VALUES[rep]
    if not np.all((s == lo) | (s == hi)):
        raise ModelError(f"state values must be in {{{lo}, {hi}}}")
    return s


def random_state(model: IsingModel, rng: np.random.Generator) -> np.ndarray:
    lo, hi = _VALUES[model.representation]
    s = np.where(rng.random(model.n) < 0.5, lo, hi).astype(np.int8)
    for k, v in model.clamps.items():
        s[k] = v
    return s


def apply_clamps(model: IsingModel, state) -> np.ndarray:
    s = np.array(state, dtype=np.int8)
    for k, v in model.clamps.items():
        s[..., k] = v
    return s


# ---- energy, field, activation -----------------------------------------------

def energy(model: IsingModel, state) -> float | np.ndarray:
    """Energy of one state, or of each row of a 2-D batch of states."""
    s = check_state(model, state).astype(np.float64)
    i, j = model.edges[:, 0], model.edges[:, 1]
    pair = (s[..., i] * s[..., j]) @ model.weights
    return -(pair + s @ model.h)


def local_field(model: IsingModel, state, i: int) -> float:
    """Input ``I_i = sum_j J_ij m_j + h_i`` to node ``i`` (equals ``-dE/dm_i``)."""
    if not 0 <= i < model.n:
        raise ModelError(f"node {i} out of range")
    s = check_state(model, state).astype(np.float64)
    indptr, indices, data = model.csr
    lo, hi = indptr[i], indptr[i + 1]
    return float(data[lo:hi] @ s[indices[lo:hi]] + model.h[i])


def local_fields(model: IsingModel, state) -> np.ndarray:
    s = check_state(model, state).astype(np.float64)
    return model.matrix @ s + model.h


def pbit_update(field, beta: float, u):
    """p-bit activation ``sgn(tanh(beta * field) - u)`` with ``u ~ U(-1, 1)``.

    Returns +1 when ``tanh(beta * field) > u`` and -1 otherwise, so that
    ``P[+1] = (1 + tanh(beta * field)) / 2``.  Works elementwise on arrays.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    out = np.where(np.tanh(beta * np.asarray(field, dtype=np.float64)) > u, 1, -1)
    return int(out) if out.ndim == 0 else out.astype(np.int8)


def tanh_lut(bits: int) -> tuple[np.ndarray, float]:
    """Lookup-table activation with ``bits`` of resolution.

    Inputs are sampled on a grid of step ``2**-(bits-1)`` up to the point where
    tanh saturates within half a step of 1; outputs are rounded to the same
    grid.  Nearest-entry lookup then stays within ``2**-(bits-1)`` of tanh.

    Returns ``(table, step)``; entry ``k`` covers ``x = (k - K) * step`` where
    ``K = len(table) // 2``.
    """
    if bits < 2:
        raise ValueError("LUT needs at least 2 bits")
    step = 2.0 ** -(bits - 1)
    x_max = np.arctanh(1.0 - step / 2)
    half = int(np.ceil(x_max / step))
    x = np.arange(-half, half + 1) * step
    table = np.round(np.tanh(x) / step) * step
    return table, step


def lut_lookup(table: np.ndarray, step: float, x) -> np.ndarray:
    half = len(table) // 2
    k = np.clip(np.rint(np.asarray(x) / step).astype(np.int64) + half, 0, len(table) - 1)
    return table[k]


# ---- exact enumeration --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Distribution:
    """Probabilities over every assignment of the free (unclamped) nodes.

    Row ``k`` of ``states`` is the full spin vector whose free nodes spell
    ``k`` in binary with the lowest-indexed free node as the most significant
    bit.  Clamped nodes hold their clamp values in every row.
    """

    states: np.ndarray
    probs: np.ndarray
    free: np.ndarray
    representation: str = BIPOLAR

    def index_of(self, states) -> np.ndarray:
        return state_index(states, self.free, self.representation)

    def __len__(self) -> int:
        return len(self.probs)


def state_index(states, free, representation: str = BIPOLAR) -> np.ndarray:
    s = np.asarray(states)[..., free]
    bits = (s > 0).astype(np.int64) if representation == BIPOLAR else s.astype(np.int64)
    weights = 1 << np.arange(len(free) - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def enumerate_states(model: IsingModel, limit: int = MAX_ENUM_FREE) -> np.ndarray:
    """All ``2**n_free`` full states in :class:`Distribution` row order."""
    free = model.free_nodes
    f = len(free)
    if f > limit:
        raise ModelError(f"{f} free nodes exceeds the enumeration limit of {limit}")
    codes = np.arange(1 << f, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(f - 1, -1, -1)) & 1
    lo, hi = _VALUES[model.representation]
    states = np.empty((1 << f, model.n), dtype=np.int8)
    for k, v in model.clamps.items():
        states[:, k] = v
    states[:, free] = np.where(bits == 1, hi, lo)
    return states


def effective_beta(model: IsingModel, beta: float) -> float:
    # The binary p-bit activation (1 + tanh(beta*I))/2 equals sigmoid(2*beta*I),
    # so its stationary law weights binary energies with twice the inverse temperature.
    return 2.0 * beta if model.representation == BINARY else beta


def boltzmann_exact(model: IsingModel, beta: float) -> Distribution:
    """Exact Boltzmann distribution ``p ~ exp(-beta E)`` by enumeration."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    states = enumerate_states(model)
    e = np.asarray(energy(model, states), dtype=np.float64)
    logw = -effective_beta(model, beta) * e
    logw -= logw.max()
    p = np.exp(logw)
    p /= p.sum()
    return Distribution(states, p, model.free_nodes.copy(), model.representation)


# ---- representation change -------------------------------------------------------

def to_binary(model: IsingModel) -> IsingModel:
    """Bipolar -> binary: ``J_b = 2 J``, ``h_b = h - J 1``."""
    if model.representation != BIPOLAR:
        raise ModelError("model is not bipolar")
    row = np.asarray(model.matrix.sum(axis=1)).ravel()
    clamps = {k: (v + 1) // 2 for k, v in model.clamps.items()}
    return model.replace(weights=2.0 * model.weights, h=model.h - row, clamps=clamps,
                         representation=BINARY)


def to_bipolar(model: IsingModel) -> IsingModel:
    """Inverse of :func:`to_binary`."""
    if model.representation != BINARY:
        raise ModelError("model is not binary")
    w = model.weights / 2.0
    half = model.replace(weights=w, representation=BINARY)
    row = np.asarray(half.matrix.sum(axis=1)).ravel()
    clamps = {k: 2 * v - 1 for k, v in model.clamps.items()}
    return model.replace(weights=w, h=model.h + row, clamps=clamps, representation=BIPOLAR)


def bitstring(state, nodes=None) -> str:
    """Render spins as a 0/1 string (+1 and 1 both print as ``1``)."""
    s = np.asarray(state)
    if nodes is not None:
        s = s[list(nodes)]
    return "".join("1" if x == 1 else "0" for x in s)
