"""Degree-bounded sparsification by node splitting.

A node whose degree exceeds ``k`` is replaced by replicas joined by
ferromagnetic COPY couplings ``J_T``.  Each replica keeps a share of the
original node's edges, so every ground state of the sparse model has all
replicas equal and projects onto a ground state of the original.

Replicas of one original node always occupy a contiguous index range, in
original-node order, with the group's root replica first.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuits import FACTORIZER, SAT, Circuit, Gate, compose
from .gates import GateKind
from .model import BIPOLAR, IsingModel, ModelError

TREE = "tree"
CHAIN = "chain"


class SparsifyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparsifyPlan:
    """How a sparse model relates to the model it was split from.

    ``node_of[i]`` is the original node of sparse node ``i`` and is
    nondecreasing, so ``start[x]:start[x+1]`` are the replicas of ``x``.
    """

    k: int
    j_t: float
    node_of: np.ndarray
    copy_edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        node_of = np.asarray(self.node_of, dtype=np.int64)
        if node_of.size and np.any(np.diff(node_of) < 0):
            raise SparsifyError("replicas must be contiguous and in original order")
        node_of.setflags(write=False)
        object.__setattr__(self, "node_of", node_of)
        object.__setattr__(self, "copy_edges", tuple((int(a), int(b), float(w))
                                                     for a, b, w in self.copy_edges))

    @property
    def n_fused(self) -> int:
        return int(self.node_of[-1]) + 1 if self.node_of.size else 0

    @property
    def n_sparse(self) -> int:
        return len(self.node_of)

    @property
    def start(self) -> np.ndarray:
        return np.searchsorted(self.node_of, np.arange(self.n_fused + 1))

    def replicas(self, x: int) -> list[int]:
        st = self.start
        return list(range(st[x], st[x + 1]))

    @property
    def split(self) -> dict[int, list[int]]:
        """Original node -> replica list, for nodes that were actually split."""
        st = self.start
        return {x: list(range(st[x], st[x + 1]))
                for x in range(self.n_fused) if st[x + 1] - st[x] > 1}

    @property
    def is_identity(self) -> bool:
        return self.n_sparse == self.n_fused

    def to_dict(self) -> dict:
        return {"k": self.k, "j_t": self.j_t, "node_of": self.node_of.tolist(),
                "copy_edges": [list(e) for e in self.copy_edges]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SparsifyPlan":
        return cls(int(d["k"]), float(d["j_t"]), d["node_of"], tuple(map(tuple, d["copy_edges"])))


def project(state, plan: SparsifyPlan):
    """Majority vote over each replica group.

    Returns ``(fused_state, agree)``; ``agree`` is true when every group is
    unanimous.  An even split takes the value of the group's lowest-indexed
    replica.  Works on one state or on a batch (rows).
    """
    s = np.asarray(state)
    if s.shape[-1] != plan.n_sparse:
        raise SparsifyError(f"state has {s.shape[-1]} entries, plan expects {plan.n_sparse}")
    st = plan.start[:-1]
    counts = np.diff(plan.start)
    if plan.n_fused == 0:
        return s[..., :0], True
    total = np.add.reduceat(s.astype(np.int64), st, axis=-1)
    first = s[..., st]
    out = np.where(total > 0, 1, np.where(total < 0, -1, first)).astype(s.dtype)
    agree = np.all(np.abs(total) == counts, axis=-1)
    return out, (bool(agree) if np.ndim(agree) == 0 else agree)


def lift(state, plan: SparsifyPlan) -> np.ndarray:
    """Copy every original value onto all of its replicas."""
    s = np.asarray(state)
    if s.shape[-1] != plan.n_fused:
        raise SparsifyError(f"state has {s.shape[-1]} entries, plan expects {plan.n_fused}")
    return s[..., plan.node_of]


def _f(m: int, k: int) -> int:
    total, a = 0, m
    while a > 1:
        a = -(-a // (k - 1))
        total += a
    return total


def predict_sparse_count(problem, k: int) -> int:
    """Node count after sparsification for the two benchmark circuit families.

    ``problem`` is a :class:`Circuit` or a tuple ``("factorizer", m)`` /
    ``("sat", c)``.  The factorizer count is ``8m^2 - 5m + 2m f(m, k)``; the
    3-SAT count ``ceil(9c/2)`` is for the ``k = 4`` scheme.
    """
    if isinstance(problem, Circuit):
        kind = problem.problem
        size = problem.meta.get("m") if kind == FACTORIZER else problem.meta.get("c")
    else:
        kind, size = problem
    if kind == FACTORIZER:
        m = int(size)
        return 8 * m * m - 5 * m + 2 * m * _f(m, k)
    if kind == SAT:
        if k != 4:
            raise SparsifyError("the 3-SAT count formula is defined for k = 4")
        return -(-9 * int(size) // 2)
    raise SparsifyError(f"unsupported problem {kind!r}")


# ---- circuit path ---------------------------------------------------------------

@dataclass
class _Group:
    """Replicas of one original node.  ``pins[r]`` lists the gate pins held by
    replica ``r`` (empty for pure hub replicas); ``links`` are COPY pairs of
    local replica indices."""

    pins: list[list[tuple[int, int]]]
    links: list[tuple[int, int]]


def _pin_degree(circuit: Circuit, pin: tuple[int, int]) -> int:
    # Worst case: every other pin of the gate lands on a distinct node.
    return len(circuit.gates[pin[0]].nodes) - 1


def _split_clamped(circuit, pins, k) -> _Group:
    groups, cur, load = [], [], 0
    for pin in pins:
        d = _pin_degree(circuit, pin)
        if d > k:
            raise SparsifyError(f"k={k} too small: a clamped pin has {d} neighbors")
        if load + d > k:
            groups.append(cur)
            cur, load = [], 0
        cur.append(pin)
        load += d
    groups.append(cur)
    return _Group(groups, [])


def _split_chain(circuit, pins, k) -> _Group:
    L = len(pins)
    for r, pin in enumerate(pins):
        links = (r > 0) + (r < L - 1)
        if _pin_degree(circuit, pin) + links > k:
            raise SparsifyError(f"k={k} too small for a copy chain")
    return _Group([[p] for p in pins], [(r, r + 1) for r in range(L - 1)])


def _split_tree(circuit, pins, k) -> _Group:
    if k < 3:
        raise SparsifyError("copy trees need k >= 3")
    for pin in pins:
        if _pin_degree(circuit, pin) + 1 > k:
            raise SparsifyError(f"k={k} too small for a copy tree leaf")
    arity = k - 1
    # Build levels bottom-up, then number top-down so the root comes first.
    levels = [len(pins)]
    while levels[-1] > 1:
        levels.append(-(-levels[-1] // arity))
    levels.reverse()  # levels[0] == 1 is the root, levels[-1] the leaves
    offsets = np.concatenate([[0], np.cumsum(levels)])
    links = []
    for lv in range(1, len(levels)):
        for c in range(levels[lv]):
            links.append((int(offsets[lv - 1]) + c // arity, int(offsets[lv]) + c))
    reps = [[] for _ in range(int(offsets[-1]) - len(pins))] + [[p] for p in pins]
    return _Group(reps, links)


def _build_nodes(groups: list[_Group]) -> tuple[dict, np.ndarray, list[int]]:
    where, node_of, base = {}, [], []
    for x, g in enumerate(groups):
        base.append(len(node_of))
        for r, pins in enumerate(g.pins):
            for pin in pins:
                where[pin] = len(node_of)
            node_of.append(x)
    return where, np.array(node_of, dtype=np.int64), base


def _degrees(circuit: Circuit, groups: list[_Group]) -> tuple[np.ndarray, np.ndarray]:
    where, node_of, base = _build_nodes(groups)
    nbrs = [set() for _ in range(len(node_of))]
    for gi, g in enumerate(circuit.gates):
        ids = [where[(gi, p)] for p in range(len(g.nodes))]
        for a in ids:
            for b in ids:
                if a != b:
                    nbrs[a].add(b)
    for x, g in enumerate(groups):
        for r1, r2 in g.links:
            nbrs[base[x] + r1].add(base[x] + r2)
            nbrs[base[x] + r2].add(base[x] + r1)
    return np.array([len(s) for s in nbrs], dtype=np.int64), node_of


def sparsify_circuit(circuit: Circuit, k: int, j_t: float = 1.0) -> tuple[Circuit, SparsifyPlan]:
    """Split fusion classes until no node has more than ``k`` neighbors.

    Classes are split only when their node exceeds ``k``.  Clamped classes
    are regrouped without COPY couplings, since their replicas never move.
    Other classes use the node's scheme from ``circuit.schemes``; without one,
    two-pin classes become a single COPY pair and larger ones a copy tree.
    """
    if k < 3:
        raise SparsifyError("k must be at least 3")
    if j_t <= 0:
        raise SparsifyError("J_T must be positive")
    classes = circuit.fusion_classes
    groups = [_Group([list(c)], []) for c in classes]
    done = [False] * circuit.n
    while True:
        deg, node_of = _degrees(circuit, groups)
        over = np.unique(node_of[deg > k])
        todo = [int(x) for x in over if not done[x]]
        if not todo:
            break
        for x in todo:
            pins = classes[x]
            if x in circuit.clamps:
                groups[x] = _split_clamped(circuit, pins, k)
            else:
                scheme = circuit.schemes.get(x, CHAIN if len(pins) == 2 else TREE)
                if len(pins) < 2:
                    raise SparsifyError(f"k={k} too small: node {x} has degree above k "
                                        "and a single pin")
                groups[x] = (_split_chain if scheme == CHAIN else _split_tree)(circuit, pins, k)
            done[x] = True
    deg, node_of = _degrees(circuit, groups)
    if deg.size and deg.max() > k:
        bad = int(np.argmax(deg))
        raise SparsifyError(f"k={k} too small: node of original {node_of[bad]} keeps "
                            f"degree {deg[bad]}")

    where, node_of, base = _build_nodes(groups)
    gates = [Gate(g.kind, tuple(where[(gi, p)] for p in range(len(g.nodes))), g.negated, g.weight)
             for gi, g in enumerate(circuit.gates)]
    copy_edges = []
    for x, g in enumerate(groups):
        for r1, r2 in g.links:
            a, b = base[x] + r1, base[x] + r2
            copy_edges.append((a, b, j_t))
            gates.append(Gate(GateKind.COPY, (a, b), (), j_t))
    clamps = {int(i): circuit.clamps[int(x)] for i, x in enumerate(node_of)
              if int(x) in circuit.clamps}
    labels = None
    if circuit.labels is not None:
        labels, seen = [], {}
        for x in node_of:
            r = seen.get(x, 0)
            seen[x] = r + 1
            labels.append(circuit.labels[x] if r == 0 else f"{circuit.labels[x]}'{r}")
    plan = SparsifyPlan(k, j_t, node_of, tuple(copy_edges))
    planted = None if circuit.planted is None else lift(circuit.planted, plan)
    meta = dict(circuit.meta, sparse={"k": k, "j_t": j_t})
    sparse = Circuit(len(node_of), tuple(gates), clamps, meta, planted,
                     None if labels is None else tuple(labels))
    return sparse, plan


# ---- generic model path ------------------------------------------------------------

def _payload_tree(deg: int, k: int) -> tuple[list[int], list[tuple[int, int]]]:
    """Share ``deg`` payload edges among replicas arranged as a tree.

    Returns the payload count per replica (root first, breadth-first order) and
    the parent/child links.
    """
    loads, links, parent = [], [], []
    queue = deque([(None, k)])
    left = deg
    while queue:
        par, free = queue.popleft()
        me = len(loads)
        loads.append(0)
        parent.append(par)
        if par is not None:
            links.append((par, me))
        if left <= free:
            loads[me] = left
            left = 0
            continue
        c = 1 if free <= 3 else 2
        loads[me] = free - c
        left -= free - c
        for _ in range(c):
            queue.append((me, k - 1))
    # drop leaves that received no payload
    keep = [True] * len(loads)
    changed = True
    while changed:
        changed = False
        has_child = {p for p, ch in links if keep[ch]}
        for r in range(len(loads) - 1, 0, -1):
            if keep[r] and loads[r] == 0 and r not in has_child:
                keep[r] = False
                changed = True
    remap = np.cumsum(keep) - 1
    loads = [l for l, kp in zip(loads, keep) if kp]
    links = [(int(remap[p]), int(remap[c])) for p, c in links if keep[c]]
    return loads, links


def sparsify_model(model: IsingModel, k: int, j_t: float = 1.0) -> tuple[IsingModel, SparsifyPlan]:
    """Sparsify an arbitrary model: each node above ``k`` becomes a copy tree
    whose replicas share its edges; the bias stays on the root replica.
    Clamped nodes are split into clamped groups without COPY couplings."""
    if k < 3:
        raise SparsifyError("k must be at least 3")
    if j_t <= 0:
        raise SparsifyError("J_T must be positive")
    if model.representation != BIPOLAR:
        raise SparsifyError("convert binary models with to_bipolar before sparsifying")
    indptr, indices, _ = model.csr
    deg = model.degree
    # slot_of[x] lists, per incident neighbor (CSR order), the local replica index
    local_reps, local_links, slot_of = [], [], []
    for x in range(model.n):
        d = int(deg[x])
        if d <= k:
            loads, links = [d], []
        elif x in model.clamps:
            loads = [k] * (d // k) + ([d % k] if d % k else [])
            links = []
        else:
            loads, links = _payload_tree(d, k)
        local_reps.append(len(loads))
        local_links.append(links)
        slot_of.append(np.repeat(np.arange(len(loads)), loads))
    base = np.concatenate([[0], np.cumsum(local_reps)]).astype(np.int64)
    node_of = np.repeat(np.arange(model.n), local_reps)
    pos = {}
    for x in range(model.n):
        for t, y in enumerate(indices[indptr[x]:indptr[x + 1]]):
            pos[(x, int(y))] = base[x] + slot_of[x][t]
    triples = [(pos[(i, j)], pos[(j, i)], w) for (i, j), w in zip(model.edges.tolist(), model.weights)]
    copy_edges = []
    for x in range(model.n):
        for a, b in local_links[x]:
            copy_edges.append((int(base[x] + a), int(base[x] + b), j_t))
    h = np.zeros(len(node_of))
    h[base[:-1]] = model.h
    clamps = {int(i): model.clamps[int(x)] for i, x in enumerate(node_of) if int(x) in model.clamps}
    sparse = IsingModel.from_edges(len(node_of), triples + copy_edges, h, clamps,
                                   model.representation)
    return sparse, SparsifyPlan(k, j_t, node_of, tuple(copy_edges))


def sparsify(problem, k: int, j_t: float = 1.0) -> tuple[IsingModel, SparsifyPlan]:
    """Sparsify a :class:`Circuit` (per-pin splitting) or a bare model."""
    if isinstance(problem, Circuit):
        sparse, plan = sparsify_circuit(problem, k, j_t)
        return compose(sparse), plan
    if isinstance(problem, IsingModel):
        return sparsify_model(problem, k, j_t)
    raise ModelError("sparsify needs a Circuit or an IsingModel")


def max_degree(model: IsingModel) -> int:
    return int(model.degree.max()) if model.n else 0
