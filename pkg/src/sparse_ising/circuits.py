"""Gate circuits compiled into Ising models by node fusion.

A :class:`Circuit` is a list of gate instances whose pins point at global
nodes.  Pins that share a node are *fused*: compiling the circuit sums every
gate's couplings and biases over the fused indices.  Two builders produce the
benchmark circuits: an array multiplier (for factoring) and a two-OR-per-clause
3-SAT checker.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .cnf import CnfFormula, satisfied_clauses
from .gates import GateKind, evaluate, gate_matrices
from .model import BIPOLAR, IsingModel, ModelError, energy

log = logging.getLogger(__name__)

FACTORIZER = "factorizer"
SAT = "sat"

# Ground energy of each gate with unit weight.
GATE_GROUND_ENERGY = {
    GateKind.COPY: -1.0,
    GateKind.NOT: -1.0,
    GateKind.AND: -3.0,
    GateKind.OR: -3.0,
    GateKind.FULL_ADDER: -4.0,
}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate instance: ``nodes[p]`` is the global node of pin ``p``.

    ``negated`` lists pins that see the complement of their node.
    """

    kind: GateKind
    nodes: tuple[int, ...]
    negated: tuple[int, ...] = ()
    weight: float = 1.0

    def __post_init__(self):
        kind = GateKind(self.kind)
        nodes = tuple(int(x) for x in self.nodes)
        if len(nodes) != len(kind.pins):
            raise CircuitError(f"{kind.name} has {len(kind.pins)} pins, got {len(nodes)} nodes")
        neg = tuple(sorted(set(int(p) for p in self.negated)))
        if any(not 0 <= p < len(nodes) for p in neg):
            raise CircuitError(f"negated pin out of range in {neg}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "negated", neg)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return gate_matrices(self.kind, self.negated, self.weight)

    @property
    def ground_energy(self) -> float:
        return GATE_GROUND_ENERGY[self.kind] * self.weight

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "nodes": list(self.nodes)}
        if self.negated:
            d["negated"] = list(self.negated)
        if self.weight != 1.0:
            d["weight"] = self.weight
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Gate":
        return cls(GateKind(d["kind"]), tuple(d["nodes"]), tuple(d.get("negated", ())),
                   float(d.get("weight", 1.0)))


@dataclass(frozen=True, eq=False)
class Circuit:
    """Gates over ``n`` global nodes plus clamps, problem metadata and an
    optional planted (known optimal) full state.

    ``schemes`` optionally names the sparsification scheme ("tree" or
    "chain") to use for a node's fusion class.
    """

    n: int
    gates: tuple[Gate, ...]
    clamps: Mapping[int, int] = field(default_factory=dict)
    meta: Mapping = field(default_factory=dict)
    planted: np.ndarray | None = None
    labels: tuple[str, ...] | None = None
    schemes: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        gates = tuple(g if isinstance(g, Gate) else Gate(*g) for g in self.gates)
        for g in gates:
            for x in g.nodes:
                if not 0 <= x < self.n:
                    raise CircuitError(f"gate pin maps to node {x}, circuit has {self.n}")
        clamps = {int(k): int(v) for k, v in dict(self.clamps).items()}
        for k, v in clamps.items():
            if not 0 <= k < self.n or v not in (-1, 1):
                raise CircuitError(f"bad clamp {k}->{v}")
        if self.labels is not None and len(self.labels) != self.n:
            raise CircuitError("labels must have one entry per node")
        planted = self.planted
        if planted is not None:
            planted = np.asarray(planted, dtype=np.int8)
            if planted.shape != (self.n,):
                raise CircuitError("planted state has the wrong length")
            planted.setflags(write=False)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "clamps", dict(sorted(clamps.items())))
        object.__setattr__(self, "planted", planted)
        object.__setattr__(self, "meta", dict(self.meta))
        object.__setattr__(self, "schemes", {int(k): str(v) for k, v in dict(self.schemes).items()})

    @property
    def problem(self) -> str | None:
        return self.meta.get("problem")

    @cached_property
    def fusion_classes(self) -> list[list[tuple[int, int]]]:
        """For every node, the ``(gate index, pin)`` pairs fused into it."""
        classes: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for gi, g in enumerate(self.gates):
            for p, x in enumerate(g.nodes):
                classes[x].append((gi, p))
        return classes

    @cached_property
    def _compiled(self) -> tuple[IsingModel, float]:
        triples = []
        h = np.zeros(self.n)
        offset = 0.0
        for g in self.gates:
            J, hg = g.matrices()
            k = len(g.nodes)
            for p in range(k):
                h[g.nodes[p]] += hg[p]
                for q in range(p + 1, k):
                    if J[p, q] == 0:
                        continue
                    a, b = g.nodes[p], g.nodes[q]
                    if a == b:
                        # m_a * m_a = 1: the coupling becomes a constant
                        offset -= J[p, q]
                        log.info("dropped self-edge on node %d (gate %s), offset %+g",
                                 a, g.kind.name, -J[p, q])
                    else:
                        triples.append((a, b, J[p, q]))
        model = IsingModel.from_edges(self.n, triples, h, self.clamps, BIPOLAR, self.labels)
        return model, offset

    @property
    def self_edge_offset(self) -> float:
        """Constant energy from couplings dropped between fused pins of one gate."""
        return self._compiled[1]

    @property
    def ground_energy_bound(self) -> float:
        """Sum of per-gate ground energies, the circuit's lowest possible energy
        (reached exactly when every gate is in a truth-table state)."""
        return sum(g.ground_energy for g in self.gates) - self.self_edge_offset

    def replace(self, **changes) -> "Circuit":
        kw = dict(n=self.n, gates=self.gates, clamps=self.clamps, meta=self.meta,
                  planted=self.planted, labels=self.labels, schemes=self.schemes)
        kw.update(changes)
        return Circuit(**kw)

    def with_clamps(self, clamps: Mapping[int, int]) -> "Circuit":
        merged = dict(self.clamps)
        for k, v in clamps.items():
            k, v = int(k), int(v)
            if merged.get(k, v) != v:
                raise CircuitError(f"node {k} already clamped to {merged[k]}")
            merged[k] = v
        return self.replace(clamps=merged)

    # ---- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "gates": [g.to_dict() for g in self.gates],
            "clamps": {str(k): v for k, v in self.clamps.items()},
            "meta": self.meta,
            "fusion": [[list(pp) for pp in cls] for cls in self.fusion_classes],
        }
        if self.planted is not None:
            d["planted"] = [int(x) for x in self.planted]
        if self.labels is not None:
            d["labels"] = list(self.labels)
        if self.schemes:
            d["schemes"] = {str(k): v for k, v in self.schemes.items()}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Circuit":
        c = cls(
            int(d["n"]), tuple(Gate.from_dict(g) for g in d["gates"]),
            {int(k): int(v) for k, v in d.get("clamps", {}).items()},
            d.get("meta", {}), d.get("planted"), d.get("labels") and tuple(d["labels"]),
            {int(k): v for k, v in d.get("schemes", {}).items()},
        )
        if "fusion" in d:
            fusion = [[tuple(pp) for pp in cls_] for cls_ in d["fusion"]]
            if fusion != c.fusion_classes:
                raise CircuitError("stored fusion map disagrees with gate wiring")
        return c

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def compose(circuit: Circuit) -> IsingModel:
    """Compile a circuit: sum gate couplings and biases over fused nodes."""
    return circuit._compiled[0]


def simulate(circuit: Circuit, inputs: Mapping[int, int]) -> np.ndarray:
    """Forward Boolean evaluation in gate order.

    ``inputs`` gives 0/1 values for the primary input nodes; clamped nodes that
    no gate drives are taken from the clamps.  Returns the full bipolar state.
    Raises if a gate reads a node nobody has set yet.
    """
    val: dict[int, int] = {int(k): int(v) for k, v in inputs.items()}
    driven = {g.nodes[p] for g in circuit.gates for p in g.kind.outputs}
    for k, v in circuit.clamps.items():
        if k not in driven and k not in val:
            val[k] = (v + 1) // 2
    for g in circuit.gates:
        ins = []
        for p in g.kind.inputs:
            x = g.nodes[p]
            if x not in val:
                raise CircuitError(f"node {x} read before it is set")
            ins.append(val[x] ^ (p in g.negated))
        outs = evaluate(g.kind, *ins)
        for p, o in zip(g.kind.outputs, outs):
            val[g.nodes[p]] = o ^ (p in g.negated)
    missing = [x for x in range(circuit.n) if x not in val]
    if missing:
        raise CircuitError(f"nodes {missing[:5]} are never set")
    return np.array([2 * val[x] - 1 for x in range(circuit.n)], dtype=np.int8)


# ---- factorizer ---------------------------------------------------------------

def build_factorizer(m: int) -> Circuit:
    """Array multiplier for two ``m``-bit factors.

    Row 0 is the AND gate giving the product LSB.  Each later row ``r`` adds the
    partial products ``a_j b_r`` to the running sum with ``m`` full adders; the
    empty adder inputs at row edges are wired to constant-zero nodes, which are
    clamped.  Node counts come out at ``3m^2 + m``.
    """
    if m < 2:
        raise CircuitError("factorizer needs m >= 2")
    labels: list[str] = []

    def node(label: str) -> int:
        labels.append(label)
        return len(labels) - 1

    a = [node(f"a{i}") for i in range(m)]
    b = [node(f"b{i}") for i in range(m)]
    gates: list[Gate] = []

    def and_gate(i: int, j: int) -> int:
        y = node(f"and_a{i}_b{j}")
        gates.append(Gate(GateKind.AND, (a[i], b[j], y)))
        return y

    zeros: list[int] = []
    product = [and_gate(0, 0)]
    sums: list[int] = []
    carries: list[int] = []
    for r in range(1, m):
        row_s, row_c = [], []
        for j in range(m):
            if r == 1:
                if j < m - 1:
                    x = and_gate(j + 1, 0)
                else:
                    x = node(f"zero{len(zeros)}")
                    zeros.append(x)
            else:
                x = sums[j + 1] if j < m - 1 else carries[m - 1]
            y = and_gate(j, r)
            if j == 0:
                cin = node(f"zero{len(zeros)}")
                zeros.append(cin)
            else:
                cin = row_c[j - 1]
            s = node(f"s{r}_{j}")
            cout = node(f"c{r}_{j}")
            gates.append(Gate(GateKind.FULL_ADDER, (x, y, cin, s, cout)))
            row_s.append(s)
            row_c.append(cout)
        product.append(row_s[0])
        sums, carries = row_s, row_c
    product += sums[1:] + [carries[m - 1]]
    assert len(product) == 2 * m

    schemes = {x: "tree" for x in a + b}
    meta = {"problem": FACTORIZER, "m": m, "a": a, "b": b, "p": product, "zero": zeros}
    return Circuit(len(labels), tuple(gates), {z: -1 for z in zeros}, meta, None,
                   tuple(labels), schemes)


def _require(circuit: Circuit, problem: str) -> None:
    if circuit.problem != problem:
        raise CircuitError(f"expected a {problem} circuit, got {circuit.problem!r}")


def _split_factors(P: int, m: int) -> tuple[int, int] | None:
    import sympy

    divs = sympy.divisors(P)
    for B in reversed([d for d in divs if d * d <= P]):
        A = P // B
        if A < (1 << m):
            return A, B
    return None


def factorizer_state(circuit: Circuit, A: int, B: int) -> np.ndarray:
    """Full state of the multiplier with inputs ``A``, ``B`` (LSB first)."""
    _require(circuit, FACTORIZER)
    m = circuit.meta["m"]
    if not (0 <= A < 1 << m and 0 <= B < 1 << m):
        raise CircuitError(f"factors must fit in {m} bits")
    inputs = {x: (A >> i) & 1 for i, x in enumerate(circuit.meta["a"])}
    inputs.update({x: (B >> i) & 1 for i, x in enumerate(circuit.meta["b"])})
    return simulate(circuit, inputs)


def clamp_product(circuit: Circuit, P: int, factors: tuple[int, int] | None = None) -> Circuit:
    """Clamp the product bits to ``P`` and record a planted solution.

    Without explicit ``factors`` the planted state uses the most balanced
    factor pair that fits in ``m`` bits, if any exists.
    """
    _require(circuit, FACTORIZER)
    m = circuit.meta["m"]
    P = int(P)
    if not 0 <= P < 1 << (2 * m):
        raise CircuitError(f"P={P} does not fit in {2 * m} bits")
    pins = circuit.meta["p"]
    clamped = circuit.with_clamps({x: 1 if (P >> i) & 1 else -1 for i, x in enumerate(pins)})
    if factors is None and P > 0:
        factors = _split_factors(P, m)
    planted = None
    if factors is not None:
        A, B = map(int, factors)
        if A * B != P:
            raise CircuitError(f"{A} * {B} != {P}")
        planted = factorizer_state(circuit, A, B)
    meta = dict(clamped.meta, P=P)
    if factors is not None:
        meta["factors"] = [A, B]
    return clamped.replace(meta=meta, planted=planted)


def read_factors(circuit: Circuit, state) -> tuple[int, int, int]:
    """Decode ``(A, B, A*B as read from the product nodes)`` from a state."""
    _require(circuit, FACTORIZER)
    s = np.asarray(state)

    def word(nodes):
        return sum(1 << i for i, x in enumerate(nodes) if s[x] > 0)

    return word(circuit.meta["a"]), word(circuit.meta["b"]), word(circuit.meta["p"])


# ---- 3-SAT --------------------------------------------------------------------

def build_sat(cnf: CnfFormula) -> Circuit:
    """One OR pair per clause: ``(l1 | l2) -> mid`` and ``(mid | l3) -> out``.

    All clause outputs share one node.  Negative literals complement the
    corresponding OR input pin.  Node order: variables, clause middles, output.
    """
    if not isinstance(cnf, CnfFormula):
        raise CircuitError("build_sat needs a CnfFormula")
    v, c = cnf.v, cnf.c
    out = v + c
    gates = []
    for k, (l1, l2, l3) in enumerate(cnf.clauses):
        mid = v + k
        neg1 = tuple(p for p, lit in ((0, l1), (1, l2)) if lit < 0)
        gates.append(Gate(GateKind.OR, (abs(l1) - 1, abs(l2) - 1, mid), neg1))
        gates.append(Gate(GateKind.OR, (mid, abs(l3) - 1, out), (1,) if l3 < 0 else ()))
    labels = tuple([f"x{i + 1}" for i in range(v)] + [f"mid{k}" for k in range(c)] + ["out"])
    meta = {"problem": SAT, "v": v, "c": c, "vars": list(range(v)),
            "mids": list(range(v, v + c)), "out": out,
            "clauses": [list(cl) for cl in cnf.clauses], "name": cnf.name}
    schemes = {x: "chain" for x in range(v)}
    return Circuit(v + c + 1, tuple(gates), {}, meta, None, labels, schemes)


def clamp_output_true(circuit: Circuit) -> Circuit:
    _require(circuit, SAT)
    return circuit.with_clamps({circuit.meta["out"]: 1})


def circuit_cnf(circuit: Circuit) -> CnfFormula:
    _require(circuit, SAT)
    return CnfFormula(circuit.meta["v"], tuple(map(tuple, circuit.meta["clauses"])),
                      circuit.meta.get("name", ""))


def sat_state(circuit: Circuit, assignment: Sequence[int]) -> np.ndarray:
    """Full circuit state for a variable assignment (0/1 or +-1 values)."""
    _require(circuit, SAT)
    bits = [1 if x > 0 else 0 for x in assignment]
    if len(bits) != circuit.meta["v"]:
        raise CircuitError("assignment length differs from variable count")
    return simulate(circuit, dict(zip(circuit.meta["vars"], bits)))


def plant_assignment(circuit: Circuit, assignment: Sequence[int]) -> Circuit:
    """Record a satisfying assignment as the planted state."""
    state = sat_state(circuit, assignment)
    if satisfied_clauses(circuit_cnf(circuit), state[circuit.meta["vars"]]) != circuit.meta["c"]:
        raise CircuitError("assignment does not satisfy the formula")
    return circuit.replace(planted=state)


def circuit_satisfied(circuit: Circuit, state):
    """Satisfied clause count of the variable nodes of a fused SAT state
    (one count per row for a batch)."""
    s = np.asarray(state)
    out = satisfied_clauses(circuit_cnf(circuit), s[..., circuit.meta["vars"]])
    return int(out) if np.ndim(out) == 0 else out


def planted_energy(circuit: Circuit) -> float:
    if circuit.planted is None:
        raise CircuitError("circuit has no planted state")
    return float(energy(compose(circuit), circuit.planted))
