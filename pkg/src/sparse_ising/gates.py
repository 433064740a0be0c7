"""Invertible probabilistic gates: COPY, NOT, AND, OR and the full adder.

Each gate is a tiny bipolar Ising model whose ground states are exactly the
rows of the gate's truth table.  AND/OR share one coupling matrix and differ
only in the sign of the bias; OR is AND with every pin complemented.
"""
from __future__ import annotations

import enum
import itertools

import numpy as np

from .model import BIPOLAR, IsingModel, ModelError, energy, enumerate_states


class GateKind(enum.Enum):
    COPY = "COPY"
    NOT = "NOT"
    AND = "AND"
    OR = "OR"
    FULL_ADDER = "FULL_ADDER"

    @property
    def pins(self) -> tuple[str, ...]:
        return _PINS[self]

    @property
    def inputs(self) -> tuple[int, ...]:
        return _INPUTS[self]

    @property
    def outputs(self) -> tuple[int, ...]:
        return tuple(p for p in range(len(self.pins)) if p not in self.inputs)


_PINS = {
    GateKind.COPY: ("a", "y"),
    GateKind.NOT: ("a", "y"),
    GateKind.AND: ("a", "b", "y"),
    GateKind.OR: ("a", "b", "y"),
    GateKind.FULL_ADDER: ("a", "b", "cin", "s", "cout"),
}
_INPUTS = {
    GateKind.COPY: (0,),
    GateKind.NOT: (0,),
    GateKind.AND: (0, 1),
    GateKind.OR: (0, 1),
    GateKind.FULL_ADDER: (0, 1, 2),
}

_J_AND_OR = np.array([[0, -1, 2],
                      [-1, 0, 2],
                      [2, 2, 0]], dtype=np.float64)

_MATRICES = {
    GateKind.COPY: (np.array([[0, 1], [1, 0]], dtype=np.float64), np.zeros(2)),
    GateKind.NOT: (np.array([[0, -1], [-1, 0]], dtype=np.float64), np.zeros(2)),
    GateKind.AND: (_J_AND_OR, np.array([1.0, 1.0, -2.0])),
    GateKind.OR: (_J_AND_OR, np.array([-1.0, -1.0, 2.0])),
    GateKind.FULL_ADDER: (
        np.array([[0, -1, -1, 1, 2],
                  [-1, 0, -1, 1, 2],
                  [-1, -1, 0, 1, 2],
                  [1, 1, 1, 0, -2],
                  [2, 2, 2, -2, 0]], dtype=np.float64),
        np.zeros(5),
    ),
}


def gate_matrices(kind: GateKind, negated=(), weight: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(J, h)`` of a gate, with optional complemented pins and scale."""
    J, h = _MATRICES[GateKind(kind)]
    J, h = J.copy(), h.copy()
    for p in negated:
        J[p, :] *= -1
        J[:, p] *= -1
        h[p] *= -1
    return weight * J, weight * h


def gate_model(kind: GateKind) -> IsingModel:
    J, h = gate_matrices(kind)
    return IsingModel.from_dense(J, h, labels=GateKind(kind).pins)


def _evaluate(kind: GateKind, inputs: tuple[int, ...]) -> tuple[int, ...]:
    if kind is GateKind.COPY:
        return inputs
    if kind is GateKind.NOT:
        return (1 - inputs[0],)
    if kind is GateKind.AND:
        return (inputs[0] & inputs[1],)
    if kind is GateKind.OR:
        return (inputs[0] | inputs[1],)
    total = sum(inputs)
    return (total & 1, total >> 1)


def truth_table(kind: GateKind) -> set[str]:
    """Truth-table rows as binary strings in pin order."""
    kind = GateKind(kind)
    rows = set()
    for ins in itertools.product((0, 1), repeat=len(kind.inputs)):
        rows.add("".join(map(str, ins + _evaluate(kind, ins))))
    return rows


def evaluate(kind: GateKind, *inputs: int) -> tuple[int, ...]:
    """Forward Boolean evaluation of a gate on 0/1 inputs."""
    kind = GateKind(kind)
    if len(inputs) != len(kind.inputs):
        raise ValueError(f"{kind.name} takes {len(kind.inputs)} inputs")
    return _evaluate(kind, tuple(int(x) for x in inputs))


def ground_states(model: IsingModel, atol: float = 1e-9) -> np.ndarray:
    """Every state attaining the minimum energy, in enumeration order.

    Rows hold full spin vectors (clamped nodes included).  With the integer
    weights used throughout, energies are exact and ``atol`` only guards
    against non-integral user weights.
    """
    states = enumerate_states(model)
    e = np.asarray(energy(model, states))
    return states[np.abs(e - e.min()) <= atol]


def negate_pin(model: IsingModel, pin: int) -> IsingModel:
    """Complement one node: flip the sign of its couplings and bias."""
    if model.representation != BIPOLAR:
        raise ModelError("negate_pin needs a bipolar model")
    if not 0 <= pin < model.n:
        raise ModelError(f"pin {pin} out of range")
    touch = (model.edges[:, 0] == pin) | (model.edges[:, 1] == pin)
    w = np.where(touch, -model.weights, model.weights)
    h = model.h.copy()
    h[pin] = -h[pin]
    clamps = dict(model.clamps)
    if pin in clamps:
        clamps[pin] = -clamps[pin]
    return model.replace(weights=w, h=h, clamps=clamps)
