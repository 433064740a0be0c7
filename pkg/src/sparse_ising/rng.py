"""Random sources for the p-bit update ``sgn(tanh(beta I) - u)``.

Two sources produce the same thing, a ``(sweeps, n)`` block of uniforms in
``[-1, 1)`` with one column per node:

* ``counter``: numpy's Philox counter-based generator (default).
* ``lfsr32``: one 32-bit Fibonacci LFSR per node, as in hardware p-bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

COUNTER = "counter"
LFSR32 = "lfsr32"
TAPS32 = (32, 22, 2, 1)
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def node_seed(seed: int, node: int, width: int = 32) -> int:
    """Nonzero ``width``-bit LFSR seed mixed from ``(seed, node)``."""
    z = splitmix64((int(seed) & _MASK64) ^ splitmix64(node))
    mask = (1 << width) - 1
    while z & mask == 0:
        z = splitmix64(z)
    return z & mask


@dataclass
class Lfsr:
    """Fibonacci LFSR shifting left; the feedback bit is the XOR of the tapped
    bits (tap ``t`` is bit ``t - 1``) and enters at bit 0."""

    state: int
    width: int = 32
    taps: tuple[int, ...] = TAPS32

    def __post_init__(self):
        self.state = int(self.state) & ((1 << self.width) - 1)
        if self.state == 0:
            raise ValueError("LFSR state must be nonzero")
        if max(self.taps) != self.width:
            raise ValueError("highest tap must equal the register width")

    def step(self) -> int:
        s = self.state
        bit = 0
        for t in self.taps:
            bit ^= s >> (t - 1)
        self.state = ((s << 1) | (bit & 1)) & ((1 << self.width) - 1)
        return self.state


def Lfsr32(state: int) -> Lfsr:
    return Lfsr(state, 32, TAPS32)


def lfsr_next(r: Lfsr) -> tuple[Lfsr, float]:
    """Advance one step; returns the register and ``state / 2**width`` in [0, 1)."""
    r.step()
    return r, r.state / float(1 << r.width)


@numba.njit(cache=True)
def _lfsr_fill(states, out, steps):
    # uint64 arithmetic throughout: mixing in signed literals would promote to float
    one = np.uint64(1)
    mask = np.uint64(0xFFFFFFFF)
    s31, s21 = np.uint64(31), np.uint64(21)
    rows, n = out.shape
    for t in range(rows):
        for i in range(n):
            s = states[i]
            for _ in range(steps):
                bit = ((s >> s31) ^ (s >> s21) ^ (s >> one) ^ s) & one
                s = ((s << one) | bit) & mask
            states[i] = s
            out[t, i] = 2.0 * (np.float64(s) / 4294967296.0) - 1.0


class UniformSource:
    """Base class: ``draw(rows)`` returns a ``(rows, n)`` float64 array of
    uniforms in ``[-1, 1)``."""

    kind = ""

    def __init__(self, n: int, seed: int):
        self.n = int(n)
        self.seed = int(seed)

    def draw(self, rows: int) -> np.ndarray:
        raise NotImplementedError


class CounterSource(UniformSource):
    kind = COUNTER

    def __init__(self, n: int, seed: int):
        super().__init__(n, seed)
        self._gen = np.random.Generator(np.random.Philox(seed & _MASK64))

    def draw(self, rows: int) -> np.ndarray:
        u = self._gen.random((rows, self.n))
        u *= 2.0
        u -= 1.0
        return u


class LfsrSource(UniformSource):
    """Independent 32-bit LFSR per node.

    ``steps`` shifts are taken per draw.  With the default single shift,
    successive draws of one node are strongly correlated (the register only
    gains one fresh bit), which is the hardware behavior.
    """

    kind = LFSR32

    def __init__(self, n: int, seed: int, steps: int = 1):
        super().__init__(n, seed)
        self.steps = int(steps)
        self.states = np.array([node_seed(seed, i) for i in range(n)], dtype=np.uint64)

    def draw(self, rows: int) -> np.ndarray:
        out = np.empty((rows, self.n))
        _lfsr_fill(self.states, out, self.steps)
        return out


class GeneratorSource(UniformSource):
    """Adapter around an existing ``numpy.random.Generator``."""

    kind = "generator"

    def __init__(self, n: int, gen: np.random.Generator):
        super().__init__(n, 0)
        self._gen = gen

    def draw(self, rows: int) -> np.ndarray:
        return self._gen.uniform(-1.0, 1.0, (rows, self.n))


def make_source(kind: str, n: int, seed: int, **kw) -> UniformSource:
    if kind == COUNTER:
        return CounterSource(n, seed)
    if kind == LFSR32:
        return LfsrSource(n, seed, **kw)
    raise ValueError(f"unknown rng {kind!r}; use {COUNTER!r} or {LFSR32!r}")


def as_source(rng, n: int) -> UniformSource:
    """Accept a :class:`UniformSource`, a numpy Generator or an integer seed."""
    if isinstance(rng, UniformSource):
        if rng.n != n:
            raise ValueError(f"source has {rng.n} streams, need {n}")
        return rng
    if isinstance(rng, np.random.Generator):
        return GeneratorSource(n, rng)
    return CounterSource(n, int(rng))
