"""Benchmark problem instances: planted semiprimes and CNF files."""
from __future__ import annotations

import os
import random
from dataclasses import dataclass

import sympy

from .cnf import CnfFormula, load_bundled, read_dimacs

FACTORIZATION = "factorization"
SAT_KIND = "sat"


@dataclass(frozen=True)
class Instance:
    kind: str
    id: str
    P: int | None = None
    A: int | None = None
    B: int | None = None
    cnf: CnfFormula | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind == FACTORIZATION:
            if None in (self.P, self.A, self.B) or self.A * self.B != self.P:
                raise ValueError("factorization instance needs P = A * B")
            if not (sympy.isprime(self.A) and sympy.isprime(self.B)):
                raise ValueError("factors must be prime")
        elif self.kind == SAT_KIND:
            if self.cnf is None:
                raise ValueError("sat instance needs a formula")
        else:
            raise ValueError(f"unknown instance kind {self.kind!r}")

    @property
    def bits(self) -> int:
        return self.P.bit_length() if self.P is not None else 0

    @property
    def m(self) -> int:
        """Bits per factor of the multiplier that hosts this instance."""
        return max(self.A.bit_length(), self.B.bit_length(), (self.bits + 1) // 2)

    def to_dict(self) -> dict:
        if self.kind == FACTORIZATION:
            return {"kind": self.kind, "id": self.id, "P": self.P, "A": self.A, "B": self.B}
        return {"kind": self.kind, "id": self.id, "path": self.path, "v": self.cnf.v,
                "c": self.cnf.c}


def semiprime_instance(A: int, B: int) -> Instance:
    A, B = int(A), int(B)
    return Instance(FACTORIZATION, f"P{A * B}", A * B, A, B)


def gen_semiprime(bits: int, seed: int) -> Instance:
    """Random ``bits``-bit semiprime ``P = A * B`` with ``A``, ``B`` prime and
    ``bits / 2`` bits each.  Pairs are redrawn until ``P`` has its top bit set."""
    if bits < 4 or bits % 2:
        raise ValueError("bits must be even and at least 4")
    half = bits // 2
    rng = random.Random(seed)
    lo, hi = 1 << (half - 1), (1 << half) - 1
    while True:
        A = rng.randint(lo, hi)
        B = rng.randint(lo, hi)
        if not (sympy.isprime(A) and sympy.isprime(B)):
            continue
        if (A * B).bit_length() == bits:
            A, B = max(A, B), min(A, B)
            return semiprime_instance(A, B)


def cnf_instance(source: str | os.PathLike) -> Instance:
    """A SAT instance from a DIMACS path or the name of a bundled file."""
    if os.path.exists(source):
        cnf = read_dimacs(source)
        return Instance(SAT_KIND, cnf.name, cnf=cnf, path=os.fspath(source))
    cnf = load_bundled(str(source))
    return Instance(SAT_KIND, cnf.name, cnf=cnf, path=f"bundled:{source}")
