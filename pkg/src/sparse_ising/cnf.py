"""3-SAT formulas and the DIMACS CNF format."""
from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


class CnfError(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    v: int
    clauses: tuple[tuple[int, int, int], ...]
    name: str = ""

    def __post_init__(self):
        clauses = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3:
                raise CnfError(f"clause {c} does not have exactly three literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.v:
                    raise CnfError(f"literal {lit} outside 1..{self.v}")
        object.__setattr__(self, "clauses", clauses)

    @property
    def c(self) -> int:
        return len(self.clauses)

    def literal_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """``(vars, positive)`` arrays of shape ``(c, 3)``; ``vars`` is 0-based."""
        lits = np.array(self.clauses, dtype=np.int64).reshape(-1, 3)
        return np.abs(lits) - 1, lits > 0


def satisfied_clauses(cnf: CnfFormula, assignment) -> int:
    """Number of clauses with at least one true literal.

    ``assignment`` holds one truth value per variable (bool, 0/1 or +-1).
    """
    a = np.asarray(assignment)
    if a.shape[-1] != cnf.v:
        raise CnfError(f"assignment has {a.shape[-1]} values, formula has {cnf.v} variables")
    truth = a > 0
    var, pos = cnf.literal_arrays()
    lit_true = truth[..., var] == pos
    return np.sum(lit_true.any(axis=-1), axis=-1)


def parse_dimacs(text: str, name: str = "") -> CnfFormula:
    v = c = None
    literals: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break  # SATLIB end marker
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise CnfError(f"bad problem line: {line!r}")
            v, c = int(parts[2]), int(parts[3])
            continue
        if v is None:
            raise CnfError("clause before the problem line")
        literals.extend(int(x) for x in line.split())
    if v is None:
        raise CnfError("missing 'p cnf' header")
    clauses, cur = [], []
    for lit in literals:
        if lit == 0:
            if cur:
                clauses.append(tuple(cur))
            cur = []
        else:
            cur.append(lit)
    if cur:
        raise CnfError("last clause is not terminated by 0")
    if len(clauses) != c:
        raise CnfError(f"header declares {c} clauses, found {len(clauses)}")
    return CnfFormula(v, tuple(clauses), name)


def read_dimacs(path: str | os.PathLike) -> CnfFormula:
    path = Path(path)
    return parse_dimacs(path.read_text(), path.stem)


def format_dimacs(cnf: CnfFormula) -> str:
    lines = [f"c {cnf.name}"] if cnf.name else []
    lines.append(f"p cnf {cnf.v} {cnf.c}")
    lines += [" ".join(map(str, cl)) + " 0" for cl in cnf.clauses]
    return "\n".join(lines) + "\n"


def write_dimacs(cnf: CnfFormula, path: str | os.PathLike) -> None:
    Path(path).write_text(format_dimacs(cnf))


def bundled_instances() -> list[str]:
    root = resources.files("sparse_ising") / "data" / "satlib"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cnf"))


def load_bundled(name: str) -> CnfFormula:
    """Load one of the CNF files shipped with the package, e.g. ``"uf20-01"``."""
    ref = resources.files("sparse_ising") / "data" / "satlib" / f"{name}.cnf"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled instance {name!r}; have {bundled_instances()}")
    return parse_dimacs(ref.read_text(), name)
