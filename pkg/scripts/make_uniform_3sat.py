"""Generate satisfiable uniform random 3-SAT instances in DIMACS format.

Each clause draws three distinct variables and independent signs; formulas
are kept only if pycosat finds a model.  The defaults reproduce the uf50
family size (50 variables, 218 clauses).

    python scripts/make_uniform_3sat.py --v 50 --c 218 --count 10 --out src/sparse_ising/data/satlib
"""
import argparse
import random
from pathlib import Path

import pycosat


def random_formula(v: int, c: int, rng: random.Random) -> list[list[int]]:
    clauses = []
    for _ in range(c):
        vs = rng.sample(range(1, v + 1), 3)
        clauses.append([x if rng.random() < 0.5 else -x for x in vs])
    return clauses


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--v", type=int, default=50)
    ap.add_argument("--c", type=int, default=218)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--prefix", default=None)
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args()
    rng = random.Random(args.seed)
    prefix = args.prefix or f"gen-uf{args.v}"
    args.out.mkdir(parents=True, exist_ok=True)
    made = tries = 0
    while made < args.count:
        tries += 1
        clauses = random_formula(args.v, args.c, rng)
        if pycosat.solve(clauses) == "UNSAT":
            continue
        made += 1
        name = f"{prefix}-{made:02d}"
        lines = [f"c {name}: uniform random 3-SAT, satisfiable (seed {args.seed})",
                 f"p cnf {args.v} {args.c}"]
        lines += [" ".join(map(str, cl)) + " 0" for cl in clauses]
        (args.out / f"{name}.cnf").write_text("\n".join(lines) + "\n")
    print(f"wrote {made} instances after {tries} draws")


if __name__ == "__main__":
    main()
