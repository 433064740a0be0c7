"""Download SATLIB uniform random 3-SAT benchmark archives and unpack them.

    python scripts/fetch_satlib.py uf20-91 uf50-218 uf100-430 uf250-1065 --out satlib/

Files are written as ``<out>/<family>/<instance>.cnf``.  Pass the resulting
paths to the CLI (``sparse-ising build-sat path/to/uf100-01.cnf``).
"""
import argparse
import io
import tarfile
import urllib.request
from pathlib import Path

BASE = "https://www.cs.ubc.ca/~hoos/SATLIB/Benchmarks/SAT/RND3SAT/{}.tar.gz"


def fetch(family: str, out: Path) -> int:
    with urllib.request.urlopen(BASE.format(family), timeout=60) as resp:
        data = resp.read()
    dest = out / family
    dest.mkdir(parents=True, exist_ok=True)
    count = 0
    with tarfile.open(fileobj=io.BytesIO(data), mode="r:gz") as tar:
        for member in tar.getmembers():
            if member.isfile() and member.name.endswith(".cnf"):
                (dest / Path(member.name).name).write_bytes(tar.extractfile(member).read())
                count += 1
    return count


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("families", nargs="+")
    ap.add_argument("--out", type=Path, default=Path("satlib"))
    args = ap.parse_args()
    for fam in args.families:
        print(f"{fam}: {fetch(fam, args.out)} files")


if __name__ == "__main__":
    main()
