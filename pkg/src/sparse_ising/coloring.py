"""DSATUR graph coloring into conditionally independent update blocks, plus
graph density metrics."""
from __future__ import annotations

import csv
import heapq
import io
import os
from dataclasses import dataclass

import numpy as np

from .model import IsingModel, ModelError


@dataclass(frozen=True, eq=False)
class Coloring:
    """``colors[i]`` is the color of node ``i``; clamped nodes get ``-1`` and
    belong to no block."""

    colors: np.ndarray

    @property
    def num_colors(self) -> int:
        return int(self.colors.max()) + 1 if self.colors.size and self.colors.max() >= 0 else 0

    @property
    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.colors == c) for c in range(self.num_colors)]

    @property
    def order(self) -> np.ndarray:
        """Block-major update order: every node of block 0, then block 1, and so on."""
        return np.concatenate(self.blocks) if self.num_colors else np.zeros(0, np.int64)

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "color"])
        w.writerows((i, int(c)) for i, c in enumerate(self.colors))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {"colors": self.colors.tolist()}


def dsatur(model: IsingModel) -> Coloring:
    """Greedy DSATUR coloring of the unclamped nodes.

    The next node is the uncolored one with the most distinct neighbor colors;
    ties go to the larger degree (counted among unclamped neighbors), then the
    smaller index.  Each node takes the smallest color unused by its neighbors.
    """
    indptr, indices, _ = model.csr
    n = model.n
    clamped = model.clamped_mask
    colors = np.full(n, -1, dtype=np.int64)
    free_deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        nb = indices[indptr[i]:indptr[i + 1]]
        free_deg[i] = np.count_nonzero(~clamped[nb])
    seen: list[set[int]] = [set() for _ in range(n)]
    heap = [(0, -int(free_deg[i]), i) for i in range(n) if not clamped[i]]
    heapq.heapify(heap)
    while heap:
        negsat, _, i = heapq.heappop(heap)
        if colors[i] >= 0 or -negsat != len(seen[i]):
            continue  # stale entry
        c = 0
        while c in seen[i]:
            c += 1
        colors[i] = c
        for j in indices[indptr[i]:indptr[i + 1]]:
            if colors[j] < 0 and not clamped[j] and c not in seen[j]:
                seen[j].add(c)
                heapq.heappush(heap, (-len(seen[j]), -int(free_deg[j]), int(j)))
    return Coloring(colors)


def validate(model: IsingModel, coloring: Coloring) -> bool:
    """True iff every unclamped node is colored and no edge joins equal colors."""
    col = np.asarray(coloring.colors)
    if col.shape != (model.n,):
        raise ModelError("coloring size differs from model")
    free = ~model.clamped_mask
    if np.any(col[free] < 0):
        return False
    i, j = model.edges[:, 0], model.edges[:, 1]
    both = (col[i] >= 0) & (col[j] >= 0)
    return not np.any(both & (col[i] == col[j]))


def density(model: IsingModel) -> float:
    """Fraction of possible node pairs that are coupled: ``2|E| / (n^2 - n)``."""
    if model.n < 2:
        raise ModelError("density needs at least two nodes")
    return 2.0 * model.num_edges / (model.n * model.n - model.n)


def density_max(k: int, n: int) -> float:
    """Upper bound ``k / (n - 1)`` on the density of a graph with degree at most ``k``."""
    if n < 2:
        raise ModelError("density needs at least two nodes")
    return k / (n - 1)
