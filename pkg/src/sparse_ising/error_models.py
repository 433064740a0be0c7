"""Inexact Gibbs sampling through per-connection error masks.

A mask flags directed entries ``(i <- j)`` of the coupling graph, i.e. CSR
entries of the symmetric adjacency.  Under the *single* mask a failing entry
reads ``-m_j`` instead of ``m_j``; under the *double* mask a failing entry
reads the value ``m_j`` had at the start of the sweep instead of its current
value.  With every entry failing, the double mask becomes the fully parallel
update.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .model import IsingModel, ModelError, boltzmann_exact, check_state, MAX_ENUM_FREE
from .sampler import SEQUENTIAL, SamplerConfig, cosh_product, sample_counts

SINGLE = "single"
DOUBLE = "double"


class MaskError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ErrorMask:
    """``failing[p]`` flags CSR entry ``p`` of ``model.csr`` as failing."""

    kind: str
    failing: np.ndarray

    def __post_init__(self):
        if self.kind not in (SINGLE, DOUBLE):
            raise MaskError(f"mask kind must be {SINGLE!r} or {DOUBLE!r}")
        f = np.asarray(self.failing, dtype=bool)
        f.setflags(write=False)
        object.__setattr__(self, "failing", f)

    @property
    def error_rate(self) -> float:
        return float(self.failing.mean()) if self.failing.size else 0.0

    def kernel_flags(self) -> tuple[np.ndarray, int]:
        """Per-entry flags and kernel mode for :func:`run_sweeps`."""
        if self.kind == SINGLE:
            return np.where(self.failing, -1, 1).astype(np.int8), K.SIGNED
        return (~self.failing).astype(np.int8), K.DOUBLE


def _check(model: IsingModel, mask: ErrorMask, kind: str) -> None:
    if mask.kind != kind:
        raise MaskError(f"expected a {kind} mask, got {mask.kind}")
    if mask.failing.shape != (len(model.csr[1]),):
        raise MaskError("mask does not match the model's entries")


def all_pass(model: IsingModel, kind: str) -> ErrorMask:
    return ErrorMask(kind, np.zeros(len(model.csr[1]), dtype=bool))


def entry_index(model: IsingModel, i: int, j: int) -> int:
    """CSR position of the directed entry ``(i <- j)``."""
    indptr, indices, _ = model.csr
    row = indices[indptr[i]:indptr[i + 1]]
    k = np.searchsorted(row, j)
    if k >= row.size or row[k] != j:
        raise MaskError(f"no edge between {i} and {j}")
    return int(indptr[i] + k)


def mask_from_entries(model: IsingModel, kind: str, entries) -> ErrorMask:
    f = np.zeros(len(model.csr[1]), dtype=bool)
    for i, j in entries:
        f[entry_index(model, i, j)] = True
    return ErrorMask(kind, f)


def random_mask(model: IsingModel, kind: str, n_failing: int, rng: np.random.Generator) -> ErrorMask:
    """Exactly ``n_failing`` directed entries, drawn without replacement."""
    total = len(model.csr[1])
    if not 0 <= n_failing <= total:
        raise MaskError(f"n_failing must be in [0, {total}]")
    f = np.zeros(total, dtype=bool)
    f[rng.choice(total, size=n_failing, replace=False)] = True
    return ErrorMask(kind, f)


def field_single_mask(model: IsingModel, state, mask: ErrorMask, i: int) -> float:
    """``I_i = sum_j M_ij J_ij m_j + h_i`` with ``M = -1`` on failing entries."""
    _check(model, mask, SINGLE)
    s = check_state(model, state).astype(np.float64)
    indptr, indices, data = model.csr
    sl = slice(indptr[i], indptr[i + 1])
    sign = np.where(mask.failing[sl], -1.0, 1.0)
    return float(np.sum(sign * data[sl] * s[indices[sl]]) + model.h[i])


def field_double_mask(model: IsingModel, state_new, state_old, mask: ErrorMask, i: int) -> float:
    """Passing entries read ``state_new``, failing entries read ``state_old``."""
    _check(model, mask, DOUBLE)
    new = check_state(model, state_new).astype(np.float64)
    old = check_state(model, state_old).astype(np.float64)
    indptr, indices, data = model.csr
    sl = slice(indptr[i], indptr[i + 1])
    nb = indices[sl]
    src = np.where(mask.failing[sl], old[nb], new[nb])
    return float(np.sum(data[sl] * src) + model.h[i])


def sample_masked(model: IsingModel, mask: ErrorMask, beta: float, n_samples: int, *,
                  burn_in: int = 100, seed: int = 0, source=None) -> np.ndarray:
    """Histogram of a sequential chain whose reads go through ``mask``."""
    _check(model, mask, mask.kind)
    flags, mode = mask.kernel_flags()
    return sample_counts(model, beta, n_samples, mode=SEQUENTIAL, burn_in=burn_in,
                         config=SamplerConfig(mode=SEQUENTIAL, seed=seed),
                         flags=flags, flag_mode=mode, source=source)


def kl_divergence(p, q, eps: float = 0.0) -> float:
    """``sum p log(p / q)`` in nats.

    With ``eps > 0`` both arguments get ``eps`` added to every entry and are
    renormalized first (add-epsilon smoothing of empirical histograms).
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise MaskError("distributions have different supports")
    if eps > 0:
        p = (p + eps) / (p + eps).sum()
        q = (q + eps) / (q + eps).sum()
    if np.any((p > 0) & (q <= 0)):
        raise MaskError("q vanishes where p does not")
    nz = p > 0
    return float(max(0.0, np.sum(p[nz] * np.log(p[nz] / q[nz]))))


def smoothed_kl(counts, reference) -> float:
    """KL of an empirical histogram against a reference law, smoothing the
    histogram with ``eps = 1 / (10 * samples)``."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    p = counts / n + 1.0 / (10.0 * n)
    p /= p.sum()
    return kl_divergence(p, reference)


def parallel_analytical(model: IsingModel, beta: float) -> np.ndarray:
    """Stationary law of the fully parallel update (cosh-product form)."""
    if model.num_free > MAX_ENUM_FREE:
        raise ModelError("model too large for exact enumeration")
    return cosh_product(model, beta)


@dataclass
class KlPoint:
    n_failing: int
    error_rate: float
    kind: str
    mean_kl: float        # mean over masks of the per-mask KL
    std_kl: float
    n_masks: int
    kl_avg_dist: float    # KL of the mask-averaged distribution


def mask_experiment(model: IsingModel, kind: str, beta: float, masks_per_er: int,
                    samples_per_mask: int, er_grid=None, *, seed: int = 0,
                    burn_in: int = 100) -> list[KlPoint]:
    """KL to the exact Boltzmann law as a function of the error fraction.

    ``er_grid`` holds failing-entry counts (default every count from 0 to the
    number of directed entries).  For each count, ``masks_per_er`` random
    masks are sampled; per-mask KLs and the KL of the averaged histogram are
    both reported.
    """
    if model.num_free > MAX_ENUM_FREE:
        raise ModelError("model too large for the exact reference")
    exact = boltzmann_exact(model, beta).probs
    total = len(model.csr[1])
    grid = range(total + 1) if er_grid is None else er_grid
    rng = np.random.default_rng(seed)
    out = []
    for nf in grid:
        nf = int(nf)
        kls = []
        avg = np.zeros_like(exact)
        for r in range(masks_per_er):
            mask = random_mask(model, kind, nf, rng)
            counts = sample_masked(model, mask, beta, samples_per_mask, burn_in=burn_in,
                                   seed=int(rng.integers(2**62)))
            kls.append(smoothed_kl(counts, exact))
            avg += counts / counts.sum()
        avg /= masks_per_er
        n_total = masks_per_er * samples_per_mask
        avg_s = (avg + 1.0 / (10.0 * n_total)) / (1 + avg.size / (10.0 * n_total))
        out.append(KlPoint(nf, nf / total, kind, float(np.mean(kls)), float(np.std(kls)),
                           masks_per_er, kl_divergence(avg_s, exact)))
    return out


def kl_curve_csv(points: list[KlPoint], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Er", "kind", "mean_KL", "std_KL", "n_masks", "kl_avg_dist"])
    for p in points:
        w.writerow([repr(p.error_rate), p.kind, repr(p.mean_kl), repr(p.std_kl), p.n_masks,
                    repr(p.kl_avg_dist)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
