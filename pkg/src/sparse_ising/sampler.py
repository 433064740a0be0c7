"""p-bit samplers: chromatic block Gibbs, sequential Gibbs and fully parallel
updates, with simulated annealing and flip accounting.

One sweep updates every unclamped node exactly once.  In chromatic mode the
color blocks are visited in ascending order and, because a block is an
independent set, every node of a block sees the same neighbor values whether
the block is processed serially or by concurrent threads.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels as K
from .coloring import Coloring, dsatur, validate
from .model import BIPOLAR, IsingModel, ModelError, apply_clamps, check_state, energy, \
    random_state, tanh_lut, to_bipolar
from .rng import COUNTER, LFSR32, UniformSource, as_source, make_source

CHROMATIC = "chromatic"
SEQUENTIAL = "sequential_gibbs"
PARALLEL = "fully_parallel"
MODES = (CHROMATIC, SEQUENTIAL, PARALLEL)

_CHUNK_FLOATS = 1 << 21


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear inverse-temperature ramp held for ``sweeps_per_beta`` sweeps per step."""

    beta_start: float = 0.2
    beta_end: float = 5.0
    steps: int = 100
    shape: str = "linear"

    def __post_init__(self):
        if self.beta_start < 0 or self.beta_end < 0:
            raise SamplerError("beta must be nonnegative")
        if self.beta_end < self.beta_start:
            raise SamplerError("schedule must be nondecreasing")
        if self.steps < 1:
            raise SamplerError("schedule needs at least one step")
        if self.shape != "linear":
            raise SamplerError(f"unsupported schedule shape {self.shape!r}")

    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_start, self.beta_end, self.steps)

    def per_sweep(self, sweeps_per_beta: int) -> np.ndarray:
        return np.repeat(self.betas(), sweeps_per_beta)

    @classmethod
    def constant(cls, beta: float, steps: int = 1) -> "AnnealSchedule":
        return cls(beta, beta, steps)


@dataclass(frozen=True)
class SamplerConfig:
    mode: str = CHROMATIC
    rng: str = COUNTER
    seed: int = 0
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    sweeps_per_beta: int = 10
    quantized_beta: bool = False
    beta_frac_bits: int = 4
    lut_bits: int | None = None
    threads: bool = False
    lfsr_steps: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise SamplerError(f"mode must be one of {MODES}")
        if self.rng not in (COUNTER, LFSR32):
            raise SamplerError(f"rng must be {COUNTER!r} or {LFSR32!r}")
        if self.sweeps_per_beta < 1:
            raise SamplerError("sweeps_per_beta must be positive")
        if self.threads and self.mode != CHROMATIC:
            raise SamplerError("threaded execution is only defined for chromatic mode")

    @property
    def total_sweeps(self) -> int:
        return self.schedule.steps * self.sweeps_per_beta

    def with_(self, **kw) -> "SamplerConfig":
        return replace(self, **kw)


@dataclass
class RunStats:
    """Run log plus summary.  ``records`` rows are
    ``(sweep, beta, energy, satisfied_clauses, cumulative_flips, wall_ns)``;
    ``satisfied_clauses`` is -1 when no clause monitor is attached."""

    n_unclamped: int
    records: list[tuple] = field(default_factory=list)
    sweeps: int = 0
    wall_ns: int = 0
    final_energy: float = math.nan
    best_energy: float = math.inf
    best_state: np.ndarray | None = None
    final_state: np.ndarray | None = None
    hit_sweep: int | None = None
    hit_wall_ns: int | None = None
    energy_trace: np.ndarray | None = None

    @property
    def cumulative_flips(self) -> int:
        return self.sweeps * self.n_unclamped

    @property
    def flips_per_sweep(self) -> int:
        return self.n_unclamped

    @property
    def fps(self) -> float:
        return measure_fps(self)["fps"]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "beta", "energy", "satisfied_clauses", "cumulative_flips", "wall_ns"])
        for r in self.records:
            w.writerow([r[0], repr(float(r[1])), repr(float(r[2])), *r[3:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def summary(self) -> dict:
        out = {
            "sweeps": self.sweeps,
            "cumulative_flips": self.cumulative_flips,
            "flips_per_sweep": self.flips_per_sweep,
            "wall_ns": self.wall_ns,
            "fps": self.fps if self.wall_ns > 0 else None,
            "final_energy": self.final_energy,
            "best_energy": self.best_energy,
            "hit_sweep": self.hit_sweep,
            "hit_wall_ns": self.hit_wall_ns,
        }
        if self.best_state is not None:
            out["best_state_hex"] = pack_state(self.best_state)
        return out


def pack_state(state) -> str:
    """Hex string of the state bits, node 0 in the most significant bit of the first byte."""
    bits = (np.asarray(state) > 0).astype(np.uint8)
    return np.packbits(bits).tobytes().hex()


def unpack_state(text: str, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:n]
    return np.where(bits == 1, 1, -1).astype(np.int8)


def measure_fps(run: RunStats) -> dict:
    """Flips per wall-clock second and the per-sweep flip count."""
    if run.sweeps == 0 or run.wall_ns <= 0:
        raise SamplerError("run is empty")
    return {"fps": run.cumulative_flips / (run.wall_ns * 1e-9),
            "flips_per_sweep": run.n_unclamped,
            "cumulative_flips": run.cumulative_flips}


@dataclass(frozen=True)
class ClauseMonitor:
    """Clause data for in-kernel satisfied-clause counting.

    Variable ``x`` is read from sampler nodes ``var_start[x]:var_start[x+1]``
    by majority vote (lowest index breaks ties).
    """

    var_start: np.ndarray
    cl_var: np.ndarray
    cl_pos: np.ndarray
    target: int = 0

    @property
    def c(self) -> int:
        return self.cl_var.shape[0]

    def with_target(self, target: int) -> "ClauseMonitor":
        return replace(self, target=int(target))


def clause_monitor(circuit, plan=None, target: int = 0) -> ClauseMonitor:
    """Monitor for a 3-SAT circuit, optionally through a sparsification plan."""
    from .circuits import circuit_cnf

    cnf = circuit_cnf(circuit)
    var, pos = cnf.literal_arrays()
    nodes = np.asarray(circuit.meta["vars"], dtype=np.int64)
    if np.any(np.diff(nodes) != 1):
        raise SamplerError("variable nodes must be contiguous")
    if plan is None:
        start = np.arange(nodes[0], nodes[-1] + 2, dtype=np.int64)
    else:
        start = plan.start[nodes[0]:nodes[-1] + 2].astype(np.int64)
    return ClauseMonitor(start, var.astype(np.int64), pos, int(target))


class _Prepared:
    def __init__(self, model: IsingModel, mode: str, coloring: Coloring | None):
        if model.representation != BIPOLAR:
            raise SamplerError("internal: sampler runs on bipolar models")
        self.model = model
        self.indptr, self.indices, self.data = model.csr
        self.h = np.ascontiguousarray(model.h, dtype=np.float64)
        self.free = model.free_nodes.astype(np.int64)
        self.block_ptr = None
        if mode == CHROMATIC:
            if coloring is None:
                coloring = dsatur(model)
            if not validate(model, coloring):
                raise SamplerError("improper coloring refused")
            self.order = coloring.order.astype(np.int64)
            sizes = [len(b) for b in coloring.blocks]
            self.block_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        else:
            self.order = self.free
        self.coloring = coloring


def _activation(config: SamplerConfig):
    if config.lut_bits:
        return tanh_lut(config.lut_bits)
    return K._EMPTY_F, 1.0


def _bipolar(model: IsingModel):
    return (model, False) if model.representation == BIPOLAR else (to_bipolar(model), True)


def _initial_state(model: IsingModel, state, seed: int) -> np.ndarray:
    if state is None:
        return random_state(model, np.random.default_rng(np.random.Philox(seed ^ 0x5EED)))
    s = check_state(model, state)
    return apply_clamps(model, s.astype(np.int8))


def run_chain(model: IsingModel, betas: Sequence[float], *, mode: str = CHROMATIC,
              coloring: Coloring | None = None, state=None, source: UniformSource | None = None,
              config: SamplerConfig | None = None, target_energy: float = -math.inf,
              monitor: ClauseMonitor | None = None, log_every: int | None = None,
              record_codes: bool = False, trace: bool = False, flags=None,
              flag_mode: int = K.LIVE, prepared: _Prepared | None = None):
    """Low-level driver shared by every public sampling entry point.

    Returns ``(final_state, RunStats, codes)``; ``codes`` is the per-sweep index
    of the free-node state (see :class:`~sparse_ising.model.Distribution`)
    when ``record_codes`` is set, else ``None``.
    """
    config = config or SamplerConfig(mode=mode)
    model_b, was_binary = _bipolar(model)
    if state is not None and was_binary:
        state = 2 * np.asarray(state, dtype=np.int8) - 1
    prep = prepared or _Prepared(model_b, mode, coloring)
    n = model_b.n
    s = _initial_state(model_b, state, config.seed)
    if source is None:
        kw = {"steps": config.lfsr_steps} if config.rng == LFSR32 else {}
        source = make_source(config.rng, n, config.seed, **kw)
    source = as_source(source, n)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    S = betas.size
    table, step = _activation(config)
    scale = float(2 ** config.beta_frac_bits) if config.quantized_beta else 0.0
    kmode = {CHROMATIC: K.LIVE, SEQUENTIAL: K.LIVE, PARALLEL: K.PARALLEL}[mode]
    if flags is not None:
        kmode = flag_mode
        flags = np.ascontiguousarray(flags, dtype=np.int8)
    else:
        flags = K._EMPTY_I8
    if monitor is not None:
        var_start, cl_var, cl_pos, sat_target = (monitor.var_start, monitor.cl_var,
                                                 monitor.cl_pos, monitor.target)
    else:
        var_start, cl_var, cl_pos, sat_target = (np.zeros(1, np.int64), np.zeros((0, 3), np.int64),
                                                 np.zeros((0, 3), np.bool_), 0)
    if record_codes and prep.free.size > 62:
        raise SamplerError("too many free nodes to record state codes")
    threaded = config.threads and mode == CHROMATIC
    if threaded and (monitor is not None or record_codes or flags.size or table.size or scale):
        raise SamplerError("threaded kernel supports plain energy tracking only")

    e = float(energy(model_b, s))
    stats = RunStats(n_unclamped=int(prep.free.size))
    best = np.array([e])
    best_s = s.copy()
    codes_all = np.empty(S, dtype=np.int64) if record_codes else None
    trace_all = np.empty(S) if trace else None
    chunk_cap = max(1, _CHUNK_FLOATS // max(n, 1))
    if log_every:
        chunk_cap = min(chunk_cap, int(log_every))
    done = 0
    wall = 0
    while done < S:
        rows = min(chunk_cap, S - done)
        U = source.draw(rows)
        b = betas[done:done + rows]
        tr = np.empty(rows) if (trace or log_every) else K._EMPTY_F
        trs = np.empty(rows, dtype=np.int64) if (monitor is not None) else K._EMPTY_I
        cd = np.empty(rows, dtype=np.int64) if record_codes else K._EMPTY_I
        t0 = time.perf_counter_ns()
        if threaded:
            k, e, hit = K.run_chromatic_threaded(prep.indptr, prep.indices, prep.data, prep.h,
                                                 prep.order, prep.block_ptr, s, b, U, e,
                                                 target_energy, tr)
            if tr.size and k:
                m = int(np.argmin(tr[:k]))
                if tr[m] < best[0]:
                    best[0] = tr[m]
        else:
            k, e, hit = K.run_sweeps(prep.indptr, prep.indices, prep.data, prep.h, prep.order, s,
                                     b, U, kmode, flags, table, step, scale, e, target_energy,
                                     sat_target, var_start, cl_var, cl_pos, prep.free, tr, trs,
                                     cd, best_s, best)
        wall += time.perf_counter_ns() - t0
        if record_codes:
            codes_all[done:done + k] = cd[:k]
        if trace:
            trace_all[done:done + k] = tr[:k]
        done += k
        if log_every:
            sat = int(trs[k - 1]) if monitor is not None else -1
            stats.records.append((done, float(b[k - 1]), float(tr[k - 1]), sat,
                                  done * stats.n_unclamped, wall))
        if hit:
            stats.hit_sweep = done
            stats.hit_wall_ns = wall
            break
    stats.sweeps = done
    stats.wall_ns = wall
    stats.final_energy = float(e)
    stats.best_energy = float(best[0])
    stats.best_state = best_s if not threaded else None
    final = s
    if was_binary:
        final = ((s + 1) // 2).astype(np.int8)
        if stats.best_state is not None:
            stats.best_state = ((stats.best_state + 1) // 2).astype(np.int8)
    stats.final_state = final
    if trace:
        stats.energy_trace = trace_all[:done]
    return final, stats, (codes_all[:done] if record_codes else None)


# ---- single sweeps ----------------------------------------------------------------

def _one_sweep(model, state, beta, rng, mode, coloring=None):
    s0 = check_state(model, state)
    src = as_source(rng, model.n)
    final, _, _ = run_chain(model, [beta], mode=mode, coloring=coloring, state=s0, source=src)
    return final


def sweep_chromatic(model: IsingModel, coloring: Coloring, state, beta: float, rng) -> np.ndarray:
    """One chromatic sweep: color blocks in ascending order, each block updated
    from the current values of the other blocks.  Returns the new state."""
    if coloring is None or not validate(model, coloring):
        raise SamplerError("improper coloring refused")
    return _one_sweep(model, state, beta, rng, CHROMATIC, coloring)


def sweep_sequential(model: IsingModel, state, beta: float, rng) -> np.ndarray:
    """One Gibbs sweep in node-index order with always-fresh fields."""
    return _one_sweep(model, state, beta, rng, SEQUENTIAL)


def sweep_parallel(model: IsingModel, state, beta: float, rng) -> np.ndarray:
    """Update every node at once from the previous state."""
    return _one_sweep(model, state, beta, rng, PARALLEL)


# ---- sampling and annealing -----------------------------------------------------------

def sample_counts(model: IsingModel, beta: float, n_samples: int, *, mode: str = CHROMATIC,
                  coloring: Coloring | None = None, burn_in: int = 1000, seed: int = 0,
                  rng: str = COUNTER, config: SamplerConfig | None = None, flags=None,
                  flag_mode: int = K.LIVE, source: UniformSource | None = None,
                  state=None) -> np.ndarray:
    """Histogram of free-node states over ``n_samples`` consecutive sweeps at
    fixed ``beta`` after ``burn_in`` sweeps.  Index order matches
    :func:`~sparse_ising.model.boltzmann_exact`."""
    config = config or SamplerConfig(mode=mode, rng=rng, seed=seed)
    model_b, _ = _bipolar(model)
    prep = _Prepared(model_b, mode, coloring)
    if source is None:
        kw = {"steps": config.lfsr_steps} if config.rng == LFSR32 else {}
        source = make_source(config.rng, model.n, config.seed, **kw)
    s = state
    if burn_in:
        s, _, _ = run_chain(model, np.full(burn_in, float(beta)), mode=mode, state=s,
                            source=source, config=config, flags=flags, flag_mode=flag_mode,
                            prepared=prep)
    _, _, codes = run_chain(model, np.full(n_samples, float(beta)), mode=mode, state=s,
                            source=source, config=config, record_codes=True, flags=flags,
                            flag_mode=flag_mode, prepared=prep)
    return np.bincount(codes, minlength=1 << int(prep.free.size))


def sample_distribution(model: IsingModel, beta: float, n_samples: int, **kw) -> np.ndarray:
    counts = sample_counts(model, beta, n_samples, **kw)
    return counts / counts.sum()


def anneal(model: IsingModel, coloring: Coloring | None, config: SamplerConfig, *,
           state=None, target_energy: float = -math.inf, monitor: ClauseMonitor | None = None,
           log_every: int | None = None, trace: bool = False) -> tuple[np.ndarray, RunStats]:
    """Simulated annealing along ``config.schedule``.

    Returns the final state and the run statistics; ``stats.best_state`` holds
    the lowest-energy state seen.  The run stops early once ``target_energy``
    or the monitor's clause target is reached.
    """
    betas = config.schedule.per_sweep(config.sweeps_per_beta)
    final, stats, _ = run_chain(model, betas, mode=config.mode, coloring=coloring, state=state,
                                config=config, target_energy=target_energy, monitor=monitor,
                                log_every=log_every or config.sweeps_per_beta, trace=trace)
    return final, stats


def cosh_product(model: IsingModel, beta: float) -> np.ndarray:
    """Stationary law of the fully parallel chain over free-node states:
    ``p ~ prod_i cosh(beta I_i) exp(beta m_i h_i)`` with ``I_i`` the full field."""
    from .model import enumerate_states

    model_b, _ = _bipolar(model)
    states = enumerate_states(model_b).astype(np.float64)
    free = model_b.free_nodes
    I = (model_b.matrix @ states.T).T + model_b.h
    # Clamped neighbors act on a free node like extra bias.
    clamped = np.flatnonzero(model_b.clamped_mask)
    h_eff = model_b.h + model_b.matrix[:, clamped] @ states[0, clamped]
    logw = (np.log(np.cosh(beta * I[:, free])) + beta * states[:, free] * h_eff[free]).sum(axis=1)
    logw -= logw.max()
    p = np.exp(logw)
    return p / p.sum()
