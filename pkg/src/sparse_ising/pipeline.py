"""End-to-end runs: build, sparsify, color, then anneal or measure TTS."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuits import Circuit, build_factorizer, build_sat, circuit_satisfied, \
    clamp_output_true, clamp_product, compose, read_factors
from .coloring import Coloring, density, dsatur, validate
from .instances import FACTORIZATION, Instance
from .model import IsingModel, energy
from .sampler import RunStats, SamplerConfig, anneal, clause_monitor
from .sparsify import SparsifyPlan, predict_sparse_count, project, sparsify_circuit
from .tts import TTS95, TtsResult, measure_tts, normalize_target


@dataclass
class Built:
    circuit: Circuit            # fused, clamped
    sampled: Circuit            # what is sampled: sparse circuit, or the fused one
    plan: SparsifyPlan | None
    model: IsingModel
    coloring: Coloring

    @property
    def ground_energy(self) -> float | None:
        if self.sampled.planted is None:
            return None
        return float(energy(self.model, self.sampled.planted))

    def fused_state(self, state) -> np.ndarray:
        return state if self.plan is None else project(state, self.plan)[0]

    def stats(self) -> dict:
        d = {
            "nodes": self.model.n,
            "edges": self.model.num_edges,
            "density": density(self.model),
            "max_degree": int(self.model.degree.max()),
            "colors": self.coloring.num_colors,
            "fused_nodes": self.circuit.n,
        }
        if self.plan is not None:
            d["predicted_nodes"] = _predict(self.circuit, self.plan.k)
        return d


def _predict(circuit: Circuit, k: int):
    try:
        return predict_sparse_count(circuit, k)
    except ValueError:
        return None


def build(instance: Instance, k: int | None = None, j_t: float = 1.0) -> Built:
    """Circuit for the instance with its outputs clamped; sparsified when ``k`` is given."""
    if instance.kind == FACTORIZATION:
        circ = clamp_product(build_factorizer(instance.m), instance.P, (instance.A, instance.B))
    else:
        circ = clamp_output_true(build_sat(instance.cnf))
    plan = None
    sampled = circ
    if k is not None:
        sampled, plan = sparsify_circuit(circ, k, j_t)
    model = compose(sampled)
    col = dsatur(model)
    if not validate(model, col):
        raise RuntimeError("DSATUR produced an improper coloring")
    return Built(circ, sampled, plan, model, col)


@dataclass
class PipelineResult:
    built: Built
    stats: RunStats | None = None
    tts: TtsResult | None = None
    summary: dict = field(default_factory=dict)


def _decode(built: Built, state) -> dict:
    fused = built.fused_state(state)
    if built.circuit.problem == "factorizer":
        A, B, P = read_factors(built.circuit, fused)
        return {"A": A, "B": B, "product_nodes": P, "correct": A * B == built.circuit.meta["P"]}
    return {"satisfied": circuit_satisfied(built.circuit, fused),
            "clauses": built.circuit.meta["c"]}


def pipeline(instance: Instance, k: int | None, config: SamplerConfig, *,
             target=None, out_dir: str | Path | None = None, dry_run: bool = False,
             min_sweeps: int = 1000, max_sweeps: int = 10**7, j_t: float = 1.0) -> PipelineResult:
    """Build, sparsify(k), color, then either anneal once with ``config`` or,
    when ``target`` is set, measure TTS.  Artifacts go to ``out_dir``:
    ``model.json``, ``coloring.csv``, ``run.csv`` and ``summary.json``."""
    built = build(instance, k, j_t)
    res = PipelineResult(built)
    summary = {"instance": instance.to_dict(), "k": k, "graph": built.stats(),
               "config": {"mode": config.mode, "rng": config.rng, "seed": config.seed,
                          "beta_start": config.schedule.beta_start,
                          "beta_end": config.schedule.beta_end,
                          "beta_steps": config.schedule.steps,
                          "sweeps_per_beta": config.sweeps_per_beta}}
    if not dry_run:
        if target is not None:
            t = normalize_target(target)
            mon = clause_monitor(built.circuit, built.plan) if t == TTS95 else None
            res.tts = measure_tts(built.model, t, config, ground_energy=built.ground_energy,
                                  monitor=mon, coloring=built.coloring,
                                  min_sweeps=min_sweeps, max_sweeps=max_sweeps)
            summary["tts"] = res.tts.to_dict()
            if res.tts.state is not None:
                summary["decoded"] = _decode(built, res.tts.state)
        else:
            mon = clause_monitor(built.circuit, built.plan) if instance.kind != FACTORIZATION else None
            _, res.stats = anneal(built.model, built.coloring, config, monitor=mon)
            summary["run"] = res.stats.summary()
            summary["ground_energy"] = built.ground_energy
            summary["decoded"] = _decode(built, res.stats.best_state)
    res.summary = summary
    if out_dir is not None:
        write_artifacts(res, out_dir)
    return res


def write_artifacts(res: PipelineResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = res.built
    doc = {"model": b.model.to_dict(), "circuit": b.sampled.to_dict(),
           "coloring": b.coloring.to_dict()}
    if b.plan is not None:
        doc["plan"] = b.plan.to_dict()
    (out / "model.json").write_text(json.dumps(doc))
    b.coloring.to_csv(out / "coloring.csv")
    if res.stats is not None:
        res.stats.to_csv(out / "run.csv")
    (out / "summary.json").write_text(json.dumps(res.summary, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"{type(x)} is not JSON serializable")


# ---- campaigns ---------------------------------------------------------------------

CAMPAIGN_FIELDS = ["instance", "bits", "nodes", "target", "repeats", "success_rate",
                   "mean_tts_sweeps", "median_tts_sweeps", "mean_tts_s", "flips_per_sweep",
                   "mean_fps"]


def campaign(instances: Sequence[Instance], repeats: int, targets: Sequence, k: int | None,
             config: SamplerConfig, *, min_sweeps: int = 1000, max_sweeps: int = 10**7,
             out_csv: str | Path | None = None, j_t: float = 1.0) -> list[dict]:
    """Repeat TTS measurements per instance and target and aggregate them."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if not instances:
        raise ValueError("campaign needs at least one instance")
    rows = []
    for inst in instances:
        built = build(inst, k, j_t)
        for target in targets:
            t = normalize_target(target)
            mon = clause_monitor(built.circuit, built.plan) if t == TTS95 else None
            sweeps, secs, fps = [], [], []
            ok = 0
            for r in range(repeats):
                cfg = config.with_(seed=config.seed + 7919 * r)
                res = measure_tts(built.model, t, cfg, ground_energy=built.ground_energy,
                                  monitor=mon, coloring=built.coloring,
                                  min_sweeps=min_sweeps, max_sweeps=max_sweeps)
                if res.success:
                    ok += 1
                    sweeps.append(res.sweeps)
                    secs.append(res.wall_ns * 1e-9)
                total_sweeps = res.sweeps if res.success else sum(res.budgets)
                if res.wall_ns > 0:
                    fps.append(total_sweeps * built.model.num_free / (res.wall_ns * 1e-9))
            rows.append({
                "instance": inst.id, "bits": inst.bits, "nodes": built.model.n, "target": t,
                "repeats": repeats, "success_rate": ok / repeats,
                "mean_tts_sweeps": statistics.fmean(sweeps) if sweeps else math.nan,
                "median_tts_sweeps": statistics.median(sweeps) if sweeps else math.nan,
                "mean_tts_s": statistics.fmean(secs) if secs else math.nan,
                "flips_per_sweep": built.model.num_free,
                "mean_fps": statistics.fmean(fps) if fps else math.nan,
            })
    if out_csv is not None:
        Path(out_csv).write_text(rows_to_csv(rows, CAMPAIGN_FIELDS))
    return rows


def fps_campaign(models: Sequence[tuple[str, IsingModel]], sweeps: int, config: SamplerConfig,
                 out_csv: str | Path | None = None) -> list[dict]:
    """Wall-clock flips per second at fixed beta for each model."""
    from .sampler import run_chain

    rows = []
    for name, model in models:
        col = dsatur(model)
        beta = config.schedule.beta_end
        run_chain(model, np.full(min(sweeps, 10), beta), mode=config.mode, coloring=col,
                  config=config)  # compile / warm caches
        _, st, _ = run_chain(model, np.full(sweeps, beta), mode=config.mode, coloring=col,
                             config=config)
        rows.append({"name": name, "nodes": model.n, "flips_per_sweep": st.flips_per_sweep,
                     "sweeps": st.sweeps, "wall_s": st.wall_ns * 1e-9, "fps": st.fps})
    if out_csv is not None:
        Path(out_csv).write_text(rows_to_csv(rows, list(rows[0]) if rows else []))
    return rows


def rows_to_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()

