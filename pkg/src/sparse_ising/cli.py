"""Command-line front end.

Exit codes: 0 success, 1 error, 2 target not reached.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .circuits import Circuit, build_factorizer, build_sat, clamp_output_true, clamp_product, \
    compose
from .coloring import Coloring, density, dsatur
from .error_models import DOUBLE, SINGLE, kl_curve_csv, mask_experiment
from .gates import GateKind, gate_model
from .instances import Instance, cnf_instance, gen_semiprime, semiprime_instance
from .model import IsingModel
from .pipeline import build, campaign, fps_campaign, pipeline, rows_to_csv
from .rng import COUNTER, LFSR32
from .sampler import MODES, AnnealSchedule, SamplerConfig, sample_counts
from .sparsify import SparsifyPlan, predict_sparse_count, sparsify_circuit

EXIT_OK, EXIT_ERROR, EXIT_MISSED = 0, 1, 2


# ---- bundle files ------------------------------------------------------------------

def _bundle(circuit: Circuit, plan: SparsifyPlan | None = None, fused: Circuit | None = None,
            coloring: Coloring | None = None) -> dict:
    model = compose(circuit)
    d = {"circuit": circuit.to_dict(), "model": model.to_dict()}
    if plan is not None:
        d["plan"] = plan.to_dict()
        d["fused_circuit"] = fused.to_dict()
    if coloring is not None:
        d["coloring"] = coloring.to_dict()
    return d


def _graph_line(model: IsingModel, extra: str = "") -> str:
    return (f"nodes={model.n} edges={model.num_edges} density={density(model):.4%} "
            f"max_degree={int(model.degree.max()) if model.n else 0}{extra}")


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _load_bundle(path) -> dict:
    return json.loads(Path(path).read_text())


# ---- argument groups ---------------------------------------------------------------

def _sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default="chromatic")
    p.add_argument("--rng", choices=(COUNTER, LFSR32), default=COUNTER)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-start", type=float, default=0.2)
    p.add_argument("--beta-end", type=float, default=5.0)
    p.add_argument("--beta-steps", type=int, default=100)
    p.add_argument("--sweeps-per-beta", type=int, default=10)
    p.add_argument("--quantized-beta", action="store_true")
    p.add_argument("--lut-bits", type=int, default=None)
    p.add_argument("--threads", action="store_true", help="thread-parallel color blocks")


def _config(a) -> SamplerConfig:
    return SamplerConfig(mode=a.mode, rng=a.rng, seed=a.seed,
                         schedule=AnnealSchedule(a.beta_start, a.beta_end, a.beta_steps),
                         sweeps_per_beta=a.sweeps_per_beta, quantized_beta=a.quantized_beta,
                         lut_bits=a.lut_bits, threads=a.threads)


def _instance_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance (choose one)")
    g.add_argument("--cnf", help="DIMACS path or bundled instance name")
    g.add_argument("--factors", nargs=2, type=int, metavar=("A", "B"),
                   help="planted prime factors")
    g.add_argument("--bits", type=int, help="random semiprime of this many bits")
    g.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None, help="sparsify to at most k neighbors")
    p.add_argument("--j-t", type=float, default=1.0, help="copy coupling used by --k")


def _instance(a) -> Instance:
    chosen = [x is not None for x in (a.cnf, a.factors, a.bits)]
    if sum(chosen) != 1:
        raise ValueError("give exactly one of --cnf, --factors, --bits")
    if a.cnf:
        return cnf_instance(a.cnf)
    if a.factors:
        return semiprime_instance(*a.factors)
    return gen_semiprime(a.bits, a.instance_seed)


# ---- subcommands ----------------------------------------------------------------------

def cmd_build_fact(a) -> int:
    circ = build_factorizer(a.m)
    if a.P is not None:
        circ = clamp_product(circ, a.P, tuple(a.factors) if a.factors else None)
    plan = None
    fused = circ
    if a.k is not None:
        circ, plan = sparsify_circuit(circ, a.k, a.j_t)
    _write(a.out, json.dumps(_bundle(circ, plan, fused)))
    extra = ""
    if plan is not None:
        extra = f" predicted={predict_sparse_count(fused, a.k)}"
    print(_graph_line(compose(circ), extra), file=sys.stderr)
    return EXIT_OK


def cmd_build_sat(a) -> int:
    circ = build_sat(cnf_instance(a.cnf).cnf)
    if not a.no_clamp:
        circ = clamp_output_true(circ)
    plan = None
    fused = circ
    if a.k is not None:
        circ, plan = sparsify_circuit(circ, a.k, a.j_t)
    _write(a.out, json.dumps(_bundle(circ, plan, fused)))
    extra = ""
    if plan is not None and a.k == 4:
        extra = f" predicted={predict_sparse_count(fused, a.k)}"
    print(_graph_line(compose(circ), extra), file=sys.stderr)
    return EXIT_OK


def cmd_sparsify(a) -> int:
    b = _load_bundle(a.bundle)
    if "plan" in b:
        raise ValueError("bundle is already sparsified")
    fused = Circuit.from_dict(b["circuit"])
    circ, plan = sparsify_circuit(fused, a.k, a.j_t)
    _write(a.out, json.dumps(_bundle(circ, plan, fused)))
    print(_graph_line(compose(circ)), file=sys.stderr)
    return EXIT_OK


def cmd_color(a) -> int:
    model = IsingModel.from_dict(_load_bundle(a.bundle)["model"])
    col = dsatur(model)
    _write(a.out, col.to_csv())
    print(f"colors={col.num_colors} max_degree={int(model.degree.max())}", file=sys.stderr)
    return EXIT_OK


def cmd_sample(a) -> int:
    if a.gate:
        model = gate_model(GateKind(a.gate))
    else:
        model = IsingModel.from_dict(_load_bundle(a.bundle)["model"])
    counts = sample_counts(model, a.beta, a.samples, mode=a.mode, burn_in=a.burn_in,
                           seed=a.seed, rng=a.rng)
    free = model.free_nodes
    rows = [{"state": format(i, f"0{len(free)}b"), "count": int(c), "p": c / counts.sum()}
            for i, c in enumerate(counts)]
    _write(a.out, rows_to_csv(rows, ["state", "count", "p"]))
    return EXIT_OK


def cmd_anneal(a) -> int:
    res = pipeline(_instance(a), a.k, _config(a), out_dir=a.out_dir, dry_run=a.dry_run,
                   j_t=a.j_t)
    print(json.dumps(res.summary, indent=2, default=str))
    if a.dry_run:
        return EXIT_OK
    dec = res.summary.get("decoded", {})
    ok = dec.get("correct", dec.get("satisfied") == dec.get("clauses"))
    return EXIT_OK if ok else EXIT_MISSED


def cmd_tts(a) -> int:
    inst = _instance(a)
    cfg = _config(a)
    if a.repeats > 1:
        rows = campaign([inst], a.repeats, [a.target], a.k, cfg, min_sweeps=a.min_sweeps,
                        max_sweeps=a.max_sweeps, j_t=a.j_t)
        out = rows_to_csv(rows, list(rows[0]))
        if a.out_dir:
            Path(a.out_dir).mkdir(parents=True, exist_ok=True)
            (Path(a.out_dir) / "campaign.csv").write_text(out)
        sys.stdout.write(out)
        return EXIT_OK if rows[0]["success_rate"] > 0 else EXIT_MISSED
    res = pipeline(inst, a.k, cfg, target=a.target, out_dir=a.out_dir,
                   min_sweeps=a.min_sweeps, max_sweeps=a.max_sweeps, j_t=a.j_t)
    print(json.dumps(res.summary, indent=2, default=str))
    return EXIT_OK if res.tts.success else EXIT_MISSED


def cmd_fps(a) -> int:
    models = []
    for src in a.cnf or []:
        inst = cnf_instance(src)
        models.append((inst.id, build(inst, a.k).model))
    for m in a.fact_m or []:
        circ = build_factorizer(m)
        if a.k is not None:
            circ, _ = sparsify_circuit(circ, a.k)
        models.append((f"fact{2 * m}", compose(circ)))
    if not models:
        raise ValueError("give --cnf and/or --fact-m")
    cfg = _config(a)
    rows = fps_campaign(models, a.sweeps, cfg)
    _write(a.out, rows_to_csv(rows, list(rows[0])))
    return EXIT_OK


def cmd_masks(a) -> int:
    model = gate_model(GateKind.FULL_ADDER)
    kinds = [SINGLE, DOUBLE] if a.kind == "both" else [a.kind]
    points = []
    for kind in kinds:
        points += mask_experiment(model, kind, a.beta, a.masks, a.samples, seed=a.seed)
    _write(a.out, kl_curve_csv(points))
    return EXIT_OK


def cmd_gen_semiprime(a) -> int:
    rows = []
    for i in range(a.count):
        inst = gen_semiprime(a.bits, a.seed + i)
        rows.append({"P": inst.P, "A": inst.A, "B": inst.B, "bits": inst.bits})
    _write(a.out, rows_to_csv(rows, ["P", "A", "B", "bits"]))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparse-ising", description="Sparse p-bit Ising machine tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build-fact", help="build an array-multiplier factorizer")
    p.add_argument("--m", type=int, required=True, help="bits per factor")
    p.add_argument("--P", type=int, default=None, help="product to clamp")
    p.add_argument("--factors", nargs=2, type=int, metavar=("A", "B"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--j-t", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_build_fact)

    p = sub.add_parser("build-sat", help="build a 3-SAT circuit from a CNF file")
    p.add_argument("cnf", help="DIMACS path or bundled instance name")
    p.add_argument("--no-clamp", action="store_true")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--j-t", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_build_sat)

    p = sub.add_parser("sparsify", help="sparsify a bundle written by build-fact/build-sat")
    p.add_argument("bundle")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--j-t", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("color", help="DSATUR coloring of a bundle's model, as CSV")
    p.add_argument("bundle")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("sample", help="fixed-beta state histogram")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bundle")
    src.add_argument("--gate", choices=[g.value for g in GateKind])
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--mode", choices=MODES, default="chromatic")
    p.add_argument("--rng", choices=(COUNTER, LFSR32), default=COUNTER)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("anneal", help="build, sparsify, color and anneal one instance")
    _instance_args(p)
    _sampler_args(p)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--dry-run", action="store_true", help="build and validate only")
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("tts", help="time to solution with restarts")
    _instance_args(p)
    _sampler_args(p)
    p.add_argument("--target", choices=["100", "99", "95"], default="99")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--min-sweeps", type=int, default=1000)
    p.add_argument("--max-sweeps", type=int, default=10**7)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_tts)

    p = sub.add_parser("fps", help="flips per second across problem sizes")
    p.add_argument("--cnf", nargs="*")
    p.add_argument("--fact-m", nargs="*", type=int)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=2000)
    _sampler_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fps)

    p = sub.add_parser("masks", help="full-adder KL curve under error masks")
    p.add_argument("--kind", choices=[SINGLE, DOUBLE, "both"], default="both")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--masks", type=int, default=400)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_masks)

    p = sub.add_parser("gen-semiprime", help="random planted semiprimes")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen_semiprime)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING)
    try:
        return a.func(a)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
