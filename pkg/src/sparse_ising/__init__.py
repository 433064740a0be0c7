"""Sparse probabilistic-bit Ising machines in software.

Build invertible-logic circuits (multipliers, 3-SAT checkers), sparsify them
to a bounded degree, color them into independent blocks and sample them with
chromatic Gibbs sweeps.
"""
from .circuits import (Circuit, Gate, build_factorizer, build_sat, clamp_output_true,
                       clamp_product, compose)
from .cnf import CnfFormula, parse_dimacs, read_dimacs, satisfied_clauses
from .coloring import Coloring, density, density_max, dsatur, validate
from .gates import GateKind, gate_model, negate_pin, truth_table
from .model import IsingModel, boltzmann_exact, energy, local_field, pbit_update
from .sampler import AnnealSchedule, RunStats, SamplerConfig, anneal, measure_fps
from .sparsify import SparsifyPlan, lift, predict_sparse_count, project, sparsify
from .tts import fit_exponential, measure_tts

__version__ = "0.1.0"
