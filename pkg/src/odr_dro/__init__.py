"""Moment-based distributionally robust optimization with optimized
dimensionality reduction: exact SDP reformulations, certified low-dimensional
lower/upper bounds, ADMM with closed-form orthogonal updates, and a benchmark
harness.
"""

__version__ = "0.1.0"

from .admm import AdmmConfig, AdmmReport, procrustes_update, run_lb, run_rlb, run_ub, run_ub_lifted
from .analysis import gap_bound, gap_metrics, heuristic_direction, low_rank_reduce
from .apps import build_cvar, build_newsvendor, gen_cvar, gen_newsvendor
from .conic import ConicProblem, ConicSolution, SolverTolerances, smat, svec
from .ipm import solve
from .model import DroInstance, evaluate_f, load_instance, make_transform, save_instance, validate
from .reform import (
    build_full_sdp,
    build_lb_dual_fixed_b,
    build_lb_inner_fixed_b,
    build_pca_sdp,
    build_rlb_fixed_b,
    build_ub_fixed_b,
    certify_lb,
    certify_rlb,
    certify_ub,
    solve_full,
)

__all__ = [
    "AdmmConfig", "AdmmReport", "ConicProblem", "ConicSolution", "DroInstance",
    "SolverTolerances", "build_cvar", "build_full_sdp", "build_lb_dual_fixed_b",
    "build_lb_inner_fixed_b", "build_newsvendor", "build_pca_sdp",
    "build_rlb_fixed_b", "build_ub_fixed_b", "certify_lb", "certify_rlb",
    "certify_ub", "evaluate_f", "gap_bound", "gap_metrics", "gen_cvar",
    "gen_newsvendor", "heuristic_direction", "load_instance", "low_rank_reduce",
    "make_transform", "procrustes_update", "run_lb", "run_rlb", "run_ub",
    "run_ub_lifted", "save_instance", "smat", "solve", "solve_full", "svec",
    "validate",
]
