"""Optimal treated/control splits and synthetic-control weights for panel
experiments, computed by sign-vector power iterations on the inverse of a
penalized Gram matrix, with exhaustive small-N oracles, factor-model
simulators, baseline designs, and an RMSE evaluation harness."""

from .balance_qp import QpSolveStats, fit_sc_weights, project_simplex, solve_design_weights
from .baselines import RerandSpec, balance_metric, classic_sc, random_design, rerandomize
from .design import (
    DesignAssignment,
    DesignConfig,
    DesignSolution,
    SignCoherenceWarning,
    WeightVector,
    build_gram,
    iterate_step,
    orient,
    run_design,
    simplified_weights,
    spectral_init,
)
from .harness import (
    ExperimentReport,
    MethodRecord,
    MethodSummary,
    SubsampleSpec,
    estimate_effect,
    rmse,
    run_comparison,
)
from .numerics import EigenPair, cholesky_solve, extreme_eigenpair, invert_spd
from .oracle import (
    LambdaSweepResult,
    OracleResult,
    brute_force_design,
    check_l1_duality,
    default_lambda_grid,
    lambda_sweep,
)
from .panel import PanelData, panel_from_matrix
from .simulate import (
    FactorModelSpec,
    RealizableInstance,
    SimulatedPanel,
    generate_panel,
    generate_realizable,
)
from .cli import PanelCsvSpec, load_panel_csv

__version__ = "0.1.0"

__all__ = [
    "DesignAssignment",
    "DesignConfig",
    "DesignSolution",
    "EigenPair",
    "ExperimentReport",
    "FactorModelSpec",
    "LambdaSweepResult",
    "MethodRecord",
    "MethodSummary",
    "OracleResult",
    "PanelCsvSpec",
    "PanelData",
    "QpSolveStats",
    "RealizableInstance",
    "RerandSpec",
    "SignCoherenceWarning",
    "SimulatedPanel",
    "SubsampleSpec",
    "WeightVector",
    "balance_metric",
    "brute_force_design",
    "build_gram",
    "check_l1_duality",
    "cholesky_solve",
    "classic_sc",
    "default_lambda_grid",
    "estimate_effect",
    "extreme_eigenpair",
    "fit_sc_weights",
    "generate_panel",
    "generate_realizable",
    "invert_spd",
    "iterate_step",
    "lambda_sweep",
    "load_panel_csv",
    "orient",
    "panel_from_matrix",
    "project_simplex",
    "random_design",
    "rerandomize",
    "rmse",
    "run_comparison",
    "run_design",
    "simplified_weights",
    "solve_design_weights",
    "spectral_init",
]
