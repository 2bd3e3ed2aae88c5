"""Command-line surface: panel CSV ingestion and the design/simulate/evaluate/
oracle/check subcommands.

Input panels are long-format CSVs with one (unit, time, outcome) row per cell.
Exit codes: 0 success, 1 parse or I/O failure, 2 validation failure,
3 design hit its iteration cap (the result is still written), 4 problem too
large for exhaustive enumeration. The SYNTHDESIGN_SEED environment variable
overrides any --seed flag.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .design import DesignConfig, WeightVector, run_design
from .errors import (
    DuplicateCellError,
    IncompleteGridError,
    MissingColumnError,
    NonNumericOutcomeError,
    SynthDesignError,
    TooLargeError,
)
from .harness import SubsampleSpec, _group_form, run_comparison
from .oracle import brute_force_design, check_l1_duality, lambda_sweep
from .panel import PanelData
from .simulate import REGIMES, FactorModelSpec, generate_realizable
from . import design as design_mod
from . import numerics

SEED_ENV_VAR = "SYNTHDESIGN_SEED"


@dataclass(frozen=True)
class PanelCsvSpec:
    """Column mapping for a long-format panel CSV."""

    unit_column: str = "unit"
    time_column: str = "time"
    outcome_column: str = "outcome"
    exclude_units: tuple = ()
    pre_periods: int = 1


def load_panel_csv(path, spec):
    """Pivot a long-format CSV into a PanelData.

    Units are sorted lexicographically and periods ascending (numerically
    when the whole time column parses as numbers). The unit-by-time grid must
    be complete; missing cells are reported in the raised error.
    """
    df = pd.read_csv(path)
    for col in (spec.unit_column, spec.time_column, spec.outcome_column):
        if col not in df.columns:
            raise MissingColumnError(f"column {col!r} not found in {path}")
    units = df[spec.unit_column].astype(str)
    if spec.exclude_units:
        excluded = {str(u) for u in spec.exclude_units}
        keep = ~units.isin(excluded)
        df = df[keep]
        units = units[keep]
    dup = df.duplicated([spec.unit_column, spec.time_column])
    if dup.any():
        first = df[dup].iloc[0]
        raise DuplicateCellError(
            f"duplicate cell for unit {first[spec.unit_column]!r} "
            f"at time {first[spec.time_column]!r}"
        )
    outcome = pd.to_numeric(df[spec.outcome_column], errors="coerce")
    if outcome.isna().any():
        bad = df[spec.outcome_column][outcome.isna()].iloc[0]
        raise NonNumericOutcomeError(f"outcome value {bad!r} is not numeric")
    times_numeric = pd.to_numeric(df[spec.time_column], errors="coerce")
    times = times_numeric if not times_numeric.isna().any() else df[spec.time_column].astype(str)
    work = pd.DataFrame({"unit": units.values, "time": times.values, "outcome": outcome.values})
    grid = work.pivot(index="unit", columns="time", values="outcome")
    grid = grid.sort_index().sort_index(axis=1)
    if grid.isna().any().any():
        missing = [
            (unit, time)
            for unit, row in grid.iterrows()
            for time in grid.columns[row.isna()]
        ]
        raise IncompleteGridError(
            f"panel grid has {len(missing)} missing cells, first: {missing[0]}",
            missing=missing,
        )
    return PanelData(
        grid.to_numpy(), tuple(grid.index), tuple(grid.columns), spec.pre_periods
    )


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="synthdesign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_csv_flags(p):
        p.add_argument("--input", required=True, help="long-format panel CSV")
        p.add_argument("--pre", type=int, required=True, help="number of pre-treatment periods")
        p.add_argument("--unit-col", default="unit")
        p.add_argument("--time-col", default="time")
        p.add_argument("--outcome-col", default="outcome")
        p.add_argument("--exclude", action="append", default=[], help="unit to drop (repeatable)")

    def add_hyper_flags(p):
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--beta", type=float, default=0.0)
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--max-iters", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("design", help="compute an assignment and weights for a panel")
    add_csv_flags(p)
    p.add_argument("--variant", choices=["spcd", "normspcd"], default="normspcd")
    add_hyper_flags(p)

    p = sub.add_parser("simulate", help="factor-model simulation experiment")
    p.add_argument("--regime", choices=["random", "trend", "ar1"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--latent", type=int, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--methods", default="spcd,sc")
    p.add_argument("--variant", choices=["spcd", "normspcd"], default="normspcd")
    p.add_argument("--csv", default=None, help="write per-replication rows here")
    add_hyper_flags(p)

    p = sub.add_parser("evaluate", help="compare methods on a real panel (placebo)")
    add_csv_flags(p)
    p.add_argument("--methods", default="spcd,random,sc")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--subsample-units", type=int, default=None)
    p.add_argument("--post", type=int, default=None, help="post periods per subsample window")
    p.add_argument("--csv", default=None, help="write per-replication rows here")
    add_hyper_flags(p)

    p = sub.add_parser("oracle", help="exhaustive global design for a small panel")
    add_csv_flags(p)
    p.add_argument("--lambda-sweep", action="store_true")
    add_hyper_flags(p)

    sub.add_parser("check", help="run the built-in invariant suite")
    return parser


def _resolve_seed(args):
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        return int(env)
    return getattr(args, "seed", 0)


def _csv_spec(args):
    return PanelCsvSpec(
        unit_column=args.unit_col,
        time_column=args.time_col,
        outcome_column=args.outcome_col,
        exclude_units=tuple(args.exclude),
        pre_periods=args.pre,
    )


def _config(args, variant="normspcd"):
    return DesignConfig(
        alpha=args.alpha,
        lam=args.lam,
        beta=args.beta,
        sigma=args.sigma,
        variant=variant,
        max_iters=args.max_iters,
        seed=_resolve_seed(args),
    )


def _emit(payload, path):
    text = json.dumps(payload, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _config_echo(config):
    return {
        "alpha": config.alpha,
        "lambda": config.lam,
        "beta": config.beta,
        "sigma": config.sigma,
        "variant": config.variant,
        "max_iters": config.max_iters,
        "seed": config.seed,
    }


def _cmd_design(args):
    panel = load_panel_csv(args.input, _csv_spec(args))
    config = _config(args, args.variant).resolved(panel.pre)
    solution = run_design(panel.pre, config)
    # Emit experiment-ready weights: one per unit, summing to one per group.
    group_weights = _group_form(
        WeightVector(solution.weights.values, "l1-two"), solution.assignment
    )
    payload = {
        "method": args.variant,
        "signs": solution.assignment.signs.tolist(),
        "weights": group_weights.tolist(),
        "weight_normalization": "group-sums-one",
        "per_period_estimates": None,
        "aggregate": None,
        "rmse": None,
        "objective": solution.objective,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "seed": config.seed,
        "config": _config_echo(config),
    }
    _emit(payload, args.output)
    return 0 if solution.converged else 3


def _write_rows_csv(report, path):
    pd.DataFrame(report.rows()).to_csv(path, index=False)


def _cmd_simulate(args):
    seed = _resolve_seed(args)
    spec = FactorModelSpec(
        n_units=args.n,
        pre_periods=args.t,
        post_periods=args.s,
        latent_dim=args.latent,
        regime=args.regime,
        tau=args.tau,
        noise_sd=args.noise,
        seed=seed,
    )
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_comparison(spec, methods, args.reps, _config(args, args.variant))
    _emit(report.to_json_dict(), args.output)
    if args.csv:
        _write_rows_csv(report, args.csv)
    return 0


def _cmd_evaluate(args):
    panel = load_panel_csv(args.input, _csv_spec(args))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    subsample = None
    if args.subsample_units is not None:
        if args.post is None:
            raise ValueError("--post is required with --subsample-units")
        subsample = SubsampleSpec(args.subsample_units, args.pre, args.post)
    report = run_comparison(panel, methods, args.reps, _config(args), subsample)
    _emit(report.to_json_dict(), args.output)
    if args.csv:
        _write_rows_csv(report, args.csv)
    return 0


def _cmd_oracle(args):
    panel = load_panel_csv(args.input, _csv_spec(args))
    config = _config(args).resolved(panel.pre)
    c = design_mod.build_gram(panel.pre, config.alpha, config.lam)
    result = brute_force_design(c)
    payload = {
        "best_signs": result.best_signs.signs.tolist(),
        "best_value": result.best_value,
        "min_objective": result.min_objective,
        "exact_weights": result.exact_weights.values.tolist(),
        "evaluations": result.evaluations,
        "tie": result.tie,
        "config": _config_echo(config),
    }
    if args.lambda_sweep:
        sweep = lambda_sweep(panel.pre, config.sigma)
        payload["lambda_sweep"] = {
            "lambdas": sweep.lambdas.tolist(),
            "sign_patterns": [s.tolist() for s in sweep.sign_patterns],
            "min_values": sweep.min_values.tolist(),
            "stable_from": sweep.stable_from,
            "ones_balance": sweep.ones_balance,
        }
    _emit(payload, args.output)
    return 0


def self_check(verbose=False):
    """Built-in invariant suite; returns a list of failure descriptions."""
    failures = []

    def note(ok, label):
        if verbose:
            print(("ok   " if ok else "FAIL ") + label)
        if not ok:
            failures.append(label)

    rng = np.random.default_rng(20_240_901)
    for variant in ("spcd", "normspcd"):
        for trial in range(6):
            y = rng.standard_normal((6, 12))
            solution = run_design(y, DesignConfig(variant=variant))
            trace = solution.objective_trace
            monotone = bool(
                np.all(np.diff(trace) >= -1e-12 * np.maximum(np.abs(trace[:-1]), 1.0))
            )
            note(monotone, f"monotone trace {variant} trial {trial}")
            if solution.converged:
                config = DesignConfig(variant=variant).resolved(y)
                c = design_mod.build_gram(y, config.alpha, config.lam)
                c_inv = numerics.invert_spd(c)
                unoriented = design_mod.DesignAssignment(solution.assignment.signs)
                again = design_mod.iterate_step(c_inv, unoriented, config)
                note(
                    bool(np.array_equal(again.signs, unoriented.signs)),
                    f"fixed point {variant} trial {trial}",
                )
    for trial in range(8):
        base = rng.standard_normal((6, 6))
        spd = base @ base.T + 6 * np.eye(6)
        try:
            check_l1_duality(spd, tol=1e-10)
            ok = True
        except SynthDesignError:
            ok = False
        note(ok, f"duality identity trial {trial}")
        result = brute_force_design(spd)
        ok = abs(result.min_objective * result.best_value - 1.0) <= 1e-10
        note(ok, f"value identity trial {trial}")
    inst = generate_realizable(6, 4, 120, epsilon=0.5, noise_sd=0.0, seed=7)
    config = DesignConfig()
    solution = run_design(inst.panel.panel.pre, config)
    truth = inst.true_assignment.signs
    got = solution.assignment.signs
    ok = bool(np.array_equal(got, truth) or np.array_equal(got, -truth))
    note(ok, "noiseless recovery")
    return failures


def _cmd_check(_args):
    failures = self_check(verbose=True)
    if failures:
        print(f"{len(failures)} invariant check(s) failed", file=sys.stderr)
        return 1
    print("all invariant checks passed")
    return 0


_HANDLERS = {
    "design": _cmd_design,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "oracle": _cmd_oracle,
    "check": _cmd_check,
}


def command_surface(argv):
    """Parse and run one command, returning the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](args)
    except TooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, pd.errors.ParserError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SynthDesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(command_surface(sys.argv[1:]))


if __name__ == "__main__":
    main()
