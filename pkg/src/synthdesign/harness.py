"""Treatment injection, effect estimation, and paired method comparisons.

The estimator is the difference in weighted means over post periods,

    tau_hat_t = sum_treated w_i Y_it - sum_control w_i Y_it,

with weights summing to one inside each group, aggregated by averaging over
the S post periods. In simulation mode the harness adds the known effect to
the treated units' post outcomes right before estimation, so a single
generated panel serves every compared method with identical noise.

Real panels are evaluated as placebos: nothing is injected, the true effect
is zero, and the root-mean-square error measures pure estimator noise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .baselines import RerandSpec, classic_sc, random_design, rerandomize
from .design import DesignAssignment, DesignConfig, WeightVector, run_design
from .errors import EmptySequenceError, NormalizationMismatchError
from .panel import PanelData
from .simulate import FactorModelSpec, SimulatedPanel, generate_panel

KNOWN_METHODS = ("spcd", "normspcd", "random", "sc")  # plus "rerand:K"


def _group_form(weights, assignment):
    """Weights normalized to sum to one within each assignment group."""
    values = weights.values
    if values.size != assignment.n:
        raise ValueError(
            f"{values.size} weights do not match assignment of {assignment.n} units"
        )
    treated = assignment.treated_mask()
    s_treated = float(values[treated].sum())
    s_control = float(values[~treated].sum())
    if weights.normalization == "group-sums-one":
        if abs(s_treated - 1.0) > 1e-8 or abs(s_control - 1.0) > 1e-8:
            raise NormalizationMismatchError(
                f"group sums ({s_treated!r}, {s_control!r}) are not one"
            )
        return values
    if weights.normalization == "l1-two":
        total = float(np.sum(np.abs(values)))
        if abs(total - 2.0) > 1e-10:
            raise NormalizationMismatchError(f"absolute sum {total!r} is not two")
    if s_treated <= 1e-14 or s_control <= 1e-14:
        raise NormalizationMismatchError("a group's weight mass vanished")
    out = values.copy()
    out[treated] /= s_treated
    out[~treated] /= s_control
    return out


def estimate_effect(panel, assignment, weights, tau_injected=None):
    """Per-period and averaged effect estimates on the post block.

    The assignment must be oriented. Weights arrive in any declared
    normalization; non-group forms are split by group and renormalized first.
    With ``tau_injected`` set, that effect is added to the treated units'
    post-period outcomes before estimating (simulation mode).
    """
    if not assignment.oriented:
        raise ValueError("assignment must be oriented before estimation")
    if panel.n_units != assignment.n:
        raise ValueError(
            f"panel has {panel.n_units} units but assignment has {assignment.n}"
        )
    if panel.n_post == 0:
        raise EmptySequenceError("panel has no post periods to estimate on")
    w = _group_form(weights, assignment)
    treated = assignment.treated_mask()
    y_post = panel.post
    if tau_injected is not None:
        y_post = y_post + float(tau_injected) * treated[:, None]
    signed = np.where(treated, w, -w)
    per_period = signed @ y_post
    return per_period, float(per_period.mean())


def rmse(per_period, tau_true):
    """Root mean squared deviation of per-period estimates from the truth."""
    estimates = np.asarray(per_period, dtype=float)
    if estimates.size == 0:
        raise EmptySequenceError("no per-period estimates to score")
    return float(np.sqrt(np.mean((estimates - tau_true) ** 2)))


@dataclass(frozen=True)
class SubsampleSpec:
    """Per-replication subsampling: a random unit subset on a random
    contiguous window, the first ``pre_periods`` of which drive the design."""

    n_units: int
    pre_periods: int
    post_periods: int

    def __post_init__(self):
        if self.n_units < 2 or self.pre_periods < 1 or self.post_periods < 1:
            raise ValueError("subsample needs >= 2 units and >= 1 pre/post periods")


@dataclass(frozen=True)
class MethodRecord:
    """One method on one replication."""

    method: str
    replication: int
    seed: int
    signs: np.ndarray
    weights: np.ndarray
    weight_normalization: str
    per_period: np.ndarray
    aggregate: float
    rmse: float
    objective: float | None
    iterations: int | None
    converged: bool | None
    wall_clock: float


@dataclass(frozen=True)
class MethodSummary:
    method: str
    replications: int
    rmse_mean: float
    rmse_ci_low: float
    rmse_ci_high: float
    aggregate_mean: float


@dataclass(frozen=True)
class ExperimentReport:
    records: list
    summaries: dict
    methods: tuple
    replications: int
    tau_true: float
    master_seed: int
    config: DesignConfig

    def rows(self):
        """Flat per-replication dict rows for CSV export."""
        return [
            {
                "method": r.method,
                "replication": r.replication,
                "seed": r.seed,
                "rmse": r.rmse,
                "aggregate": r.aggregate,
                "objective": r.objective,
                "iterations": r.iterations,
                "converged": r.converged,
                "wall_clock": r.wall_clock,
            }
            for r in self.records
        ]

    def to_json_dict(self):
        return {
            "methods": list(self.methods),
            "replications": self.replications,
            "tau_true": self.tau_true,
            "seed": self.master_seed,
            "config": _config_dict(self.config),
            "summaries": {
                m: {
                    "rmse_mean": s.rmse_mean,
                    "rmse_ci_low": s.rmse_ci_low,
                    "rmse_ci_high": s.rmse_ci_high,
                    "aggregate_mean": s.aggregate_mean,
                    "replications": s.replications,
                }
                for m, s in self.summaries.items()
            },
            "records": [
                {
                    "method": r.method,
                    "replication": r.replication,
                    "seed": r.seed,
                    "signs": r.signs.tolist(),
                    "weights": r.weights.tolist(),
                    "weight_normalization": r.weight_normalization,
                    "per_period_estimates": r.per_period.tolist(),
                    "aggregate": r.aggregate,
                    "rmse": r.rmse,
                    "objective": r.objective,
                    "iterations": r.iterations,
                    "converged": r.converged,
                    "wall_clock": r.wall_clock,
                }
                for r in self.records
            ],
        }


def _config_dict(config):
    return {
        "alpha": config.alpha,
        "lambda": config.lam,
        "beta": config.beta,
        "sigma": config.sigma,
        "variant": config.variant,
        "max_iters": config.max_iters,
        "seed": config.seed,
    }


def parse_method(spec):
    """Validate a method name, returning (kind, rerand_draws_or_None)."""
    if spec in ("spcd", "normspcd", "random", "sc"):
        return spec, None
    if spec.startswith("rerand:"):
        draws = int(spec.split(":", 1)[1])
        if draws < 1:
            raise ValueError("rerandomization draw count must be positive")
        return "rerand", draws
    raise ValueError(f"unknown method {spec!r}")


def _run_method(method, panel, config, seed):
    """Returns (assignment, weights, objective, iterations, converged)."""
    kind, draws = parse_method(method)
    if kind in ("spcd", "normspcd"):
        solution = run_design(panel.pre, replace(config, variant=kind))
        return (
            solution.assignment,
            solution.weights,
            solution.objective,
            solution.iterations,
            solution.converged,
        )
    if kind == "random":
        assignment, weights = random_design(panel.n_units, seed)
        return assignment, weights, None, None, None
    if kind == "rerand":
        assignment, weights = rerandomize(panel.pre, RerandSpec(draws=draws, seed=seed))
        return assignment, weights, None, None, None
    treated_unit, donor_weights = classic_sc(panel, seed)
    signs = np.full(panel.n_units, -1, dtype=np.int64)
    signs[treated_unit] = 1
    values = np.insert(donor_weights.values, treated_unit, 1.0)
    return (
        DesignAssignment(signs, oriented=True),
        WeightVector(values, "group-sums-one"),
        None,
        None,
        None,
    )


def _seed_int(seed_seq):
    return int(seed_seq.generate_state(1, np.uint64)[0])


def _materialize(source, seed_seq, subsample):
    """Per-replication panel plus (tau_true, tau_injected)."""
    if isinstance(source, FactorModelSpec):
        sim = generate_panel(replace(source, seed=_seed_int(seed_seq)))
        return sim.panel, sim.truth, sim.truth
    if isinstance(source, SimulatedPanel):
        return source.panel, source.truth, source.truth
    if not isinstance(source, PanelData):
        raise TypeError(f"unsupported source type {type(source).__name__}")
    if subsample is None:
        return source, 0.0, None
    window = subsample.pre_periods + subsample.post_periods
    if subsample.n_units > source.n_units or window > source.n_periods:
        raise ValueError("subsample does not fit inside the source panel")
    rng = np.random.default_rng(seed_seq)
    units = np.sort(rng.choice(source.n_units, size=subsample.n_units, replace=False))
    start = int(rng.integers(0, source.n_periods - window + 1))
    sub = PanelData(
        source.outcomes[np.ix_(units, range(start, start + window))],
        tuple(source.units[i] for i in units),
        source.periods[start : start + window],
        subsample.pre_periods,
    )
    return sub, 0.0, None


def run_comparison(source, methods, replications, config=DesignConfig(), subsample=None):
    """Evaluate several methods on shared per-replication panels.

    ``source`` is a PanelData (placebo evaluation, optionally subsampled per
    replication), a SimulatedPanel (fixed panel, known effect), or a
    FactorModelSpec (fresh panel per replication, known effect). All methods
    within a replication see the identical panel; stochastic methods get
    per-replication seeds split off the master seed in ``config.seed``.
    """
    methods = tuple(methods)
    if not methods:
        raise ValueError("need at least one method")
    for m in methods:
        parse_method(m)
    if replications < 1:
        raise ValueError("replications must be at least 1")
    records = []
    tau_true = 0.0
    rep_seqs = np.random.SeedSequence(config.seed).spawn(replications)
    for rep in range(replications):
        children = rep_seqs[rep].spawn(1 + len(methods))
        panel, tau_true, tau_injected = _materialize(source, children[0], subsample)
        for i, method in enumerate(methods):
            seed = _seed_int(children[1 + i])
            start = time.perf_counter()
            assignment, weights, objective, iterations, converged = _run_method(
                method, panel, config, seed
            )
            per_period, aggregate = estimate_effect(
                panel, assignment, weights, tau_injected
            )
            elapsed = time.perf_counter() - start
            records.append(
                MethodRecord(
                    method=method,
                    replication=rep,
                    seed=seed,
                    signs=assignment.signs,
                    weights=weights.values,
                    weight_normalization=weights.normalization,
                    per_period=per_period,
                    aggregate=aggregate,
                    rmse=rmse(per_period, tau_true),
                    objective=objective,
                    iterations=iterations,
                    converged=converged,
                    wall_clock=elapsed,
                )
            )
    summaries = {}
    for method in methods:
        errs = np.array([r.rmse for r in records if r.method == method])
        aggs = np.array([r.aggregate for r in records if r.method == method])
        mean = float(errs.mean())
        if errs.size > 1:
            half = 1.96 * float(errs.std(ddof=1)) / np.sqrt(errs.size)
        else:
            half = 0.0
        summaries[method] = MethodSummary(
            method=method,
            replications=int(errs.size),
            rmse_mean=mean,
            rmse_ci_low=mean - half,
            rmse_ci_high=mean + half,
            aggregate_mean=float(aggs.mean()),
        )
    return ExperimentReport(
        records=records,
        summaries=summaries,
        methods=methods,
        replications=replications,
        tau_true=tau_true,
        master_seed=config.seed,
        config=config,
    )
