"""Exact convex weight problems over probability simplices.

Given a fixed treated/control split, the design weights solve

    min_w  (1/T) sum_t (sum_treated w_i Y_it - sum_control w_i Y_it)^2
           + sigma * sum_i w_i^2
    s.t.   w >= 0,  sum_treated w = sum_control w = 1,

a small dense QP over a product of two simplices. The same projected-gradient
core also fits classic synthetic-control donor weights (one simplex, squared
pre-period tracking error). The solver is FISTA with a fixed 1/L step and a
restart whenever momentum would increase the objective, so the objective
trajectory is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .design import WeightVector
from .errors import EmptyGroupError, NoConvergenceError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 100_000


@dataclass(frozen=True)
class QpSolveStats:
    iterations: int
    kkt_residual: float
    objective: float


def project_simplex(x):
    """Euclidean projection onto {z >= 0, sum(z) = 1} by sort-and-threshold."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("projection input must be a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("projection input must be finite")
    u = np.sort(x)[::-1]
    shifted = np.cumsum(u) - 1.0
    counts = np.arange(1, x.size + 1)
    rho = counts[u - shifted / counts > 0][-1]
    theta = shifted[rho - 1] / rho
    return np.maximum(x - theta, 0.0)


def _project_blocks(x, blocks):
    out = np.empty_like(x)
    for idx in blocks:
        out[idx] = project_simplex(x[idx])
    return out


def _apg(grad, objective, x0, blocks, lipschitz, tol, max_iters, history=None):
    """FISTA over a product of simplices with restart-on-increase.

    Stops when the gradient-mapping norm falls under tol * (1 + |objective|).
    Raises NoConvergenceError carrying the best iterate when the cap is hit.
    """
    step = 1.0 / lipschitz
    x = _project_blocks(np.asarray(x0, dtype=float), blocks)
    f_x = objective(x)
    if history is not None:
        history.append(f_x)
    z = x.copy()
    t = 1.0
    kkt = np.inf
    for it in range(1, max_iters + 1):
        # Round-off sized increases count as monotone, else the iterate can
        # freeze just short of the stopping tolerance.
        slack = 1e-14 * (1.0 + abs(f_x))
        x_new = _project_blocks(z - step * grad(z), blocks)
        f_new = objective(x_new)
        if f_new > f_x + slack:
            # Momentum overshot: restart from the last monotone point.
            x_new = _project_blocks(x - step * grad(x), blocks)
            f_new = objective(x_new)
            if f_new > f_x + slack:
                x_new, f_new = x, f_x
            t = 1.0
        kkt = (
            float(np.linalg.norm(x_new - _project_blocks(x_new - step * grad(x_new), blocks)))
            / step
        )
        if history is not None:
            history.append(f_new)
        if kkt <= tol * (1.0 + abs(f_new)):
            return x_new, QpSolveStats(it, kkt, f_new)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_next) * (x_new - x)
        x, f_x, t = x_new, f_new, t_next
    raise NoConvergenceError(
        f"projected gradient stalled at kkt residual {kkt:.3e} after {max_iters} iterations",
        result=x,
        stats=QpSolveStats(max_iters, kkt, f_x),
    )


def _gram_norm(y):
    """Spectral norm of Y Y' (zero for all-zero Y)."""
    g = y @ y.T
    if not np.any(g):
        return 0.0
    return numerics.extreme_eigenpair(g, "largest", tol=1e-9).value


def solve_design_weights(
    y_matrix, assignment, sigma, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS
):
    """Exact weights for a fixed split; returns (WeightVector, QpSolveStats).

    ``sigma`` is the ridge coefficient; with sigma = 0 the minimizer may be
    non-unique, in which case the iteration deterministically returns the one
    reached from uniform starting weights.
    """
    y = np.asarray(y_matrix, dtype=float)
    if y.ndim != 2 or y.shape[0] != assignment.n:
        raise ValueError(
            f"outcome matrix shape {y.shape} does not match assignment of {assignment.n} units"
        )
    if not np.all(np.isfinite(y)):
        raise ValueError("outcome matrix contains non-finite entries")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    signs = assignment.signs.astype(float)
    treated = np.flatnonzero(assignment.signs == 1)
    control = np.flatnonzero(assignment.signs == -1)
    if treated.size == 0 or control.size == 0:
        raise EmptyGroupError("both groups must be non-empty to fit design weights")
    t_periods = y.shape[1]

    def grad(w):
        gap = y.T @ (w * signs)
        return (2.0 / t_periods) * signs * (y @ gap) + 2.0 * sigma * w

    def objective(w):
        gap = y.T @ (w * signs)
        return float(gap @ gap) / t_periods + sigma * float(w @ w)

    lipschitz = 2.0 * _gram_norm(y) / t_periods + 2.0 * sigma
    if lipschitz <= 0.0:
        # Constant objective: every feasible point is optimal.
        w = np.zeros(assignment.n)
        w[treated] = 1.0 / treated.size
        w[control] = 1.0 / control.size
        return WeightVector(w, "group-sums-one"), QpSolveStats(0, 0.0, 0.0)
    lipschitz *= 1.0 + 1e-6

    x0 = np.zeros(assignment.n)
    x0[treated] = 1.0 / treated.size
    x0[control] = 1.0 / control.size
    w, stats = _apg(grad, objective, x0, [treated, control], lipschitz, tol, max_iters)
    return WeightVector(w, "group-sums-one"), stats


def fit_sc_weights(y_pre, treated_unit, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS):
    """Classic synthetic-control donor weights for one treated unit.

    Minimizes the mean squared pre-period tracking error of the treated row
    against a convex combination of the remaining rows. Returns a WeightVector
    over the N-1 donors in their original row order.
    """
    y = np.asarray(y_pre, dtype=float)
    if y.ndim != 2 or y.shape[0] < 2:
        raise ValueError(f"need at least 2 units, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("outcome matrix contains non-finite entries")
    n = y.shape[0]
    if not 0 <= treated_unit < n:
        raise ValueError(f"treated unit {treated_unit} out of range for {n} units")
    target = y[treated_unit]
    donors = np.delete(y, treated_unit, axis=0)
    t_periods = y.shape[1]

    def grad(w):
        return (2.0 / t_periods) * donors @ (donors.T @ w - target)

    def objective(w):
        r = donors.T @ w - target
        return float(r @ r) / t_periods

    lipschitz = 2.0 * _gram_norm(donors) / t_periods
    if lipschitz <= 0.0:
        w = np.full(n - 1, 1.0 / (n - 1))
        return WeightVector(w, "group-sums-one")
    lipschitz *= 1.0 + 1e-6

    x0 = np.full(n - 1, 1.0 / (n - 1))
    w, _ = _apg(grad, objective, x0, [np.arange(n - 1)], lipschitz, tol, max_iters)
    return WeightVector(w, "group-sums-one")
