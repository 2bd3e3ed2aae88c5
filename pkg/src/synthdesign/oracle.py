"""Exhaustive ground truth for small design problems.

A split y in {-1,+1}^N maximizing y' inv(C) y is found by enumerating the
2^(N-1) sign patterns with the first entry pinned to +1 (y and -y are the
same split). For each candidate the best feasible weight vector has the
closed form W proportional to inv(C) y, which makes the enumeration exact:
the global minimum of min_{||W||_1 = 1} W' C W equals 1 / max_y y' inv(C) y,
and the sweep/duality helpers check the identities behind that reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .design import DesignAssignment, WeightVector
from .errors import DualityGapError, TooLargeError

DEFAULT_CAP = 20

_TIE_RTOL = 1e-12

_CHUNK_BITS = 14


def _sign_chunks(n):
    """Yield blocks of sign rows covering {+1} x {-1,+1}^(n-1) in index order.

    Row k has entry j+1 equal to +1 when bit j of k is 0, so the all-plus
    vector comes first and ties resolve to the lowest enumeration index.
    """
    total = 1 << (n - 1)
    block = 1 << min(_CHUNK_BITS, n - 1)
    bits = np.arange(n - 1, dtype=np.int64)
    for start in range(0, total, block):
        k = np.arange(start, min(start + block, total), dtype=np.int64)
        rows = np.empty((k.size, n), dtype=np.int64)
        rows[:, 0] = 1
        rows[:, 1:] = 1 - 2 * ((k[:, None] >> bits) & 1)
        yield rows


@dataclass(frozen=True)
class OracleResult:
    """Global enumeration outcome for one Gram matrix."""

    best_signs: DesignAssignment
    best_value: float
    exact_weights: WeightVector
    evaluations: int
    min_objective: float
    tie: bool


def brute_force_design(c, cap=DEFAULT_CAP):
    """Globally best split for the Gram matrix ``c`` by sign enumeration.

    Raises TooLargeError when the matrix order exceeds ``cap``.
    """
    c = numerics.check_symmetric(c)
    n = c.shape[0]
    if n > cap:
        raise TooLargeError(f"{n} units exceed the enumeration cap of {cap}")
    if n < 2:
        raise ValueError("need at least 2 units")
    c_inv = numerics.invert_spd(c)
    values = np.empty(1 << (n - 1))
    pos = 0
    for rows in _sign_chunks(n):
        x = rows.astype(float)
        values[pos : pos + rows.shape[0]] = np.einsum("ij,jk,ik->i", x, c_inv, x)
        pos += rows.shape[0]
    best_idx = int(np.argmax(values))
    best_value = float(values[best_idx])
    tie = int(np.sum(values >= best_value - _TIE_RTOL * abs(best_value))) > 1

    bits = np.arange(n - 1)
    signs = np.empty(n, dtype=np.int64)
    signs[0] = 1
    signs[1:] = 1 - 2 * ((best_idx >> bits) & 1)
    u = c_inv @ signs.astype(float)
    l1 = float(np.sum(np.abs(u)))
    w_unit = u / l1
    min_objective = float(w_unit @ (c @ w_unit))
    return OracleResult(
        best_signs=DesignAssignment(signs, oriented=False),
        best_value=best_value,
        exact_weights=WeightVector(np.abs(2.0 * u / l1), "l1-two"),
        evaluations=1 << (n - 1),
        min_objective=min_objective,
        tie=tie,
    )


def check_l1_duality(t_mat, tol=1e-10, cap=DEFAULT_CAP):
    """Verify max_{||x||_2=1} ||T x||_1 = max_y ||T' y||_2 by enumeration.

    The left side is evaluated as the best ||T' y||_2 over sign vectors, the
    right side as ||T x*||_1 at the witness x* = T' y* / ||T' y*||_2. Returns
    (lhs, rhs); raises DualityGapError when they differ beyond
    tol * (1 + |lhs|).
    """
    t = np.array(t_mat, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("matrix entries must be finite")
    n = t.shape[0]
    if n > cap:
        raise TooLargeError(f"{n} units exceed the enumeration cap of {cap}")
    best_norm = -np.inf
    best_row = None
    for rows in _sign_chunks(n):
        prods = rows.astype(float) @ t
        norms = np.einsum("ij,ij->i", prods, prods)
        i = int(np.argmax(norms))
        if norms[i] > best_norm:
            best_norm = norms[i]
            best_row = rows[i].astype(float)
    lhs = float(np.sqrt(best_norm))
    witness = t.T @ best_row
    x_star = witness / np.linalg.norm(witness)
    rhs = float(np.sum(np.abs(t @ x_star)))
    if abs(lhs - rhs) > tol * (1.0 + abs(lhs)):
        raise DualityGapError(f"norm identity violated: lhs={lhs!r} rhs={rhs!r}")
    return lhs, rhs


@dataclass(frozen=True)
class LambdaSweepResult:
    """Per-lambda oracle solutions of the penalized problem plus stabilization.

    ``weights`` holds the signed minimizers W of W'(YY' + sigma I + lam 11')W
    over ||W||_1 = 1. ``stable_from`` is the smallest grid lambda from which
    the sign pattern stays constant through the end of the grid, and
    ``ones_balance`` is |1'W| at the largest lambda.
    """

    lambdas: np.ndarray
    sign_patterns: list
    weights: list
    min_values: np.ndarray
    stable_from: float
    ones_balance: float


def default_lambda_grid(y_matrix, points=9, low_exp=0.0, high_exp=8.0):
    """Geometric lambda grid scaled by the data's mean squared row norm."""
    y = np.asarray(y_matrix, dtype=float)
    scale = float(np.sum(y * y)) / y.shape[0]
    if scale == 0.0:
        scale = 1.0
    return scale * np.logspace(low_exp, high_exp, points)


def lambda_sweep(y_matrix, sigma, grid=None, cap=DEFAULT_CAP):
    """Exact solutions of the penalized problem along an increasing lambda grid."""
    y = np.asarray(y_matrix, dtype=float)
    if y.ndim != 2:
        raise ValueError(f"outcome matrix must be 2-D, got shape {y.shape}")
    n = y.shape[0]
    if n > cap:
        raise TooLargeError(f"{n} units exceed the enumeration cap of {cap}")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    grid = default_lambda_grid(y) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty increasing sequence")
    gram = y @ y.T
    patterns = []
    weights = []
    min_values = np.empty(grid.size)
    for j, lam in enumerate(grid):
        c = gram + sigma * np.eye(n) + lam * np.ones((n, n))
        result = brute_force_design(c, cap=cap)
        signs = result.best_signs.signs
        u = numerics.invert_spd(c) @ signs.astype(float)
        w = u / np.sum(np.abs(u))
        patterns.append(signs)
        weights.append(w)
        min_values[j] = result.min_objective
    last = patterns[-1]
    stable_idx = 0
    for j in range(grid.size - 1, -1, -1):
        if not np.array_equal(patterns[j], last):
            stable_idx = j + 1
            break
    return LambdaSweepResult(
        lambdas=grid,
        sign_patterns=patterns,
        weights=weights,
        min_values=min_values,
        stable_from=float(grid[min(stable_idx, grid.size - 1)]),
        ones_balance=float(abs(np.sum(weights[-1]))),
    )
