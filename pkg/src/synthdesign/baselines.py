"""Comparison designs: coin-flip assignment, rerandomization, classic SC.

Rerandomization scores candidate splits by the pre-period mean-gap balance

    (1/T) sum_t (mean_treated Y_t - mean_control Y_t)^2

with uniform weights inside each group, and keeps the best of K draws. Draws
come from a single seeded stream, so a longer run extends a shorter one and
its best metric can only improve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance_qp import fit_sc_weights
from .design import DesignAssignment, WeightVector, orient

_CHUNK = 8192


@dataclass(frozen=True)
class RerandSpec:
    draws: int
    seed: int = 0
    balance_metric: str = "uniform-mean-gap"

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError("draws must be at least 1")
        if self.balance_metric != "uniform-mean-gap":
            raise ValueError(f"unknown balance metric {self.balance_metric!r}")


def _uniform_group_weights(signs):
    w = np.empty(signs.size, dtype=float)
    treated = signs == 1
    w[treated] = 1.0 / np.count_nonzero(treated)
    w[~treated] = 1.0 / np.count_nonzero(~treated)
    return WeightVector(w, "group-sums-one")


def _draw_signs(rng, n):
    """One i.i.d. +-1 draw, redrawn until both groups are non-empty."""
    while True:
        signs = rng.integers(0, 2, size=n) * 2 - 1
        if not np.all(signs == signs[0]):
            return signs


def random_design(n_units, seed):
    """Coin-flip split with uniform within-group weights, oriented."""
    if n_units < 2:
        raise ValueError("need at least 2 units")
    rng = np.random.default_rng(seed)
    signs = _draw_signs(rng, n_units)
    assignment = orient(DesignAssignment(signs))
    return assignment, _uniform_group_weights(assignment.signs)


def balance_metric(y_pre, signs):
    """Uniform-weights mean-gap balance of one split on pre-period outcomes."""
    y = np.asarray(y_pre, dtype=float)
    treated = signs == 1
    gap = y[treated].mean(axis=0) - y[~treated].mean(axis=0)
    return float(gap @ gap) / y.shape[1]


def _metric_block(y_pre, signs_block):
    """Balance metric for a block of sign rows at once."""
    treated = (signs_block == 1).astype(float)
    n_treated = treated.sum(axis=1)
    n_control = signs_block.shape[1] - n_treated
    sum_all = y_pre.sum(axis=0)
    sum_treated = treated @ y_pre
    gaps = sum_treated / n_treated[:, None] - (sum_all - sum_treated) / n_control[:, None]
    return np.einsum("ij,ij->i", gaps, gaps) / y_pre.shape[1]


def rerandomize(y_pre, spec):
    """Best-balance split among ``spec.draws`` coin-flip candidates.

    Ties go to the earliest draw. Returns the oriented winner with uniform
    within-group weights.

    Draws are taken from the seeded stream in fixed-size blocks so that runs
    with the same seed are nested: the first K draws of a longer run coincide
    with a K-draw run, and the best metric is non-increasing in K. Degenerate
    draws (one empty group) are redrawn from a substream derived from the
    draw's index, which keeps that nesting exact.
    """
    y = np.asarray(y_pre, dtype=float)
    n = y.shape[0]
    if n < 2:
        raise ValueError("need at least 2 units")
    rng = np.random.default_rng(spec.seed)
    best_signs = None
    best_metric = np.inf
    drawn = 0
    while drawn < spec.draws:
        want = min(_CHUNK, spec.draws - drawn)
        block = rng.integers(0, 2, size=(_CHUNK, n)) * 2 - 1
        block = block[:want]
        degenerate = np.all(block == block[:, :1], axis=1)
        for i in np.flatnonzero(degenerate):
            repair = np.random.default_rng(
                np.random.SeedSequence(entropy=spec.seed, spawn_key=(drawn + int(i),))
            )
            block[i] = _draw_signs(repair, n)
        metrics = _metric_block(y, block)
        i = int(np.argmin(metrics))
        if metrics[i] < best_metric:
            best_metric = float(metrics[i])
            best_signs = block[i].copy()
        drawn += want
    assignment = orient(DesignAssignment(best_signs))
    return assignment, _uniform_group_weights(assignment.signs)


def classic_sc(panel, seed):
    """Classic synthetic control: one random treated unit plus fitted donors.

    Returns (treated_unit_index, donor WeightVector); the donor weights are in
    the original row order with the treated row removed.
    """
    if panel.n_units < 2:
        raise ValueError("need at least 2 units")
    rng = np.random.default_rng(seed)
    treated_unit = int(rng.integers(panel.n_units))
    weights = fit_sc_weights(panel.pre, treated_unit)
    return treated_unit, weights
