"""Sign-vector experiment design by (normalized) generalized power iterations.

The design problem picks a treated/control split of N units from their
pre-treatment outcome rows Y (N x T). The engine builds the penalized Gram
matrix C = Y Y' + alpha I + lambda 11', starts from the signs of its smallest
eigenvector, and repeats the power step

    spcd:      y  <-  sgn[(inv(C) + beta I) y]
    normspcd:  y  <-  sgn[(inv(C) + beta I) (y / d)],   d = sqrt(diag(inv(C)))

until the sign vector stops changing. Sign vectors live in a quotient space
(y and -y encode the same split); a final orientation pass flips the vector so
that +1 marks the treated group and the treated group is never the larger one.

Throughout the package sgn(0) = +1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import (
    DegenerateDiagonalError,
    DegenerateWeightsError,
    DimensionMismatchError,
    NonFiniteError,
)

VARIANTS = ("spcd", "normspcd")

# Entries of an iterated eigenvector below this relative size are treated as
# zeros (and so take the positive sign) when thresholding to a sign vector.
_ZERO_SNAP_RTOL = 1e-8


class SignCoherenceWarning(UserWarning):
    """Simplified weights disagreed in sign with the assignment somewhere."""


def sgn(x):
    """Elementwise sign with sgn(0) = +1, returned as float +-1."""
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class DesignAssignment:
    """A length-N vector over {-1, +1} splitting units into two groups.

    ``oriented`` records whether the treat-the-smaller-group rule has been
    applied; once it has, +1 marks the treated units.
    """

    signs: np.ndarray
    oriented: bool = False

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.int64)
        if signs.ndim != 1 or signs.size < 2:
            raise ValueError("assignment needs at least 2 units in a 1-D vector")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("assignment entries must be -1 or +1")
        object.__setattr__(self, "signs", signs)

    @property
    def n(self):
        return self.signs.size

    def flipped(self):
        return DesignAssignment(-self.signs, self.oriented)

    def treated_mask(self):
        if not self.oriented:
            raise ValueError("treated group is defined only after orientation")
        return self.signs == 1


@dataclass(frozen=True)
class WeightVector:
    """Non-negative unit weights with a declared normalization.

    normalization:
      * "group-sums-one": weights sum to one within each assignment group,
      * "l1-two": absolute values sum to two,
      * "none": no sum constraint (raw weights, e.g. simulator ground truth).
    """

    values: np.ndarray
    normalization: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("weights must form a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("weights must be finite")
        if np.min(values) < -1e-10:
            raise ValueError("weights must be non-negative")
        if self.normalization not in ("group-sums-one", "l1-two", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class DesignConfig:
    """Hyperparameters for the design engine.

    ``alpha`` (ridge) and ``lam`` (balance penalty) default to None, meaning
    they are chosen from the data scale at run time: alpha = 0.1 * tr(YY')/N
    and lam = 100 * tr(YY')/N. The penalty must dominate the data for the
    sign pattern of the penalized problem to match the constrained one, and
    the ridge keeps the Gram matrix invertible; both are overridable.
    ``beta = 0`` is the pure power step. ``sigma`` weighs the ridge term of
    the exact weight problem and is not used by the power iterations.
    """

    alpha: float | None = None
    lam: float | None = None
    beta: float = 0.0
    sigma: float = 1.0
    variant: str = "normspcd"
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "lam", "beta", "sigma"):
            val = getattr(self, name)
            if val is not None and (not np.isfinite(val) or val < 0):
                raise ValueError(f"{name} must be a non-negative finite number")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.alpha is not None and self.lam is not None:
            if self.alpha == 0.0 and self.lam == 0.0:
                raise ValueError("alpha and lam cannot both be zero")

    def resolved(self, y_matrix):
        """Concrete config with data-scale defaults filled in."""
        if self.alpha is not None and self.lam is not None:
            return self
        y = np.asarray(y_matrix, dtype=float)
        scale = float(np.sum(y * y)) / y.shape[0]
        alpha = 0.1 * scale if self.alpha is None else self.alpha
        lam = 100.0 * scale if self.lam is None else self.lam
        if alpha == 0.0 and lam == 0.0:
            raise ValueError(
                "data-scale defaults degenerate to zero (all-zero outcomes); "
                "pass explicit alpha or lam"
            )
        return replace(self, alpha=alpha, lam=lam)


@dataclass(frozen=True)
class DesignSolution:
    """Everything a finished design run reports."""

    assignment: DesignAssignment
    weights: WeightVector
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    fixed_point_residual: float

    @property
    def objective(self):
        return float(self.objective_trace[-1])


def build_gram(y_matrix, alpha, lam):
    """Penalized Gram matrix C = Y Y' + alpha I + lam 11' over units (rows)."""
    y = np.asarray(y_matrix, dtype=float)
    if y.ndim != 2:
        raise DimensionMismatchError(f"outcome matrix must be 2-D, got shape {y.shape}")
    n, t = y.shape
    if n < 2 or t < 1:
        raise DimensionMismatchError(f"need at least 2 units and 1 period, got {n}x{t}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("outcome matrix contains non-finite entries")
    if not np.isfinite(alpha) or alpha < 0 or not np.isfinite(lam) or lam < 0:
        raise ValueError("alpha and lam must be non-negative finite numbers")
    return y @ y.T + alpha * np.eye(n) + lam * np.ones((n, n))


def spectral_init(c):
    """Initial sign guess from the smallest eigenvector of the Gram matrix.

    Eigenvector entries within round-off of zero take the positive sign.
    """
    pair = numerics.extreme_eigenpair(c, "smallest")
    v = pair.vector.copy()
    v[np.abs(v) <= _ZERO_SNAP_RTOL * np.max(np.abs(v))] = 0.0
    return DesignAssignment(sgn(v).astype(np.int64), oriented=False)


def _normalizing_diagonal(c_inv):
    d = np.sqrt(np.maximum(np.diag(c_inv), 0.0))
    if np.any(d <= 1e-14):
        raise DegenerateDiagonalError("diagonal of inv(C) is too small to normalize by")
    return d


def _step_signs(c_inv, signs, beta, variant, d=None):
    x = signs.astype(float)
    if variant == "normspcd":
        x = x / (d if d is not None else _normalizing_diagonal(c_inv))
    return sgn(c_inv @ x + beta * x).astype(np.int64)


def iterate_step(c_inv, assignment, config):
    """One power step; returns the next (unoriented) assignment."""
    if config.variant not in VARIANTS:
        raise ValueError(f"unknown variant {config.variant!r}")
    signs = _step_signs(c_inv, assignment.signs, config.beta, config.variant)
    return DesignAssignment(signs, oriented=False)


def _objective(c_inv, signs, beta, variant, d=None):
    x = signs.astype(float)
    if variant == "normspcd":
        x = x / (d if d is not None else _normalizing_diagonal(c_inv))
    return float(x @ (c_inv @ x) + beta * (x @ x))


def _iterate_to_fixed_point(c_inv, signs, config):
    """Run power steps until the sign vector repeats exactly.

    Returns (signs, iterations, converged, trace) where ``iterations`` counts
    state-changing steps, so restarting at a fixed point reports 0. The trace
    holds the variant's objective at the initial point and after every change.
    For normspcd the iterates provably never revisit a non-fixed state; a
    visited-state check enforces that on small problems in debug runs.
    """
    d = _normalizing_diagonal(c_inv) if config.variant == "normspcd" else None
    y = signs
    trace = [_objective(c_inv, y, config.beta, config.variant, d)]
    track_visits = __debug__ and y.size <= 24
    visited = {y.tobytes()} if track_visits else None
    for it in range(config.max_iters):
        y_next = _step_signs(c_inv, y, config.beta, config.variant, d)
        if np.array_equal(y_next, y):
            return y, it, True, np.asarray(trace)
        if track_visits:
            key = y_next.tobytes()
            assert key not in visited, "sign iteration revisited a non-fixed state"
            visited.add(key)
        y = y_next
        trace.append(_objective(c_inv, y, config.beta, config.variant, d))
    return y, config.max_iters, False, np.asarray(trace)


def simplified_weights(c_inv, assignment):
    """Closed-form design weights w = 2 inv(C) y / ||inv(C) y||_1.

    Returns the absolute values under the "l1-two" normalization. At a
    converged design the signs of inv(C) y agree with y; when they do not
    (e.g. at an intermediate iterate) a SignCoherenceWarning is emitted.
    """
    u = c_inv @ assignment.signs.astype(float)
    l1 = float(np.sum(np.abs(u)))
    if l1 <= 1e-14:
        raise DegenerateWeightsError("inv(C) y vanished; cannot normalize weights")
    if not np.array_equal(sgn(u), assignment.signs.astype(float)):
        warnings.warn(
            "sign pattern of inv(C) y disagrees with the assignment",
            SignCoherenceWarning,
            stacklevel=2,
        )
    return WeightVector(np.abs(2.0 * u / l1), "l1-two")


def orient(assignment):
    """Flip the sign vector, if needed, so +1 marks the (smaller) treated group.

    The treated label is -sgn(sum(y)); on a tie the +1 group is treated. Both
    labelings encode the same split, so the flip stays within the quotient
    class.
    """
    if assignment.oriented:
        raise ValueError("assignment is already oriented")
    total = int(np.sum(assignment.signs))
    signs = -assignment.signs if total > 0 else assignment.signs
    return DesignAssignment(signs, oriented=True)


def run_design(y_matrix, config=DesignConfig()):
    """Full design pipeline on pre-treatment outcomes Y (units x periods).

    Builds the penalized Gram matrix, seeds the signs from its smallest
    eigenvector, iterates the configured power step to a fixed point (or the
    iteration cap, reported via ``converged=False`` rather than an error),
    attaches the simplified closed-form weights, and orients the result.
    """
    cfg = config.resolved(y_matrix)
    c = build_gram(y_matrix, cfg.alpha, cfg.lam)
    c_inv = numerics.invert_spd(c)
    y0 = spectral_init(c)
    signs, iterations, converged, trace = _iterate_to_fixed_point(c_inv, y0.signs, cfg)
    residual = float(np.sum(_step_signs(c_inv, signs, cfg.beta, cfg.variant) != signs))
    weights = simplified_weights(c_inv, DesignAssignment(signs))
    return DesignSolution(
        assignment=orient(DesignAssignment(signs)),
        weights=weights,
        iterations=iterations,
        converged=converged,
        objective_trace=trace,
        fixed_point_residual=residual,
    )
