"""Panel generators under a linear latent factor model.

Untreated outcomes follow Y[i, t] = f_t . g_i + noise, with unit factors g_i
standard Gaussian and the time factor path f_t drawn per regime:

  * "random": f_t i.i.d. standard Gaussian,
  * "trend":  f_t = (t - (T+S)/2) * 1 + eps_t, a linear drift plus noise,
  * "ar1":    f_1 ~ N(0, I), f_{t+1} = ar_coef * f_t + ar_drift * 1 + sd * eps.

Generators emit *untreated* potential outcomes only; the evaluation harness
injects the treatment effect into whichever units a design later treats, so
one panel serves every compared method with identical noise draws.

``generate_realizable`` additionally constructs instances with a known exactly
balancing sign/weight pair: the unit factors are orthogonalized against
v = w * D, so the weighted factor difference between groups vanishes and the
instance has a zero-error design by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .design import DesignAssignment, WeightVector
from .errors import InfeasibleEpsilonError
from .panel import PanelData

REGIMES = ("random", "trend", "ar1")


@dataclass(frozen=True)
class FactorModelSpec:
    """Shape, regime, and noise parameters for one simulated panel.

    ``noise_sd`` scales the idiosyncratic outcome noise. ``factor_noise_sd``
    scales the innovation noise inside the trend/ar1 factor paths; leaving it
    at None reuses ``noise_sd``, so a noiseless spec has exactly deterministic
    factor paths as well.
    """

    n_units: int
    pre_periods: int
    post_periods: int
    latent_dim: int
    regime: str = "random"
    tau: float = 1.0
    noise_sd: float = 1.0
    factor_noise_sd: float | None = None
    ar_coef: float = 0.7
    ar_drift: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 2 or self.pre_periods < 1 or self.post_periods < 1:
            raise ValueError("need n_units >= 2, pre_periods >= 1, post_periods >= 1")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be at least 1")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.noise_sd < 0 or (self.factor_noise_sd is not None and self.factor_noise_sd < 0):
            raise ValueError("noise scales must be non-negative")
        if self.regime == "ar1" and abs(self.ar_coef) >= 1:
            warnings.warn(
                f"ar_coef {self.ar_coef} is not contracting; factor path may diverge",
                stacklevel=2,
            )

    @property
    def total_periods(self):
        return self.pre_periods + self.post_periods


@dataclass(frozen=True)
class SimulatedPanel:
    """A generated panel plus the ground truth behind it."""

    panel: PanelData
    truth: float
    unit_factors: np.ndarray
    time_factors: np.ndarray


@dataclass(frozen=True)
class RealizableInstance:
    """A panel with a known sign/weight pair that balances the factors exactly."""

    panel: SimulatedPanel
    true_assignment: DesignAssignment
    true_weights: WeightVector
    epsilon_bound: float


def _time_factor_path(spec, rng):
    total, dim = spec.total_periods, spec.latent_dim
    factor_sd = spec.noise_sd if spec.factor_noise_sd is None else spec.factor_noise_sd
    if spec.regime == "random":
        return rng.standard_normal((total, dim))
    if spec.regime == "trend":
        drift = np.arange(1, total + 1, dtype=float) - total / 2.0
        return drift[:, None] + factor_sd * rng.standard_normal((total, dim))
    path = np.empty((total, dim))
    path[0] = rng.standard_normal(dim)
    for t in range(total - 1):
        path[t + 1] = (
            spec.ar_coef * path[t]
            + spec.ar_drift
            + factor_sd * rng.standard_normal(dim)
        )
    return path


def generate_panel(spec):
    """Draw one untreated panel; a fixed seed gives a bit-identical result."""
    rng = np.random.default_rng(spec.seed)
    time_factors = _time_factor_path(spec, rng)
    unit_factors = rng.standard_normal((spec.n_units, spec.latent_dim))
    outcomes = unit_factors @ time_factors.T
    if spec.noise_sd > 0:
        outcomes = outcomes + spec.noise_sd * rng.standard_normal(outcomes.shape)
    units = tuple(f"unit{i:03d}" for i in range(spec.n_units))
    periods = tuple(range(spec.total_periods))
    panel = PanelData(outcomes, units, periods, spec.pre_periods)
    return SimulatedPanel(panel, spec.tau, unit_factors, time_factors)


def _draw_balanced_weights(n, epsilon, rng, attempts=10_000):
    """Signs and positive weights with equal group sums, ||w||^2 = n, and
    epsilon <= w_i <= 1/epsilon, by rejection sampling."""
    lo, hi = epsilon, 1.0 / epsilon
    # Sample inside a narrowed band so the rescaling steps rarely escape it.
    mid_lo, mid_hi = lo + 0.3 * (1.0 - lo), 1.0 + 0.3 * (hi - 1.0)
    for _ in range(attempts):
        signs = rng.choice([-1, 1], size=n)
        if np.all(signs == signs[0]):
            continue
        w = rng.uniform(mid_lo, mid_hi, size=n)
        treated = signs == 1
        w[~treated] *= w[treated].sum() / w[~treated].sum()
        w *= np.sqrt(n / (w @ w))
        if np.all((w >= lo) & (w <= hi)):
            return signs.astype(np.int64), w
    raise InfeasibleEpsilonError(
        f"could not satisfy weight bounds [{lo:.3g}, {hi:.3g}] in {attempts} attempts"
    )


def generate_realizable(
    n_units, latent_dim, pre_periods, epsilon, noise_sd, seed, post_periods=5
):
    """Instance with a known exactly balancing design.

    Draws signs D and weights w with sum(w * D) = 0 and the magnitude bounds,
    then orthogonalizes every unit-factor column against v = w * D so the
    weighted between-group factor difference is zero. The outcome model also
    carries a time fixed effect, i.e. an all-ones factor column, which v
    balances exactly because its group sums match. With latent_dim = N - 2
    the augmented factor matrix has rank N - 1, making v the unique balanced
    direction and the zero-error design unique; smaller latent dimensions
    leave extra balanced directions and are only useful for identity checks.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if latent_dim > n_units - 2:
        raise ValueError(
            "latent_dim must be at most n_units - 2 (the time fixed effect "
            "occupies one factor dimension)"
        )
    rng = np.random.default_rng(seed)
    signs, w = _draw_balanced_weights(n_units, epsilon, rng)
    v = w * signs
    v_unit = v / np.linalg.norm(v)

    latent = rng.standard_normal((n_units, latent_dim))
    # Two projection passes push the residual inner products to round-off.
    for _ in range(2):
        latent -= np.outer(v_unit, v_unit @ latent)
    unit_factors = np.column_stack([latent, np.ones(n_units)])

    spec = FactorModelSpec(
        n_units=n_units,
        pre_periods=pre_periods,
        post_periods=post_periods,
        latent_dim=latent_dim,
        regime="random",
        tau=1.0,
        noise_sd=noise_sd,
        seed=seed,
    )
    total = spec.total_periods
    time_factors = np.column_stack(
        [_time_factor_path(spec, rng), rng.standard_normal(total)]
    )
    outcomes = unit_factors @ time_factors.T
    if noise_sd > 0:
        outcomes = outcomes + noise_sd * rng.standard_normal(outcomes.shape)
    units = tuple(f"unit{i:03d}" for i in range(n_units))
    periods = tuple(range(total))
    panel = PanelData(outcomes, units, periods, pre_periods)
    sim = SimulatedPanel(panel, spec.tau, unit_factors, time_factors)
    return RealizableInstance(
        panel=sim,
        true_assignment=DesignAssignment(signs, oriented=False),
        true_weights=WeightVector(w, "none"),
        epsilon_bound=epsilon,
    )
