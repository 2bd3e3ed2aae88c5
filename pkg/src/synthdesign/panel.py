"""Panel container: an N x (T+S) outcome matrix with labels and a pre horizon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PanelData:
    """Outcomes for N units over T pre-treatment plus S post periods.

    ``outcomes[i, t]`` is unit ``units[i]`` at ``periods[t]``; the first
    ``pre_periods`` columns are pre-treatment.
    """

    outcomes: np.ndarray
    units: tuple
    periods: tuple
    pre_periods: int

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float)
        if outcomes.ndim != 2:
            raise ValueError(f"outcomes must be 2-D, got shape {outcomes.shape}")
        if not np.all(np.isfinite(outcomes)):
            raise ValueError("outcomes must be finite")
        n, total = outcomes.shape
        if n < 2:
            raise ValueError("panel needs at least 2 units")
        if len(self.units) != n or len(self.periods) != total:
            raise ValueError("label lengths do not match the outcome matrix")
        if not 1 <= self.pre_periods <= total:
            raise ValueError(
                f"pre_periods must lie in [1, {total}], got {self.pre_periods}"
            )
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "periods", tuple(self.periods))

    @property
    def n_units(self):
        return self.outcomes.shape[0]

    @property
    def n_periods(self):
        return self.outcomes.shape[1]

    @property
    def n_post(self):
        return self.n_periods - self.pre_periods

    @property
    def pre(self):
        """The N x T pre-treatment block."""
        return self.outcomes[:, : self.pre_periods]

    @property
    def post(self):
        """The N x S post-treatment block (may have zero columns)."""
        return self.outcomes[:, self.pre_periods :]


def panel_from_matrix(outcomes, pre_periods):
    """Wrap a bare matrix with synthetic unit/period labels."""
    outcomes = np.asarray(outcomes, dtype=float)
    n, total = outcomes.shape
    units = tuple(f"unit{i:03d}" for i in range(n))
    periods = tuple(range(total))
    return PanelData(outcomes, units, periods, pre_periods)
