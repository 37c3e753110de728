"""Fit the gain law N = modes * sinh(c * sqrt(P))**2 + b * P to power data.

Single-parameter weighted least squares in c. The search works on powers
normalized by their maximum, with a coarse logarithmic grid over the
normalized coefficient spanning gains 1e-3 to 10 at maximum power, followed
by golden-section refinement. Normalizing makes the recovered gains exactly
invariant under rescaling the pump-power units (the coefficient itself
rescales as one over the square root of the unit).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["PowerPoint", "GainFit", "fit_gain_curve"]

_GRID_POINTS = 200
_GAMMA_MIN = 1e-3
_GAMMA_MAX = 10.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PowerPoint:
    """One calibration point: pump power in and mean photons per pulse out."""

    pump_power: float
    mean_photons: float
    weight: float | None = None

    def __post_init__(self):
        if not (self.pump_power > 0 and math.isfinite(self.pump_power)):
            raise ValueError("pump_power: must be > 0 and finite")
        if not (self.mean_photons >= 0 and math.isfinite(self.mean_photons)):
            raise ValueError("mean_photons: must be >= 0 and finite")
        if self.weight is not None and not self.weight > 0:
            raise ValueError("weight: must be > 0 when given")


@dataclass(frozen=True)
class GainFit:
    """Result of a gain-curve fit."""

    gain_coefficient: float
    residual_norm: float
    gammas: np.ndarray
    at_boundary: bool

    def objective(self) -> float:
        """Weighted sum of squared residuals at the fitted coefficient."""
        return self.residual_norm**2


def _weights(points: Sequence[PowerPoint], weighting: str) -> np.ndarray:
    explicit = [p.weight for p in points]
    if any(w is not None for w in explicit):
        return np.array([1.0 if w is None else w for w in explicit])
    if weighting == "uniform":
        return np.ones(len(points))
    if weighting == "inverse":
        photons = np.array([p.mean_photons for p in points])
        return 1.0 / np.maximum(photons, 1.0)
    raise ValueError(f"weighting: unknown scheme {weighting!r}")


def fit_gain_curve(
    points: Sequence[PowerPoint],
    mode_count: int,
    background_slope: float,
    weighting: str = "uniform",
) -> GainFit:
    """Recover the gain coefficient from (power, photons) calibration data.

    The mode count comes from geometry and the background slope from a
    separate dark measurement; neither is fitted (they are nearly degenerate
    with the coefficient at low gain).
    """
    if len(points) < 3:
        raise ValueError("points: need at least 3 calibration points")
    if mode_count < 1:
        raise ValueError("mode_count: must be >= 1")
    if background_slope < 0:
        raise ValueError("background_slope: must be >= 0")

    power = np.array([p.pump_power for p in points])
    photons = np.array([p.mean_photons for p in points])
    weights = _weights(points, weighting)
    p_max = float(np.max(power))
    root_power = np.sqrt(power / p_max)  # sqrt(P) in units of sqrt(P_max)

    def objective(c_hat: float) -> float:
        model = mode_count * np.sinh(c_hat * root_power) ** 2 + background_slope * power
        residual = photons - model
        return float(np.sum(weights * residual * residual))

    grid = np.exp(np.linspace(math.log(_GAMMA_MIN), math.log(_GAMMA_MAX), _GRID_POINTS))
    values = [objective(c) for c in grid]
    best = int(np.argmin(values))
    at_boundary = best in (0, _GRID_POINTS - 1)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, _GRID_POINTS - 1)]

    # Golden-section refinement to relative width 1e-8.
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while (b - a) > 1e-8 * b:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = objective(x2)
    c_hat = 0.5 * (a + b)

    if at_boundary:
        warnings.warn(
            "fitted gain coefficient sits at the search boundary; the data "
            "may be pure background or outside the gain range 1e-3..10",
            stacklevel=2,
        )

    return GainFit(
        gain_coefficient=c_hat / math.sqrt(p_max),
        residual_norm=math.sqrt(objective(c_hat)),
        gammas=c_hat * root_power,
        at_boundary=at_boundary,
    )
