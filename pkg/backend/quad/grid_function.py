"""
Grid Functions
Sampled functions with a shape-preserving interpolant and declared extrapolation.
"""

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from backend.utils.exceptions import InvalidInput

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class GridFunction:
    """
    A function known on an ascending grid.

    Between nodes it is the monotone piecewise cubic (PCHIP) interpolant.
    Outside the grid a "cdf" function is clamped to 0 below and 1 above,
    and a "map" function continues linearly with the end secant slopes.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: Literal["cdf", "map"] = "cdf"
    _interpolant: PchipInterpolator = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise InvalidInput("grid and values must be equal-length 1-D arrays with at least 2 points")
        if not np.all(np.diff(grid) > 0):
            raise InvalidInput("grid must be strictly ascending")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("grid values must be finite")
        if self.kind not in ("cdf", "map"):
            raise InvalidInput(f"unknown grid function kind {self.kind!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interpolant", PchipInterpolator(grid, values, extrapolate=False))

    @property
    def interpolant(self) -> PchipInterpolator:
        return self._interpolant

    def __call__(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        lo, hi = self.grid[0], self.grid[-1]
        inside = self._interpolant(np.clip(x, lo, hi))

        if self.kind == "cdf":
            out = np.where(x < lo, 0.0, np.where(x > hi, 1.0, inside))
        else:
            slope_lo = (self.values[1] - self.values[0]) / (self.grid[1] - self.grid[0])
            slope_hi = (self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2])
            out = np.where(
                x < lo,
                self.values[0] + slope_lo * (x - lo),
                np.where(x > hi, self.values[-1] + slope_hi * (x - hi), inside),
            )
        return float(out) if out.ndim == 0 else out

    def sup_distance(self, other: "GridFunction") -> float:
        """Sup-norm distance on this function's grid."""
        return float(np.max(np.abs(self.values - np.asarray(other(self.grid)))))
