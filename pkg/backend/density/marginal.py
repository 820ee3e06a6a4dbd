"""
Marginal Distributions
CDF and quantile of the spot at one maturity, the form the Bass calibration
consumes.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import structlog
from scipy.interpolate import PchipInterpolator
from scipy.stats import norm

from backend.density.rnd import RiskNeutralDensity
from backend.utils.exceptions import InvalidInput, NonMonotone

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]

BISECTION_STEPS = 64


@dataclass(frozen=True)
class GridSpec:
    tail_points: int = 200
    cdf_floor: float = 1e-12
    smoothness_order: int = 2


class MarginalDistribution(ABC):
    """F_μ and F_μ⁻¹ of the spot at maturity `tau`."""

    tau: float
    smoothness_order: int = 2

    @property
    @abstractmethod
    def grid(self) -> np.ndarray:
        """Strikes on which the CDF is known exactly."""

    @abstractmethod
    def cdf(self, x: ArrayLike) -> ArrayLike: ...

    @abstractmethod
    def quantile(self, u: ArrayLike) -> ArrayLike: ...

    @abstractmethod
    def call_price(self, K: ArrayLike) -> ArrayLike:
        """Undiscounted E[(X − K)₊]."""

    @property
    @abstractmethod
    def mean(self) -> float: ...

    @property
    def support(self):
        return float(self.grid[0]), float(self.grid[-1])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.quantile(rng.uniform(size=size)))


class LognormalMarginal(MarginalDistribution):
    """Black-Scholes marginal with forward S₀e^{rτ}."""

    def __init__(self, spot: float, sigma: float, tau: float, rate: float = 0.0, width: float = 8.0):
        if spot <= 0 or sigma <= 0 or tau <= 0:
            raise InvalidInput(f"spot, sigma and tau must be positive, got {spot}, {sigma}, {tau}")
        self.spot = float(spot)
        self.sigma = float(sigma)
        self.tau = float(tau)
        self.rate = float(rate)
        self.width = float(width)

    @property
    def forward(self) -> float:
        return self.spot * np.exp(self.rate * self.tau)

    @property
    def _vol(self) -> float:
        return self.sigma * np.sqrt(self.tau)

    @property
    def grid(self) -> np.ndarray:
        z = np.linspace(-self.width, self.width, 801)
        return self.forward * np.exp(-0.5 * self._vol**2 + self._vol * z)

    @property
    def mean(self) -> float:
        return self.forward

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        value = np.where(x > 0, norm.cdf((np.log(safe / self.forward) + 0.5 * self._vol**2) / self._vol), 0.0)
        return float(value) if value.ndim == 0 else value

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        y = (np.log(safe / self.forward) + 0.5 * self._vol**2) / self._vol
        value = np.where(x > 0, norm.pdf(y) / (safe * self._vol), 0.0)
        return float(value) if value.ndim == 0 else value

    def quantile(self, u: ArrayLike) -> ArrayLike:
        u = np.asarray(u, dtype=float)
        value = self.forward * np.exp(-0.5 * self._vol**2 + self._vol * norm.ppf(u))
        return float(value) if value.ndim == 0 else value

    def call_price(self, K: ArrayLike) -> ArrayLike:
        K = np.asarray(K, dtype=float)
        d1 = (np.log(self.forward / K) + 0.5 * self._vol**2) / self._vol
        value = self.forward * norm.cdf(d1) - K * norm.cdf(d1 - self._vol)
        return float(value) if value.ndim == 0 else value

    def __repr__(self) -> str:
        return f"LognormalMarginal(spot={self.spot}, sigma={self.sigma}, tau={self.tau}, rate={self.rate})"


class SplineMarginal(MarginalDistribution):
    """
    Monotone cubic (PCHIP) CDF through exact node values; the quantile
    inverts it by bisection inside the bracketing segment.
    """

    def __init__(
        self,
        nodes: np.ndarray,
        cdf_values: np.ndarray,
        tau: float,
        smoothness_order: int = 2,
        cdf_floor: float = 1e-12,
    ):
        nodes = np.asarray(nodes, dtype=float)
        cdf_values = np.asarray(cdf_values, dtype=float)
        if nodes.ndim != 1 or nodes.size != cdf_values.size or nodes.size < 2:
            raise InvalidInput("nodes and cdf values must be matching 1-D arrays")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidInput("nodes must be strictly increasing")
        steps = np.diff(cdf_values)
        if np.any(steps < -1e-14):
            worst = int(np.argmin(steps))
            raise NonMonotone(f"CDF decreases by {-steps[worst]:.3e} after x={nodes[worst]}")

        keep = np.concatenate([[True], np.diff(np.maximum.accumulate(cdf_values)) > 0])
        self._nodes = nodes[keep]
        self._values = np.clip(np.maximum.accumulate(cdf_values)[keep], 0.0, 1.0)
        self.tau = float(tau)
        self.smoothness_order = int(smoothness_order)
        self.cdf_floor = float(cdf_floor)
        self._interp = PchipInterpolator(self._nodes, self._values, extrapolate=False)

    @property
    def grid(self) -> np.ndarray:
        return self._nodes

    @property
    def cdf_values(self) -> np.ndarray:
        return self._values

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x_arr = np.asarray(x, dtype=float)
        value = self._interp(x_arr)
        value = np.where(x_arr < self._nodes[0], 0.0, np.where(x_arr > self._nodes[-1], 1.0, value))
        value = np.clip(value, 0.0, 1.0)
        return float(value) if value.ndim == 0 else value

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x_arr = np.asarray(x, dtype=float)
        value = np.nan_to_num(self._interp.derivative()(x_arr), nan=0.0)
        value = np.maximum(value, 0.0)
        return float(value) if value.ndim == 0 else value

    def quantile(self, u: ArrayLike) -> ArrayLike:
        u_arr = np.clip(np.asarray(u, dtype=float), self.cdf_floor, 1.0 - self.cdf_floor)
        flat = np.atleast_1d(u_arr)
        c, x = self._values, self._nodes
        j = np.clip(np.searchsorted(c, flat, side="right") - 1, 0, c.size - 2)
        lo, hi = x[j].copy(), x[j + 1].copy()
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = self._interp(mid) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        result = np.where(flat <= c[0], x[0], np.where(flat >= c[-1], x[-1], hi))
        return float(result[0]) if u_arr.ndim == 0 else result.reshape(u_arr.shape)

    @cached_property
    def _antiderivative(self):
        return self._interp.antiderivative()

    def call_price(self, K: ArrayLike) -> ArrayLike:
        """∫_K^∞ (1 − F(x)) dx with mass beyond the last node ignored."""
        K_arr = np.asarray(K, dtype=float)
        x0, x1 = self._nodes[0], self._nodes[-1]
        inside = np.clip(K_arr, x0, x1)
        area = self._antiderivative(x1) - self._antiderivative(inside)
        value = (x1 - inside) - area + np.maximum(x0 - K_arr, 0.0)
        value = np.maximum(value, 0.0)
        return float(value) if value.ndim == 0 else value

    @property
    def mean(self) -> float:
        return float(self.call_price(0.0))

    def __repr__(self) -> str:
        return f"SplineMarginal(tau={self.tau}, nodes={self._nodes.size}, support={self.support})"


def to_marginal(q: RiskNeutralDensity, grid_spec: GridSpec = GridSpec()) -> SplineMarginal:
    """
    CDF of an assembled density at exact nodes: geometric grids through both
    tails down to the probability floor, plus the core grid.

    Raises:
        NonMonotone: the node CDF decreases (upstream negative density)
    """
    floor = grid_spec.cdf_floor
    n = grid_spec.tail_points

    left_nodes = np.empty(0)
    if q.left_mass > floor:
        x_low = q.left.quantile(floor)
        left_nodes = np.geomspace(x_low, q.K_L, n)[:-1]
    right_nodes = np.empty(0)
    if q.right_mass > floor:
        x_high = q.right.survival_quantile(floor)
        right_nodes = np.geomspace(q.K_U, x_high, n)[1:]

    core_cdf = q.left_mass + q.core.mass_cum
    right_cdf = q.left_mass + q.core.mass + (q.right_mass - q.right.sf(right_nodes))
    nodes = np.concatenate([left_nodes, q.core.grid, right_nodes])
    values = np.concatenate([q.left.cdf(left_nodes), core_cdf, right_cdf])

    marginal = SplineMarginal(
        nodes,
        values,
        tau=q.tau,
        smoothness_order=grid_spec.smoothness_order,
        cdf_floor=floor,
    )
    logger.debug("Marginal built", tau=q.tau, nodes=marginal.grid.size, support=marginal.support)
    return marginal


def marginal_to_dict(marginal: MarginalDistribution) -> dict:
    """JSON-ready description of a marginal."""
    if isinstance(marginal, LognormalMarginal):
        return {
            "type": "lognormal",
            "spot": marginal.spot,
            "sigma": marginal.sigma,
            "tau": marginal.tau,
            "rate": marginal.rate,
            "smoothness_order": marginal.smoothness_order,
        }
    if isinstance(marginal, SplineMarginal):
        return {
            "type": "spline",
            "tau": marginal.tau,
            "smoothness_order": marginal.smoothness_order,
            "cdf_floor": marginal.cdf_floor,
            "nodes": marginal.grid.tolist(),
            "cdf": marginal.cdf_values.tolist(),
        }
    raise InvalidInput(f"cannot serialize marginal of type {type(marginal).__name__}")


def marginal_from_dict(data: dict) -> MarginalDistribution:
    kind = data.get("type")
    if kind == "lognormal":
        marginal = LognormalMarginal(data["spot"], data["sigma"], data["tau"], data.get("rate", 0.0))
        marginal.smoothness_order = int(data.get("smoothness_order", 2))
        return marginal
    if kind == "spline":
        return SplineMarginal(
            np.asarray(data["nodes"], dtype=float),
            np.asarray(data["cdf"], dtype=float),
            tau=data["tau"],
            smoothness_order=int(data.get("smoothness_order", 2)),
            cdf_floor=float(data.get("cdf_floor", 1e-12)),
        )
    raise InvalidInput(f"unknown marginal type {kind!r}")


__all__ = [
    "GridSpec",
    "LognormalMarginal",
    "MarginalDistribution",
    "SplineMarginal",
    "marginal_from_dict",
    "marginal_to_dict",
    "to_marginal",
]
