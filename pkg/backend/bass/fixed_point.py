"""
Fixed-Point Solver
Iterates the Bass operator on one maturity interval until the sup-norm
change of the CDF of W_{T_i} falls below tolerance.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
import structlog
from scipy.integrate import trapezoid
from scipy.stats import norm

from backend.bass.operator import apply_A, inner_map, w_grid
from backend.config import settings
from backend.density.marginal import MarginalDistribution
from backend.quad.grid_function import GridFunction
from backend.quad.schemes import QuadratureScheme
from backend.services.performance_monitor import PerformanceMonitor
from backend.utils.exceptions import InvalidInput, MaxIterExceeded

logger = structlog.get_logger()


@dataclass(frozen=True)
class FixedPointOptions:
    grid_points: int = 801
    grid_width: float = 8.0
    clamp: float = 1e-12
    initial_guess: Literal["increment", "maturity"] = "increment"
    recenter: bool = True

    @classmethod
    def from_settings(cls, **overrides) -> "FixedPointOptions":
        base = dict(
            grid_points=settings.W_GRID_POINTS,
            grid_width=settings.W_GRID_WIDTH,
            clamp=settings.QUANTILE_CLAMP,
            initial_guess=settings.INITIAL_GUESS,
            recenter=settings.RECENTER,
        )
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class BassInterval:
    """
    Solution on [t_start, t_end]: the CDF of W_{t_start} and the map
    w ↦ F⁻¹_{μ_end}(K_Δ ⋆ F_W)(w) that sends W_{t_end} to the spot.
    """

    index: int
    t_start: float
    t_end: float
    F_W: GridFunction
    inner: GridFunction
    iterations: int
    error_history: List[float] = field(default_factory=list)
    tol: float = 0.0
    wall_time: float = 0.0

    @property
    def dt(self) -> float:
        return self.t_end - self.t_start

    @property
    def final_error(self) -> float:
        return self.error_history[-1] if self.error_history else float("nan")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "grid": self.F_W.grid.tolist(),
            "F_W": self.F_W.values.tolist(),
            "inner": self.inner.values.tolist(),
            "iterations": self.iterations,
            "error_history": [float(e) for e in self.error_history],
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BassInterval":
        grid = np.asarray(data["grid"], dtype=float)
        return cls(
            index=int(data["index"]),
            t_start=float(data["t_start"]),
            t_end=float(data["t_end"]),
            F_W=GridFunction(grid, np.asarray(data["F_W"], dtype=float), kind="cdf"),
            inner=GridFunction(grid, np.asarray(data["inner"], dtype=float), kind="map"),
            iterations=int(data["iterations"]),
            error_history=[float(e) for e in data.get("error_history", [])],
            tol=float(data.get("tol", 0.0)),
        )


def initial_guess(grid: np.ndarray, t_start: float, dt: float, kind: str) -> GridFunction:
    if kind == "increment":
        scale = np.sqrt(dt)
    elif kind == "maturity":
        scale = np.sqrt(t_start)
    else:
        raise InvalidInput(f"unknown initial guess {kind!r}")
    return GridFunction(grid, norm.cdf(grid / scale), kind="cdf")


def cdf_mean(F: GridFunction) -> float:
    """E[W] = w_L + ∫(1 − F) dw over the grid."""
    return float(F.grid[0] + trapezoid(1.0 - F.values, F.grid))


def recenter(F: GridFunction) -> GridFunction:
    """Translate F so its law has zero mean."""
    shift = cdf_mean(F)
    return GridFunction(F.grid, np.asarray(F(F.grid + shift)), kind="cdf")


def solve_fixed_point(
    mu_i: MarginalDistribution,
    mu_next: MarginalDistribution,
    dt: float,
    tol: float,
    max_iter: int,
    scheme: QuadratureScheme,
    options: Optional[FixedPointOptions] = None,
    index: int = 0,
    monitor: Optional[PerformanceMonitor] = None,
) -> BassInterval:
    """
    Plain iteration F ← 𝒜F from a Gaussian guess.

    The default guess is Φ(w/√ΔT). The "maturity" guess Φ(w/√T_i) is the
    exact fixed point for Black-Scholes marginals, so from it the iteration
    count no longer depends on tol there.

    Args:
        mu_i: Marginal at T_i
        mu_next: Marginal at T_{i+1}
        dt: T_{i+1} − T_i
        tol: Sup-norm change at which iteration stops
        max_iter: Maximum number of operator applications
        scheme: Convolution rule for both kernels
        options: Grid, clamp, initial guess and re-centring
        index: Interval number used in logs and timings
        monitor: Records the wall time of the solve

    Raises:
        MaxIterExceeded: tolerance not reached; carries the error history
    """
    if not 0 < tol < 1:
        raise InvalidInput(f"tol must lie in (0, 1), got {tol}")
    if max_iter < 1:
        raise InvalidInput(f"max_iter must be >= 1, got {max_iter}")
    if dt <= 0:
        raise InvalidInput(f"dt must be positive, got {dt}")
    options = options or FixedPointOptions.from_settings()
    monitor = monitor or PerformanceMonitor()
    task = f"fixed_point[{index}]"

    t_start = float(mu_i.tau)
    t_end = t_start + dt
    grid = w_grid(t_end, options.grid_points, options.grid_width)
    F = initial_guess(grid, t_start, dt, options.initial_guess)

    history: List[float] = []
    monitor.start(task)
    for iteration in range(1, max_iter + 1):
        updated = apply_A(F, mu_i, mu_next, dt, scheme, options.clamp)
        if options.recenter:
            updated = recenter(updated)
        err = float(np.max(np.abs(updated.values - F.values)))
        history.append(err)
        F = updated
        logger.debug("Fixed-point iterate", interval=index, iteration=iteration, err_itr=err)
        if err <= tol:
            break
    else:
        monitor.stop(task, len(history))
        logger.error("Fixed point did not converge", interval=index, max_iter=max_iter, err_itr=history[-1])
        raise MaxIterExceeded(
            f"interval {index}: err_itr={history[-1]:.3e} above tol={tol:.1e} after {max_iter} iterations",
            history,
        )

    wall_time = monitor.stop(task, len(history))
    inner = inner_map(F, mu_next, dt, scheme, options.clamp)
    logger.info(
        "Fixed point converged",
        interval=index,
        t_start=t_start,
        t_end=t_end,
        iterations=len(history),
        err_itr=history[-1],
        wall_time_s=wall_time,
    )
    return BassInterval(
        index=index,
        t_start=t_start,
        t_end=t_end,
        F_W=F,
        inner=inner,
        iterations=len(history),
        error_history=history,
        tol=tol,
        wall_time=wall_time,
    )
