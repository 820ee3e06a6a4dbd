"""
Bass Model
Calibration across all maturities and the spot process it defines.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.stats import norm

from backend.bass.fixed_point import BassInterval, FixedPointOptions, solve_fixed_point
from backend.bass.operator import w_grid
from backend.bass.transport import transport_map
from backend.density.calendar import CALENDAR_TOL, calendar_check
from backend.density.marginal import MarginalDistribution, marginal_from_dict, marginal_to_dict
from backend.quad.grid_function import GridFunction
from backend.quad.schemes import QuadratureScheme, convolve_values
from backend.services.performance_monitor import PerformanceMonitor
from backend.utils.exceptions import CalendarArbitrage, InvalidInput, TimeOutOfInterval

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]

CALENDAR_LEVELS = np.linspace(0.005, 0.995, 100)


@dataclass(frozen=True)
class BassModel:
    """
    Calibrated Bass local volatility model.

    S_{T_1} = initial_map(W_{T_1}); on [T_i, T_{i+1}] the spot is the
    transport map of interval i applied to W_t.
    """

    maturities: Tuple[float, ...]
    marginals: Tuple[MarginalDistribution, ...]
    intervals: Tuple[BassInterval, ...]
    scheme: QuadratureScheme
    initial_map: GridFunction
    spot: float

    def __post_init__(self):
        if len(self.marginals) != len(self.maturities):
            raise InvalidInput("one marginal per maturity is required")
        if len(self.intervals) != len(self.maturities) - 1:
            raise InvalidInput(
                f"{len(self.maturities)} maturities need {len(self.maturities) - 1} intervals, got {len(self.intervals)}"
            )

    @property
    def total_iterations(self) -> int:
        return sum(interval.iterations for interval in self.intervals)

    def maturity_map(self, j: int) -> GridFunction:
        """Map W_{T_j} ↦ S_{T_j}."""
        if not 0 <= j < len(self.maturities):
            raise InvalidInput(f"maturity index {j} out of range")
        return self.initial_map if j == 0 else self.intervals[j - 1].inner

    def spot_map(self, t: float, w: ArrayLike) -> ArrayLike:
        """S_t = f(t, W_t) for t in (0, T_n]."""
        if t <= 0 or t > self.maturities[-1] + 1e-12:
            raise TimeOutOfInterval(f"t={t} outside (0, {self.maturities[-1]}]")
        if t >= self.maturities[0] - 1e-12:
            for interval in self.intervals:
                if interval.t_start <= t <= interval.t_end:
                    return transport_map(interval, None, t, w, self.scheme)
            return self.initial_map(w)
        value = np.asarray(convolve_values(self.initial_map, self.maturities[0] - t, w, self.scheme))
        return float(value) if value.ndim == 0 else value

    def convergence_rows(self) -> List[Tuple[int, int, float]]:
        """(interval, iteration, err_itr) for every iterate."""
        return [
            (interval.index, k + 1, err)
            for interval in self.intervals
            for k, err in enumerate(interval.error_history)
        ]

    def to_dict(self) -> dict:
        return {
            "maturities": list(self.maturities),
            "spot": self.spot,
            "scheme": self.scheme.to_dict(),
            "marginals": [marginal_to_dict(m) for m in self.marginals],
            "initial_map": {"grid": self.initial_map.grid.tolist(), "values": self.initial_map.values.tolist()},
            "intervals": [interval.to_dict() for interval in self.intervals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BassModel":
        initial = data["initial_map"]
        return cls(
            maturities=tuple(float(t) for t in data["maturities"]),
            marginals=tuple(marginal_from_dict(m) for m in data["marginals"]),
            intervals=tuple(BassInterval.from_dict(i) for i in data["intervals"]),
            scheme=QuadratureScheme(**data["scheme"]),
            initial_map=GridFunction(
                np.asarray(initial["grid"], dtype=float),
                np.asarray(initial["values"], dtype=float),
                kind="map",
            ),
            spot=float(data["spot"]),
        )


def save_model(model: BassModel, path: Union[str, Path], metadata: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(metadata or {})
    payload.update(model.to_dict())
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("Model saved", path=str(path), maturities=len(model.maturities))
    return path


def load_model(path: Union[str, Path]) -> BassModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    return BassModel.from_dict(json.loads(path.read_text(encoding="utf-8")))


def initial_spot_map(mu_1: MarginalDistribution, t_1: float, options: FixedPointOptions) -> GridFunction:
    """F⁻¹_{μ_1} ∘ Φ(·/√T_1): W_{T_1} is Gaussian, no fixed point needed."""
    grid = w_grid(t_1, options.grid_points, options.grid_width)
    levels = np.clip(norm.cdf(grid / np.sqrt(t_1)), options.clamp, 1.0 - options.clamp)
    spots = np.maximum.accumulate(np.asarray(mu_1.quantile(levels), dtype=float))
    return GridFunction(grid, spots, kind="map")


def calendar_strikes(early: MarginalDistribution, late: MarginalDistribution) -> np.ndarray:
    strikes = np.concatenate([early.quantile(CALENDAR_LEVELS), late.quantile(CALENDAR_LEVELS)])
    return np.unique(strikes)


def check_calendar(marginals: Sequence[MarginalDistribution], rate: float = 0.0) -> None:
    """
    Raises:
        CalendarArbitrage: a consecutive pair fails the convex-order test
    """
    found = []
    for j, (early, late) in enumerate(zip(marginals[:-1], marginals[1:])):
        tol = CALENDAR_TOL * max(1.0, abs(early.mean))
        violations = calendar_check(early, late, rate, calendar_strikes(early, late), tol)
        found.extend({"pair": j, **v.to_dict()} for v in violations)
    if found:
        raise CalendarArbitrage(f"{len(found)} calendar violations across consecutive marginals", found)


def calibrate(
    marginals: Sequence[MarginalDistribution],
    maturities: Sequence[float],
    scheme: QuadratureScheme,
    tol: float,
    max_iter: int,
    options: Optional[FixedPointOptions] = None,
    workers: int = 1,
    rate: float = 0.0,
    monitor: Optional[PerformanceMonitor] = None,
) -> BassModel:
    """
    Solve every interval's fixed point.

    Intervals depend only on their two marginals and are solved in a
    thread pool; results are kept in maturity order.

    Raises:
        InvalidInput: maturities unsorted or not matched by marginals
        CalendarArbitrage: consecutive marginals not in convex order
        CalibrationError: an interval failed; the error carries `interval`
    """
    maturities = tuple(float(t) for t in maturities)
    marginals = tuple(marginals)
    if not maturities:
        raise InvalidInput("at least one maturity is required")
    if len(marginals) != len(maturities):
        raise InvalidInput(f"{len(maturities)} maturities but {len(marginals)} marginals")
    if maturities[0] <= 0 or np.any(np.diff(maturities) <= 0):
        raise InvalidInput(f"maturities must be positive and strictly increasing, got {maturities}")
    options = options or FixedPointOptions.from_settings()
    monitor = monitor or PerformanceMonitor()

    orders = [m.smoothness_order for m in marginals]
    if scheme.m > min(orders):
        logger.warning("Scheme smoothness exceeds marginal smoothness", scheme_m=scheme.m, marginal_m=min(orders))

    check_calendar(marginals, rate)

    def solve(i: int) -> BassInterval:
        try:
            return solve_fixed_point(
                marginals[i],
                marginals[i + 1],
                maturities[i + 1] - maturities[i],
                tol,
                max_iter,
                scheme,
                options,
                index=i,
                monitor=monitor,
            )
        except Exception as e:
            e.interval = i
            logger.error("Interval calibration failed", interval=i, error_type=type(e).__name__, error=str(e))
            raise

    monitor.start("calibrate")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [executor.submit(solve, i) for i in range(len(maturities) - 1)]
        intervals = tuple(f.result() for f in futures)
    monitor.stop("calibrate", sum(interval.iterations for interval in intervals))

    model = BassModel(
        maturities=maturities,
        marginals=marginals,
        intervals=intervals,
        scheme=scheme,
        initial_map=initial_spot_map(marginals[0], maturities[0], options),
        spot=float(marginals[0].mean),
    )
    logger.info(
        "Model calibrated",
        maturities=len(maturities),
        intervals=len(intervals),
        iterations=model.total_iterations,
        wall_time_s=monitor.duration("calibrate"),
    )
    return model
