"""
Local Quadratic Regression
Kernel-weighted quadratic fit of the smile with an adaptive bandwidth and a
non-negativity constraint on the implied density.
"""

from dataclasses import dataclass, replace
from typing import Tuple, Union

import numpy as np
import structlog
from scipy.optimize import least_squares

from backend.density.formula import density_from_smile, smile_bracket, smile_d1_d2
from backend.utils.exceptions import OutOfRange, SingularDesign, TooFewQuotes

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]

MIN_QUOTES = 5
RANGE_SLACK = 1e-9
BRACKET_MARGIN = 1e-14


def epanechnikov(u: np.ndarray) -> np.ndarray:
    """¾(1 − u²) on |u| < 1, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


def adaptive_bandwidth(sorted_distances: np.ndarray, k: int) -> float:
    """
    Bandwidth reaching the k-th nearest strike.

    It sits halfway to the (k+1)-th strike so the k-th one keeps a
    positive weight.
    """
    d_k = sorted_distances[k - 1]
    if k < sorted_distances.size:
        gap = sorted_distances[k] - d_k
        if gap > 0:
            return float(d_k + 0.5 * gap)
    return float(d_k * (1.0 + 1e-3)) if d_k > 0 else 1e-3


@dataclass(frozen=True)
class LocalEstimate:
    alpha0: float
    alpha1: float
    alpha2: float
    bandwidth: float
    constrained: bool


@dataclass(frozen=True)
class LqrFit:
    """
    Per-grid-point estimates of σ̂(K), σ̂′(K) and σ̂″(K)/2.

    The observed quotes are kept so the same local estimator can be
    evaluated at any strike inside the observed range.
    """

    strike_grid: np.ndarray
    alpha0: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    bandwidths: np.ndarray
    constrained: np.ndarray
    window_count: int
    forward: float
    tau: float
    quote_strikes: np.ndarray
    quote_ivs: np.ndarray
    kernel: str = "epanechnikov"

    @property
    def strike_range(self) -> Tuple[float, float]:
        return float(self.quote_strikes[0]), float(self.quote_strikes[-1])

    def local_fit(self, K: float) -> LocalEstimate:
        low, high = self.strike_range
        if not (low - RANGE_SLACK * low <= K <= high + RANGE_SLACK * high):
            raise OutOfRange(f"strike {K} outside observed range [{low}, {high}]")
        return _local_fit(
            float(K), self.quote_strikes, self.quote_ivs, self.window_count, self.forward, self.tau
        )

    def density_at(self, K: ArrayLike) -> ArrayLike:
        """q̂ at arbitrary strikes from fresh local fits."""
        K_arr = np.atleast_1d(np.asarray(K, dtype=float))
        out = np.empty_like(K_arr)
        for i, strike in enumerate(K_arr):
            est = self.local_fit(strike)
            out[i] = _density(strike, self.forward, self.tau, est.alpha0, est.alpha1, est.alpha2)
        out = np.maximum(out, 0.0)
        return float(out[0]) if np.ndim(K) == 0 else out.reshape(np.shape(K))

    def density(self) -> np.ndarray:
        """q̂ on the evaluation grid."""
        values = _density(self.strike_grid, self.forward, self.tau, self.alpha0, self.alpha1, self.alpha2)
        return np.maximum(values, 0.0)

    def density_slope(self, K: float, direction: int = 1) -> float:
        """
        One-sided second-order difference of q̂ at K, stepping inward
        (direction=+1 to the right, −1 to the left).
        """
        spacing = np.min(np.diff(self.quote_strikes))
        step = 1e-4 * spacing * np.sign(direction)
        q0, q1, q2 = self.density_at(np.array([K, K + step, K + 2 * step]))
        return float((-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * step))


def _density(K, forward, tau, a0, a1, a2):
    return density_from_smile(K, forward, tau, a0, a1, 2.0 * np.asarray(a2))


def _eliminated_alpha2(K: float, forward: float, tau: float, a0: float, a1: float) -> float:
    """α₂ that puts the density bracket exactly at zero for given α₀, α₁."""
    return -0.5 * float(smile_bracket(K, forward, tau, a0, a1, 0.0))


def _local_fit(
    K0: float,
    strikes: np.ndarray,
    ivs: np.ndarray,
    window_count: int,
    forward: float,
    tau: float,
) -> LocalEstimate:
    d = strikes - K0
    sorted_distances = np.sort(np.abs(d))
    n = strikes.size

    k = window_count
    coef = None
    while k <= n:
        h = adaptive_bandwidth(sorted_distances, k)
        weights = epanechnikov(d / h)
        active = weights > 0
        if np.unique(strikes[active]).size >= 3:
            sw = np.sqrt(weights[active])
            design = np.column_stack([np.ones(active.sum()), d[active], d[active] ** 2])
            coef, _, rank, _ = np.linalg.lstsq(design * sw[:, None], ivs[active] * sw, rcond=None)
            if rank == 3:
                break
            coef = None
        k += 1
    if coef is None:
        raise SingularDesign(f"no window around K={K0} holds three distinct strikes")
    if k > window_count:
        logger.debug("Window widened", strike=K0, window_count=k)

    a0, a1, a2 = (float(c) for c in coef)
    if a0 > 0 and smile_bracket(K0, forward, tau, a0, a1, 2.0 * a2) >= 0:
        return LocalEstimate(a0, a1, a2, h, False)

    # active constraint: α₂ is fixed by (α₀, α₁), minimize over the remaining pair
    dw, iw, sw = d[active], ivs[active], np.sqrt(weights[active])

    def residuals(p):
        b0, b1 = p
        b2 = _eliminated_alpha2(K0, forward, tau, b0, b1)
        return sw * (iw - (b0 + b1 * dw + b2 * dw * dw))

    start = np.array([a0 if a0 > 0 else float(np.average(iw, weights=sw**2)), a1])
    solution = least_squares(
        residuals,
        start,
        bounds=([1e-6, -np.inf], [np.inf, np.inf]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    b0, b1 = (float(v) for v in solution.x)
    b2 = _eliminated_alpha2(K0, forward, tau, b0, b1)
    b2 += BRACKET_MARGIN * max(1.0, abs(b2))
    for _ in range(3):
        bracket = float(smile_bracket(K0, forward, tau, b0, b1, 2.0 * b2))
        if bracket >= 0:
            break
        b2 += abs(bracket)
    logger.debug("Density constraint active", strike=K0, alpha0=b0, alpha1=b1, alpha2=b2)
    return LocalEstimate(b0, b1, b2, h, True)


def lqr_fit(
    strikes: np.ndarray,
    ivs: np.ndarray,
    eval_grid: np.ndarray,
    window_count: int,
    forward: float,
    tau: float,
) -> LqrFit:
    """
    Fit the constrained local quadratic smile at every evaluation strike.

    Args:
        strikes: Observed strikes
        ivs: Observed implied volatilities
        eval_grid: Strikes inside the observed range
        window_count: k for the adaptive bandwidth (distance to the k-th nearest strike)
        forward: Forward of the maturity
        tau: Year-fraction to maturity

    Raises:
        TooFewQuotes: fewer than 5 distinct strikes or k above the quote count
        OutOfRange: evaluation strike outside the observed range
        SingularDesign: no window with three distinct strikes
    """
    strikes = np.asarray(strikes, dtype=float)
    ivs = np.asarray(ivs, dtype=float)
    order = np.argsort(strikes)
    strikes, ivs = strikes[order], ivs[order]

    if np.unique(strikes).size < MIN_QUOTES:
        raise TooFewQuotes(f"need at least {MIN_QUOTES} distinct strikes, got {np.unique(strikes).size}")
    if window_count > strikes.size:
        raise TooFewQuotes(f"window_count={window_count} exceeds the {strikes.size} quotes available")
    if window_count < MIN_QUOTES:
        raise TooFewQuotes(f"window_count must be at least {MIN_QUOTES}, got {window_count}")

    grid = np.asarray(eval_grid, dtype=float)
    low, high = strikes[0], strikes[-1]
    if grid.min() < low - RANGE_SLACK * low or grid.max() > high + RANGE_SLACK * high:
        raise OutOfRange(f"evaluation grid [{grid.min()}, {grid.max()}] leaves [{low}, {high}]")

    estimates = [_local_fit(float(K), strikes, ivs, window_count, forward, tau) for K in grid]
    fit = LqrFit(
        strike_grid=grid,
        alpha0=np.array([e.alpha0 for e in estimates]),
        alpha1=np.array([e.alpha1 for e in estimates]),
        alpha2=np.array([e.alpha2 for e in estimates]),
        bandwidths=np.array([e.bandwidth for e in estimates]),
        constrained=np.array([e.constrained for e in estimates]),
        window_count=window_count,
        forward=forward,
        tau=tau,
        quote_strikes=strikes,
        quote_ivs=ivs,
    )
    logger.info(
        "LQR fitted",
        tau=tau,
        quotes=strikes.size,
        grid_points=grid.size,
        constrained_points=int(fit.constrained.sum()),
    )
    return fit


def rnd_from_iv(fit: LqrFit, K: ArrayLike, forward: float = None, tau: float = None) -> ArrayLike:
    """
    q̂(K) from the local estimates (α₀, α₁, α₂) at K.

    Raises:
        OutOfRange: K outside the fitted strike range
    """
    if forward is not None and tau is not None and (forward != fit.forward or tau != fit.tau):
        fit = replace(fit, forward=forward, tau=tau)
    return fit.density_at(K)


def smile_at(fit: LqrFit, K: float) -> Tuple[float, float, float]:
    """(σ̂, σ̂′, σ̂″) at K."""
    est = fit.local_fit(K)
    return est.alpha0, est.alpha1, 2.0 * est.alpha2


__all__ = [
    "LqrFit",
    "LocalEstimate",
    "adaptive_bandwidth",
    "epanechnikov",
    "lqr_fit",
    "rnd_from_iv",
    "smile_at",
    "smile_d1_d2",
]
