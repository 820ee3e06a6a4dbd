"""
Black-Scholes Pricing
Closed-form European prices, no-arbitrage bands and implied volatility.
"""

from typing import Literal, Tuple, Union

import numpy as np
import structlog
from scipy.optimize import brentq
from scipy.stats import norm

from backend.utils.exceptions import InvalidInput, NoConvergence, PriceOutOfBand

logger = structlog.get_logger()

Side = Literal["call", "put"]
ArrayLike = Union[float, np.ndarray]

IV_LOWER = 1e-6
IV_UPPER = 10.0
IV_MAX_ITER = 200


def _require_positive(**values: ArrayLike) -> None:
    for name, value in values.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise InvalidInput(f"{name} must be positive and finite, got {value!r}")


def _check_side(side: str) -> str:
    if side not in ("call", "put"):
        raise InvalidInput(f"side must be 'call' or 'put', got {side!r}")
    return side


def d1_d2(S: ArrayLike, K: ArrayLike, r: float, tau: ArrayLike, sigma: ArrayLike):
    """Return (d1, d2) for spot S, strike K and total volatility σ√τ."""
    vol = np.asarray(sigma, dtype=float) * np.sqrt(tau)
    d1 = (np.log(np.asarray(S, dtype=float) / K) + r * np.asarray(tau) + 0.5 * vol**2) / vol
    return d1, d1 - vol


def bs_price(
    S: ArrayLike,
    K: ArrayLike,
    r: float,
    tau: ArrayLike,
    sigma: ArrayLike,
    side: Side = "call",
) -> ArrayLike:
    """
    European option price under Black-Scholes.

    Args:
        S: Spot price
        K: Strike
        r: Continuously compounded rate
        tau: Year-fraction to maturity
        sigma: Volatility
        side: "call" or "put"

    Returns:
        Price (scalar or array, broadcast over the inputs)
    """
    _check_side(side)
    _require_positive(S=S, K=K, tau=tau, sigma=sigma)

    d1, d2 = d1_d2(S, K, r, tau, sigma)
    discounted_strike = np.asarray(K, dtype=float) * np.exp(-r * np.asarray(tau, dtype=float))

    if side == "call":
        price = S * norm.cdf(d1) - discounted_strike * norm.cdf(d2)
    else:
        price = discounted_strike * norm.cdf(-d2) - S * norm.cdf(-d1)

    price = np.maximum(price, 0.0)
    return float(price) if np.ndim(price) == 0 else price


def no_arbitrage_band(S: float, K: float, r: float, tau: float, side: Side = "call") -> Tuple[float, float]:
    """Model-free (lower, upper) price bounds of a European option."""
    discounted_strike = K * np.exp(-r * tau)
    if side == "call":
        return max(S - discounted_strike, 0.0), S
    return max(discounted_strike - S, 0.0), discounted_strike


def implied_vol(price: float, S: float, K: float, r: float, tau: float, side: Side = "call") -> float:
    """
    Invert bs_price for σ by bracketed Brent search on [1e-6, 10].

    Raises:
        PriceOutOfBand: price at or outside the no-arbitrage band, or
            outside the prices reachable on the bracket
        NoConvergence: Brent did not converge within 200 iterations
    """
    _check_side(side)
    _require_positive(S=S, K=K, tau=tau)
    if not np.isfinite(price):
        raise InvalidInput(f"price must be finite, got {price!r}")

    lower, upper = no_arbitrage_band(S, K, r, tau, side)
    if price <= lower or price >= upper:
        raise PriceOutOfBand(
            f"price {price} outside ({lower}, {upper}) for K={K}, tau={tau}, side={side}"
        )

    def objective(sigma: float) -> float:
        return bs_price(S, K, r, tau, sigma, side) - price

    f_low = objective(IV_LOWER)
    f_high = objective(IV_UPPER)
    if f_low > 0.0 or f_high < 0.0:
        raise PriceOutOfBand(
            f"price {price} not reachable for sigma in [{IV_LOWER}, {IV_UPPER}] (K={K}, tau={tau})"
        )
    if f_low == 0.0:
        return IV_LOWER
    if f_high == 0.0:
        return IV_UPPER

    sigma, info = brentq(
        objective,
        IV_LOWER,
        IV_UPPER,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=IV_MAX_ITER,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise NoConvergence(
            f"implied vol search did not converge after {info.iterations} iterations: {info.flag}"
        )
    return float(sigma)


def implied_vols(
    prices: np.ndarray,
    S: float,
    strikes: np.ndarray,
    r: float,
    tau: float,
    side: Side = "call",
) -> np.ndarray:
    """Vectorized implied_vol; entries that cannot be inverted are NaN."""
    prices = np.asarray(prices, dtype=float)
    strikes = np.broadcast_to(np.asarray(strikes, dtype=float), prices.shape)
    out = np.full(prices.shape, np.nan)
    for idx, (price, strike) in enumerate(zip(prices.ravel(), strikes.ravel())):
        try:
            out.flat[idx] = implied_vol(price, S, strike, r, tau, side)
        except (PriceOutOfBand, NoConvergence) as e:
            logger.debug("Implied vol skipped", strike=float(strike), reason=str(e))
    return out
