"""
SSVI Surface
Heston-like SSVI total variance with analytic strike derivatives, its exact
risk-neutral density and a synthetic quote chain.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from backend.density.formula import density_from_smile
from backend.marketdata.black_scholes import bs_price
from backend.marketdata.quotes import OptionChain, OptionQuote
from backend.synth.noise import DEFAULT_MAGNITUDE, add_noise
from backend.utils.exceptions import InvalidInput

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SsviParams:
    """
    θ_t defaults to theta_slope·t; pass `theta` for another ATM total
    variance curve.
    """

    rho: float
    lam: float
    theta_slope: float = 0.4
    spot: float = 100.0
    rate: float = 0.0
    theta: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise InvalidInput(f"rho must lie in (-1, 1), got {self.rho}")
        bound = (1.0 + abs(self.rho)) / 4.0
        if self.lam < bound:
            raise InvalidInput(f"lambda={self.lam} below the no-arbitrage bound {bound}")
        if self.spot <= 0:
            raise InvalidInput(f"spot must be positive, got {self.spot}")

    def theta_at(self, t: float) -> float:
        value = self.theta(t) if self.theta is not None else self.theta_slope * t
        if value <= 0:
            raise InvalidInput(f"theta_t must be positive, got {value} at t={t}")
        return float(value)

    def forward(self, t: float) -> float:
        return self.spot * np.exp(self.rate * t)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "lambda": self.lam,
            "theta_slope": self.theta_slope,
            "spot": self.spot,
            "rate": self.rate,
        }


SSVI_PRESET = SsviParams(rho=0.3, lam=(1.0 + 0.3) / 4.0 + 1.0, theta_slope=0.4, spot=100.0, rate=0.0)
SSVI_PRESET_MATURITY = 2.0
SSVI_PRESET_STRIKE_RANGE = (6.0, 160.0)
SSVI_BL_STRIKE_RANGE = (5.0, 200.0)


def preset_strikes() -> np.ndarray:
    """120 strikes evenly spaced on [1, 200], kept inside the preset range."""
    strikes = np.linspace(1.0, 200.0, 120)
    low, high = SSVI_PRESET_STRIKE_RANGE
    return strikes[(strikes >= low) & (strikes <= high)]


def bl_preset_strikes() -> np.ndarray:
    """120 strikes evenly spaced on [5, 200] for the Breeden-Litzenberger comparison."""
    return np.linspace(*SSVI_BL_STRIKE_RANGE, 120)


def heston_phi(theta: float, lam: float) -> float:
    x = lam * theta
    return (1.0 - (1.0 - np.exp(-x)) / x) / x


def total_variance(params: SsviParams, k: ArrayLike, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """w, ∂w/∂k and ∂²w/∂k² at log-moneyness k."""
    if t <= 0:
        raise InvalidInput(f"t must be positive, got {t}")
    theta = params.theta_at(t)
    phi = heston_phi(theta, params.lam)
    rho = params.rho
    k = np.asarray(k, dtype=float)
    shifted = phi * k + rho
    root = np.sqrt(shifted**2 + 1.0 - rho * rho)
    w = 0.5 * theta * (1.0 + rho * phi * k + root)
    w_k = 0.5 * theta * phi * (rho + shifted / root)
    w_kk = 0.5 * theta * phi * phi * (1.0 - rho * rho) / root**3
    return w, w_k, w_kk


def ssvi_iv(params: SsviParams, k: ArrayLike, t: float) -> ArrayLike:
    """σ(k, t) = √(w(k, θ_t)/t)."""
    w, _, _ = total_variance(params, k, t)
    value = np.sqrt(w / t)
    return float(value) if value.ndim == 0 else value


def ssvi_strike_smile(params: SsviParams, K: ArrayLike, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """σ, ∂σ/∂K and ∂²σ/∂K² at strike K."""
    K = np.asarray(K, dtype=float)
    k = np.log(K / params.forward(t))
    w, w_k, w_kk = total_variance(params, k, t)
    root_wt = np.sqrt(w * t)
    sigma = np.sqrt(w / t)
    sigma_k = w_k / (2.0 * root_wt)
    sigma_kk = w_kk / (2.0 * root_wt) - w_k**2 / (4.0 * w * root_wt)
    return sigma, sigma_k / K, (sigma_kk - sigma_k) / (K * K)


def ssvi_rnd(params: SsviParams, K: ArrayLike, t: float) -> ArrayLike:
    """Exact density from the SSVI smile and its analytic derivatives."""
    K_arr = np.asarray(K, dtype=float)
    if np.any(K_arr <= 0):
        raise InvalidInput("strikes must be positive")
    sigma, dsigma, d2sigma = ssvi_strike_smile(params, K_arr, t)
    return density_from_smile(K_arr, params.forward(t), t, sigma, dsigma, d2sigma)


def ssvi_chain(
    params: SsviParams = SSVI_PRESET,
    maturities: Sequence[float] = (SSVI_PRESET_MATURITY,),
    strikes: Optional[np.ndarray] = None,
    noise: float = 0.0,
    seed: int = 0,
) -> OptionChain:
    """Call quotes carrying both IV and Black-Scholes price, optionally noisy."""
    strikes = preset_strikes() if strikes is None else np.asarray(strikes, dtype=float)
    quotes = []
    for j, t in enumerate(maturities):
        ivs = np.asarray(ssvi_iv(params, np.log(strikes / params.forward(t)), t))
        ivs = add_noise(ivs, noise, seed + j) if noise > 0 else ivs
        prices = bs_price(params.spot, strikes, params.rate, t, ivs, "call")
        for strike, iv, price in zip(strikes, ivs, np.atleast_1d(prices)):
            quotes.append(OptionQuote(float(t), float(strike), "call", float(price), float(iv)))
    logger.info("SSVI chain generated", maturities=len(maturities), strikes=strikes.size, noise=noise, seed=seed)
    return OptionChain(spot=params.spot, rate=params.rate, quotes=tuple(quotes))


def ssvi_truth_frame(params: SsviParams, t: float, strikes: np.ndarray) -> pd.DataFrame:
    """Ground truth: strike, iv, density."""
    strikes = np.asarray(strikes, dtype=float)
    return pd.DataFrame(
        {
            "maturity": t,
            "strike": strikes,
            "iv": ssvi_iv(params, np.log(strikes / params.forward(t)), t),
            "density": ssvi_rnd(params, strikes, t),
        }
    )


__all__ = [
    "DEFAULT_MAGNITUDE",
    "SSVI_BL_STRIKE_RANGE",
    "SSVI_PRESET",
    "SSVI_PRESET_MATURITY",
    "SsviParams",
    "bl_preset_strikes",
    "heston_phi",
    "preset_strikes",
    "ssvi_chain",
    "ssvi_iv",
    "ssvi_rnd",
    "ssvi_strike_smile",
    "ssvi_truth_frame",
    "total_variance",
]
