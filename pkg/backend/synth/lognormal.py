"""Black-Scholes marginals with a closed-form Bass fixed point."""

from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from backend.density.marginal import LognormalMarginal
from backend.marketdata.black_scholes import bs_price
from backend.marketdata.quotes import OptionChain, OptionQuote
from backend.utils.exceptions import InvalidInput

# closed-form marginals are smooth; this is the order recorded for them
M_MAX = 8

BS_PRESET = {"spot": 100.0, "sigma": 1.0, "maturities": (1.0, 1.2, 1.5)}


def bs_marginals(spot: float, sigma: float, maturities: Sequence[float], rate: float = 0.0) -> List[LognormalMarginal]:
    """Exact lognormal marginals with log-variance σ²T at each maturity."""
    if spot <= 0 or sigma <= 0:
        raise InvalidInput(f"spot and sigma must be positive, got {spot}, {sigma}")
    marginals = []
    for tau in maturities:
        marginal = LognormalMarginal(spot, sigma, tau, rate)
        marginal.smoothness_order = M_MAX
        marginals.append(marginal)
    return marginals


def bs_strikes(spot: float, count: int = 41) -> np.ndarray:
    return np.linspace(0.2 * spot, 3.0 * spot, count)


def bs_chain(
    spot: float,
    sigma: float,
    maturities: Sequence[float],
    strikes: Optional[np.ndarray] = None,
    rate: float = 0.0,
) -> OptionChain:
    """Flat-smile call quotes carrying both IV and price."""
    strikes = bs_strikes(spot) if strikes is None else np.asarray(strikes, dtype=float)
    quotes = []
    for tau in maturities:
        prices = bs_price(spot, strikes, rate, tau, sigma, "call")
        for strike, price in zip(strikes, prices):
            quotes.append(OptionQuote(float(tau), float(strike), "call", float(price), float(sigma)))
    return OptionChain(spot=spot, rate=rate, quotes=tuple(quotes))


def bs_truth_frame(spot: float, sigma: float, tau: float, strikes: np.ndarray) -> pd.DataFrame:
    """Ground truth: strike, iv, density."""
    marginal = LognormalMarginal(spot, sigma, tau)
    strikes = np.asarray(strikes, dtype=float)
    return pd.DataFrame(
        {"maturity": tau, "strike": strikes, "iv": sigma, "density": marginal.pdf(strikes)}
    )
