"""Option chains, Black-Scholes pricing and implied volatility."""

from backend.marketdata.black_scholes import (
    bs_price,
    d1_d2,
    implied_vol,
    implied_vols,
    no_arbitrage_band,
)
from backend.marketdata.blending import BlendedIvCurve, IvCurve, blend_put_call
from backend.marketdata.quotes import (
    OptionChain,
    OptionQuote,
    chain_frame,
    moneyness,
    normalize_chain,
    normalized_price,
    parse_chain,
)

__all__ = [
    "BlendedIvCurve",
    "IvCurve",
    "OptionChain",
    "OptionQuote",
    "blend_put_call",
    "bs_price",
    "chain_frame",
    "d1_d2",
    "implied_vol",
    "implied_vols",
    "moneyness",
    "no_arbitrage_band",
    "normalize_chain",
    "normalized_price",
    "parse_chain",
]
