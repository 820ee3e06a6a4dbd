"""
Market Data Tests
Black-Scholes pricing, implied volatility, chain parsing and smile blending.
"""

import math

import numpy as np
import pytest

from backend.marketdata.black_scholes import bs_price, implied_vol, implied_vols, no_arbitrage_band
from backend.marketdata.blending import IvCurve, blend_put_call
from backend.marketdata.quotes import chain_frame, moneyness, normalize_chain, parse_chain
from backend.utils.exceptions import (
    DomainMismatch,
    DuplicateQuote,
    InvalidInput,
    MalformedRow,
    NegativeValue,
    NoQuotes,
    PriceOutOfBand,
)

# --- Black-Scholes ---


def test_bs_call_at_the_money_unit_vol():
    assert bs_price(100.0, 100.0, 0.0, 1.0, 1.0, "call") == pytest.approx(38.2925, abs=1e-4)


def test_put_call_parity():
    S, K, r, tau, sigma = 100.0, 90.0, 0.03, 0.7, 0.25
    call = bs_price(S, K, r, tau, sigma, "call")
    put = bs_price(S, K, r, tau, sigma, "put")
    assert call - put == pytest.approx(S - K * math.exp(-r * tau), abs=1e-10)


def test_bs_price_vectorized_over_strikes():
    strikes = np.array([80.0, 100.0, 120.0])
    prices = bs_price(100.0, strikes, 0.0, 1.0, 0.2)
    assert prices.shape == (3,)
    assert np.all(np.diff(prices) < 0)


@pytest.mark.parametrize("field", ["S", "K", "tau", "sigma"])
def test_bs_price_rejects_non_positive_inputs(field):
    args = {"S": 100.0, "K": 100.0, "tau": 1.0, "sigma": 0.2}
    args[field] = 0.0
    with pytest.raises(InvalidInput):
        bs_price(args["S"], args["K"], 0.0, args["tau"], args["sigma"])


def test_bs_price_rejects_unknown_side():
    with pytest.raises(InvalidInput):
        bs_price(100.0, 100.0, 0.0, 1.0, 0.2, "straddle")


@pytest.mark.parametrize("sigma", [0.05, 0.2, 1.0, 3.0])
@pytest.mark.parametrize("side", ["call", "put"])
def test_implied_vol_inverts_price(sigma, side):
    price = bs_price(100.0, 110.0, 0.01, 1.5, sigma, side)
    assert implied_vol(price, 100.0, 110.0, 0.01, 1.5, side) == pytest.approx(sigma, rel=1e-8)


def test_implied_vol_rejects_price_at_intrinsic():
    lower, upper = no_arbitrage_band(100.0, 80.0, 0.0, 1.0, "call")
    assert (lower, upper) == (20.0, 100.0)
    with pytest.raises(PriceOutOfBand):
        implied_vol(lower, 100.0, 80.0, 0.0, 1.0)
    with pytest.raises(PriceOutOfBand):
        implied_vol(upper, 100.0, 80.0, 0.0, 1.0)


def test_implied_vols_marks_bad_prices_nan():
    strikes = np.array([90.0, 100.0, 110.0])
    prices = bs_price(100.0, strikes, 0.0, 1.0, 0.3)
    prices[1] = 150.0
    ivs = implied_vols(prices, 100.0, strikes, 0.0, 1.0)
    assert np.isnan(ivs[1])
    assert ivs[[0, 2]] == pytest.approx([0.3, 0.3], rel=1e-8)


# --- Chain parsing ---

CHAIN = """maturity,strike,side,price,iv
# comment lines are skipped
1.0,90,call,,0.25
1.0,100,call,,0.22
1.0,100,put,,0.23
0.5,100,call,8.0,
"""


def test_parse_chain_sorts_and_groups():
    chain = parse_chain(CHAIN, spot=100.0)
    assert chain.maturities == (0.5, 1.0)
    assert [q.strike for q in chain.quotes_at(1.0)] == [90.0, 100.0, 100.0]
    assert [q.side for q in chain.quotes_at(1.0)][1:] == ["call", "put"]
    assert chain.quotes_at(2.0) == ()
    assert chain.dropped == 0


def test_parse_chain_accepts_short_side_names():
    chain = parse_chain("maturity,strike,side,iv\n1,100,C,0.2\n1,100,p,0.2\n", spot=100.0)
    assert {q.side for q in chain.quotes} == {"call", "put"}


def test_parse_chain_reports_line_of_malformed_row():
    text = "maturity,strike,side,iv\n1,100,call,0.2\n1,abc,call,0.2\n"
    with pytest.raises(MalformedRow) as info:
        parse_chain(text, spot=100.0)
    assert info.value.line == 3


def test_parse_chain_rejects_missing_price_and_iv():
    with pytest.raises(MalformedRow):
        parse_chain("maturity,strike,side,price,iv\n1,100,call,,\n", spot=100.0)


def test_parse_chain_rejects_bad_header():
    with pytest.raises(MalformedRow):
        parse_chain("maturity,strike,side\n1,100,call\n", spot=100.0)


def test_parse_chain_rejects_duplicates():
    text = "maturity,strike,side,iv\n1,100,call,0.2\n1,100,call,0.21\n"
    with pytest.raises(DuplicateQuote):
        parse_chain(text, spot=100.0)


def test_parse_chain_rejects_negative_values():
    with pytest.raises(NegativeValue):
        parse_chain("maturity,strike,side,iv\n1,-100,call,0.2\n", spot=100.0)


def test_parse_chain_empty():
    with pytest.raises(NoQuotes):
        parse_chain("", spot=100.0)


def test_parse_chain_drops_out_of_band_prices():
    text = "maturity,strike,side,price\n1,100,call,120\n1,110,call,5\n"
    chain = parse_chain(text, spot=100.0)
    assert chain.dropped == 1
    assert [q.strike for q in chain.quotes] == [110.0]


def test_parse_chain_all_dropped_is_no_quotes():
    with pytest.raises(NoQuotes):
        parse_chain("maturity,strike,side,price\n1,100,call,120\n", spot=100.0)


def test_normalize_chain_moves_to_zero_rate():
    chain = parse_chain("maturity,strike,side,iv\n2,110,call,0.2\n", spot=100.0, rate=0.05)
    normalized = normalize_chain(chain)
    quote = normalized.quotes[0]
    assert normalized.rate == 0.0
    assert quote.strike / normalized.spot == pytest.approx(moneyness(110.0, 2.0, 100.0, 0.05))
    assert quote.iv == 0.2


def test_normalize_chain_preserves_implied_volatility():
    price = bs_price(100.0, 110.0, 0.05, 2.0, 0.3)
    chain = parse_chain(f"maturity,strike,side,price\n2,110,call,{price!r}\n", spot=100.0, rate=0.05)
    quote = normalize_chain(chain).quotes[0]
    assert implied_vol(quote.price, 100.0, quote.strike, 0.0, 2.0) == pytest.approx(0.3, rel=1e-8)


def test_chain_frame_columns():
    frame = chain_frame(parse_chain(CHAIN, spot=100.0))
    assert list(frame.columns) == ["maturity", "strike", "side", "price", "iv"]
    assert len(frame) == 4


# --- Blending ---


def test_blend_endpoints_and_midpoint():
    strikes = np.linspace(80.0, 120.0, 9)
    call = IvCurve(strikes, np.full(9, 0.20))
    put = IvCurve(strikes, np.full(9, 0.30))
    blended = blend_put_call(call, put, 90.0, 110.0)
    assert blended(90.0) == pytest.approx(0.30)
    assert blended(110.0) == pytest.approx(0.20)
    assert blended(100.0) == pytest.approx(0.25)
    assert blended(85.0) == pytest.approx(0.30)
    assert blended(115.0) == pytest.approx(0.20)


def test_blend_requires_coverage():
    call = IvCurve(np.array([95.0, 120.0]), np.array([0.2, 0.2]))
    put = IvCurve(np.array([80.0, 120.0]), np.array([0.3, 0.3]))
    with pytest.raises(DomainMismatch):
        blend_put_call(call, put, 90.0, 110.0)


def test_blend_rejects_empty_band():
    curve = IvCurve(np.array([80.0, 120.0]), np.array([0.2, 0.2]))
    with pytest.raises(InvalidInput):
        blend_put_call(curve, curve, 100.0, 100.0)
