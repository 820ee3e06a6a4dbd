"""
Synthetic Data Tests
SSVI surface, noise injection and Black-Scholes fixtures.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from backend.density.marginal import LognormalMarginal
from backend.synth import (
    BS_PRESET,
    M_MAX,
    SSVI_PRESET,
    SsviParams,
    add_noise,
    bl_preset_strikes,
    bs_chain,
    bs_marginals,
    bs_truth_frame,
    preset_strikes,
    ssvi_chain,
    ssvi_iv,
    ssvi_rnd,
    ssvi_strike_smile,
    ssvi_truth_frame,
)
from backend.utils.exceptions import InvalidInput


def test_ssvi_atm_vol():
    assert ssvi_iv(SSVI_PRESET, 0.0, 2.0) == pytest.approx(0.63246, abs=1e-5)


def test_ssvi_rejects_arbitrage_parameters():
    with pytest.raises(InvalidInput):
        SsviParams(rho=0.3, lam=0.2)
    with pytest.raises(InvalidInput):
        SsviParams(rho=1.0, lam=2.0)
    with pytest.raises(InvalidInput):
        ssvi_iv(SSVI_PRESET, 0.0, 0.0)


def test_ssvi_custom_theta_curve():
    params = SsviParams(rho=0.0, lam=1.0, theta=lambda t: 0.09 * t)
    assert ssvi_iv(params, 0.0, 1.0) == pytest.approx(0.3)


def test_ssvi_strike_derivatives_match_finite_differences():
    K = np.array([50.0, 100.0, 150.0])
    h = 1e-3
    sigma, d1, d2 = ssvi_strike_smile(SSVI_PRESET, K, 2.0)
    up, _, _ = ssvi_strike_smile(SSVI_PRESET, K + h, 2.0)
    down, _, _ = ssvi_strike_smile(SSVI_PRESET, K - h, 2.0)
    assert d1 == pytest.approx((up - down) / (2 * h), rel=1e-6)
    assert d2 == pytest.approx((up - 2 * sigma + down) / h**2, rel=1e-3)


def test_ssvi_density_integrates_to_one():
    strikes = np.geomspace(0.01, 5_000.0, 20_001)
    density = ssvi_rnd(SSVI_PRESET, strikes, 2.0)
    assert np.all(density >= 0)
    assert trapezoid(density, strikes) == pytest.approx(1.0, abs=5e-3)
    with pytest.raises(InvalidInput):
        ssvi_rnd(SSVI_PRESET, np.array([0.0, 1.0]), 2.0)


def test_preset_strikes_range():
    strikes = preset_strikes()
    assert strikes.min() >= 6.0 and strikes.max() <= 160.0
    assert np.all(np.diff(strikes) > 0)
    assert strikes[0] == pytest.approx(6.0168, abs=1e-4)
    assert strikes[-1] == pytest.approx(159.8655, abs=1e-4)


def test_bl_preset_strikes_cover_five_to_two_hundred():
    strikes = bl_preset_strikes()
    assert strikes.size == 120
    assert strikes.min() == 5.0 and strikes.max() == 200.0
    assert np.diff(strikes) == pytest.approx(np.full(119, 195.0 / 119))


def test_ssvi_chain_quotes_are_consistent():
    chain = ssvi_chain(SSVI_PRESET, (1.0, 2.0))
    assert chain.maturities == (1.0, 2.0)
    quotes = chain.quotes_at(2.0)
    assert len(quotes) == preset_strikes().size
    for quote in quotes[:: max(1, len(quotes) // 5)]:
        expected = ssvi_iv(SSVI_PRESET, np.log(quote.strike / 100.0), 2.0)
        assert quote.iv == pytest.approx(expected)
        assert quote.side == "call"


def test_noisy_chain_is_seeded():
    first = ssvi_chain(noise=0.01, seed=3)
    again = ssvi_chain(noise=0.01, seed=3)
    other = ssvi_chain(noise=0.01, seed=4)
    assert [q.iv for q in first.quotes] == [q.iv for q in again.quotes]
    assert [q.iv for q in first.quotes] != [q.iv for q in other.quotes]


def test_add_noise_bounds_and_seed():
    ivs = np.full(1_000, 0.3)
    noisy = add_noise(ivs, 0.005, seed=1)
    assert np.max(np.abs(noisy - ivs)) <= 0.005
    assert np.array_equal(noisy, add_noise(ivs, 0.005, seed=1))
    assert np.array_equal(add_noise(ivs, 0.0), ivs)
    with pytest.raises(InvalidInput):
        add_noise(ivs, -0.1)


def test_bs_marginals_preset():
    marginals = bs_marginals(**BS_PRESET)
    assert [m.tau for m in marginals] == [1.0, 1.2, 1.5]
    assert all(isinstance(m, LognormalMarginal) for m in marginals)
    assert all(m.smoothness_order == M_MAX for m in marginals)
    assert marginals[1].mean == pytest.approx(100.0)
    with pytest.raises(InvalidInput):
        bs_marginals(100.0, 0.0, (1.0,))


def test_bs_chain_carries_price_and_iv():
    chain = bs_chain(100.0, 0.25, (0.5, 1.0), strikes=np.array([90.0, 100.0, 110.0]))
    assert len(chain.quotes) == 6
    assert all(q.iv == 0.25 for q in chain.quotes)
    atm = [q for q in chain.quotes_at(1.0) if q.strike == 100.0][0]
    assert atm.price == pytest.approx(9.9476, abs=1e-4)


def test_truth_frames():
    strikes = np.array([80.0, 100.0, 120.0])
    bs = bs_truth_frame(100.0, 0.3, 1.0, strikes)
    ssvi = ssvi_truth_frame(SSVI_PRESET, 2.0, strikes)
    for frame in (bs, ssvi):
        assert list(frame.columns) == ["maturity", "strike", "iv", "density"]
        assert (frame["density"] > 0).all()
