"""
Density Tests
LQR smile fit, assembled risk-neutral density, marginal CDF/quantile,
calendar check and the Breeden-Litzenberger baseline.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad, trapezoid
from scipy.stats import norm

from backend.density import (
    CoreDensity,
    LognormalMarginal,
    RiskNeutralDensity,
    assemble,
    bl_density,
    build_density,
    calendar_check,
    compare_with_lqr,
    core_from_quotes,
    density_report,
    fit_tails,
    lqr_fit,
    marginal_from_dict,
    marginal_to_dict,
    rnd_from_iv,
    smile_at,
    smile_from_quotes,
)
from backend.density.formula import call_from_smile, smile_bracket
from backend.density.lqr import epanechnikov
from backend.density.pipeline import DensityOptions
from backend.density.rnd import shrink_lower_strike, tail_targets
from backend.density.tails import TailConstraints
from backend.marketdata.black_scholes import bs_price
from backend.marketdata.quotes import OptionQuote
from backend.synth.ssvi import SSVI_PRESET, SSVI_PRESET_MATURITY, bl_preset_strikes, ssvi_chain, ssvi_iv, ssvi_rnd
from backend.utils.exceptions import InvalidInput, OutOfRange, TooFewQuotes

SPOT = 100.0


def flat_quotes(sigma: float, tau: float, strikes: np.ndarray):
    return [OptionQuote(maturity=tau, strike=float(k), side="call", iv=sigma) for k in strikes]


@pytest.fixture(scope="module")
def flat_density():
    strikes = np.linspace(50.0, 200.0, 31)
    return build_density(flat_quotes(0.3, 1.0, strikes), SPOT, 1.0, DensityOptions())


@pytest.fixture(scope="module")
def unit_vol_density():
    strikes = np.linspace(5.0, 400.0, 80)
    return build_density(flat_quotes(1.0, 1.0, strikes), SPOT, 1.0, DensityOptions())


# --- LQR ---


def test_lqr_flat_smile():
    strikes = np.linspace(60.0, 140.0, 17)
    fit = lqr_fit(strikes, np.ones_like(strikes), np.linspace(60.0, 140.0, 41), 8, SPOT, 1.0)
    assert fit.alpha0 == pytest.approx(np.ones(41), abs=1e-8)
    assert fit.alpha1 == pytest.approx(np.zeros(41), abs=1e-8)
    assert fit.alpha2 == pytest.approx(np.zeros(41), abs=1e-8)
    assert not fit.constrained.any()


def test_lqr_reproduces_quadratic_smile():
    a, b, c, center = 0.3, -0.001, 1e-5, 100.0
    strikes = np.linspace(70.0, 130.0, 25)
    ivs = a + b * (strikes - center) + c * (strikes - center) ** 2
    grid = np.linspace(80.0, 120.0, 9)
    fit = lqr_fit(strikes, ivs, grid, 8, SPOT, 1.0)
    d = grid - center
    assert fit.alpha0 == pytest.approx(a + b * d + c * d * d, abs=1e-8)
    assert fit.alpha1 == pytest.approx(b + 2 * c * d, abs=1e-8)
    assert fit.alpha2 == pytest.approx(np.full_like(grid, c), abs=1e-8)


def test_lqr_flat_density_is_lognormal():
    strikes = np.linspace(60.0, 140.0, 17)
    fit = lqr_fit(strikes, np.full_like(strikes, 0.25), np.linspace(60.0, 140.0, 21), 8, SPOT, 1.0)
    K = np.linspace(65.0, 135.0, 15)
    expected = LognormalMarginal(SPOT, 0.25, 1.0).pdf(K)
    assert rnd_from_iv(fit, K) == pytest.approx(expected, abs=1e-10)


def test_lqr_broad_density_integrates_to_one():
    strikes = np.linspace(0.5, 5000.0, 500)
    grid = np.geomspace(0.5, 5000.0, 4001)
    fit = lqr_fit(strikes, np.ones_like(strikes), grid, 8, SPOT, 1.0)
    assert trapezoid(fit.density(), grid) == pytest.approx(1.0, abs=1e-4)


def test_lqr_noisy_ssvi_recovers_smile_and_keeps_density_nonnegative():
    noise = 0.005
    chain = ssvi_chain(noise=noise, seed=11)
    quotes = chain.quotes_at(SSVI_PRESET_MATURITY)
    strikes = np.array([q.strike for q in quotes])
    ivs = np.array([q.iv for q in quotes])
    grid = np.linspace(strikes[0], strikes[-1], 201)
    fit = lqr_fit(strikes, ivs, grid, 8, SPOT, SSVI_PRESET_MATURITY)

    truth = ssvi_iv(SSVI_PRESET, np.log(grid / SPOT), SSVI_PRESET_MATURITY)
    interior = (grid >= 40.0) & (grid <= 140.0)
    assert np.max(np.abs(fit.alpha0[interior] - truth[interior])) < noise
    assert np.all(fit.alpha0 > 0)
    bracket = smile_bracket(grid, SPOT, SSVI_PRESET_MATURITY, fit.alpha0, fit.alpha1, 2.0 * fit.alpha2)
    assert np.all(bracket >= -1e-12)


def test_lqr_window_holds_enough_quotes():
    strikes = np.linspace(60.0, 140.0, 17)
    fit = lqr_fit(strikes, np.full_like(strikes, 0.2), np.linspace(60.0, 140.0, 33), 6, SPOT, 1.0)
    for K, h in zip(fit.strike_grid, fit.bandwidths):
        assert np.count_nonzero(epanechnikov((strikes - K) / h)) >= 6


def test_lqr_input_checks():
    strikes = np.array([90.0, 95.0, 100.0, 105.0])
    with pytest.raises(TooFewQuotes):
        lqr_fit(strikes, np.full(4, 0.2), strikes, 5, SPOT, 1.0)
    strikes = np.linspace(80.0, 120.0, 9)
    with pytest.raises(TooFewQuotes):
        lqr_fit(strikes, np.full(9, 0.2), strikes, 10, SPOT, 1.0)
    with pytest.raises(OutOfRange):
        lqr_fit(strikes, np.full(9, 0.2), np.array([70.0, 100.0]), 5, SPOT, 1.0)
    fit = lqr_fit(strikes, np.full(9, 0.2), strikes, 5, SPOT, 1.0)
    with pytest.raises(OutOfRange):
        rnd_from_iv(fit, 130.0)


def test_smile_at_returns_level_and_derivatives():
    strikes = np.linspace(70.0, 130.0, 25)
    ivs = 0.3 + 1e-5 * (strikes - 100.0) ** 2
    fit = lqr_fit(strikes, ivs, strikes, 8, SPOT, 1.0)
    sigma, dsigma, d2sigma = smile_at(fit, 110.0)
    assert sigma == pytest.approx(0.301, abs=1e-9)
    assert dsigma == pytest.approx(2e-4, abs=1e-9)
    assert d2sigma == pytest.approx(2e-5, abs=1e-9)


# --- Assembled density ---


def test_flat_smile_pipeline_reproduces_lognormal(flat_density):
    q = flat_density.density
    truth = LognormalMarginal(SPOT, 0.3, 1.0)
    x = q.sample_grid()
    assert np.max(np.abs(q.pdf(x) - truth.pdf(x))) < 1e-6
    strikes = np.linspace(40.0, 260.0, 10)
    assert q.call_price(strikes) == pytest.approx(bs_price(SPOT, strikes, 0.0, 1.0, 0.3), abs=1e-6)


def test_flat_smile_report(flat_density):
    report = flat_density.report
    assert report.passed
    assert report.max_repricing_error < 1e-5
    assert report.mass == pytest.approx(1.0, abs=1e-6)
    assert report.mean == pytest.approx(SPOT, rel=1e-4)
    assert max(report.pasting_jumps) < 1e-8


def test_tails_refit_and_assemble(flat_density):
    fit = flat_density.fit
    core = CoreDensity.from_fit(fit)
    tails = fit_tails(core, SPOT, 1.0)
    q = assemble(fit, tails, SPOT, 1.0, core=core)
    assert q.mass() == pytest.approx(1.0, abs=1e-6)
    assert q.mean() == pytest.approx(SPOT, rel=1e-4)
    assert 0.0 < q.left_mass < 0.1
    for K in (q.K_L, q.K_U):
        left = float(q.pdf(K * (1 - 1e-9)))
        right = float(q.pdf(K * (1 + 1e-9)))
        assert left == pytest.approx(right, abs=1e-8)


# --- Bimodal cores and put/call blending ---

# (weight, forward, sigma): a minor mode near 30 below the main one
BIMODAL_COMPONENTS = ((0.15, 30.0, 0.3), (0.85, (SPOT - 0.15 * 30.0) / 0.85, 0.2))


def bimodal_quotes(tau: float = 1.0):
    quotes = []
    for k in np.linspace(12.0, 250.0, 150):
        side = "put" if k < SPOT else "call"
        price = sum(w * float(bs_price(F, k, 0.0, tau, s, side)) for w, F, s in BIMODAL_COMPONENTS)
        quotes.append(OptionQuote(maturity=tau, strike=float(k), side=side, price=price))
    return quotes


def test_bimodal_options_shrink_and_constrain_left_tail():
    base = DensityOptions.from_settings(window_count=10)
    options = base.bimodal()
    assert options.tails.shrink_domain
    assert options.tails.left_constraints == TailConstraints.bimodal()
    assert options.tails.right_constraints == base.tails.right_constraints
    assert options.tails.close_budget == base.tails.close_budget
    assert options.window_count == 10
    assert options.grid == base.grid


def test_bimodal_core_is_shrunk_to_interior_minimum():
    quotes = bimodal_quotes()
    _, _, fit, full = core_from_quotes(quotes, SPOT, 1.0, DensityOptions())
    shrunk = shrink_lower_strike(full)
    assert shrunk is not None and full.lower < shrunk < SPOT

    _, _, _, core = core_from_quotes(quotes, SPOT, 1.0, DensityOptions().bimodal())
    assert core.lower == pytest.approx(shrunk)
    assert core.upper == pytest.approx(full.upper)
    assert core.mass < full.mass
    assert core.values[0] == pytest.approx(float(fit.density_at(np.array([shrunk]))[0]))


def test_unimodal_core_is_not_shrunk():
    strikes = np.linspace(50.0, 200.0, 31)
    _, _, _, core = core_from_quotes(flat_quotes(0.3, 1.0, strikes), SPOT, 1.0, DensityOptions().bimodal())
    assert core.lower == pytest.approx(50.0)


def test_blend_band_mixes_put_and_call_smiles():
    strikes = np.linspace(50.0, 200.0, 31)
    quotes = [OptionQuote(maturity=1.0, strike=float(k), side="put", iv=0.32) for k in strikes]
    quotes += [OptionQuote(maturity=1.0, strike=float(k), side="call", iv=0.28) for k in strikes]
    smile, skipped = smile_from_quotes(quotes, SPOT, 1.0, blend_band=(0.8, 1.2))
    assert skipped == 0
    assert smile(60.0) == pytest.approx(0.32)
    assert smile(80.0) == pytest.approx(0.32)
    assert smile(100.0) == pytest.approx(0.30)
    assert smile(120.0) == pytest.approx(0.28)
    assert smile(180.0) == pytest.approx(0.28)


def test_blended_put_call_prices_reproduce_lognormal():
    strikes = np.linspace(50.0, 200.0, 31)
    quotes = [
        OptionQuote(maturity=1.0, strike=float(k), side=side, price=float(bs_price(SPOT, k, 0.0, 1.0, 0.3, side)))
        for k in strikes
        for side in ("call", "put")
        if (side == "put" and k <= 130.0) or (side == "call" and k >= 70.0)
    ]
    options = DensityOptions(blend_band=(0.7, 1.3))
    result = build_density(quotes, SPOT, 1.0, options)
    assert result.skipped == 0
    assert np.max(np.abs(result.smile.ivs - 0.3)) < 1e-6
    truth = LognormalMarginal(SPOT, 0.3, 1.0)
    x = np.linspace(60.0, 180.0, 25)
    assert np.max(np.abs(result.density.pdf(x) - truth.pdf(x))) < 1e-5
    assert result.report.repricing_ok


def test_density_report_flags_scaled_density(flat_density):
    q = flat_density.density

    class ScaledDensity(RiskNeutralDensity):
        def pdf(self, x):
            return 0.9 * np.asarray(super().pdf(x))

    broken = ScaledDensity(core=q.core, left=q.left, right=q.right, forward=q.forward, tau=q.tau)
    report = density_report(broken)
    assert report.mass == pytest.approx(0.9, abs=1e-4)
    assert not report.mass_ok
    assert not report.passed


def test_density_report_flags_negative_core_point(flat_density):
    q = flat_density.density
    hole = float(q.core.grid[q.core.grid.size // 2])

    class HoledDensity(RiskNeutralDensity):
        def pdf(self, x):
            values = np.asarray(super().pdf(x), dtype=float)
            return np.where(np.isclose(x, hole, rtol=0.0, atol=1e-12), -1e-3, values)

    broken = HoledDensity(core=q.core, left=q.left, right=q.right, forward=q.forward, tau=q.tau)
    report = density_report(broken)
    assert report.min_density < 0
    assert not report.nonnegative


def test_ssvi_density_passes_checks(ssvi_density):
    report = ssvi_density.report
    assert report.nonnegative
    assert report.mass_ok
    assert report.mean_ok
    assert report.repricing_ok
    q = ssvi_density.density
    assert q.K_L == pytest.approx(6.0168, abs=1e-3)
    assert 0.0 < q.left_mass < 0.1
    for tail in (q.left, q.right):
        assert 0.0 <= tail.lam <= 1.0
        assert tail.v1 > 0 and tail.v2 > 0


def test_edge_call_targets_close_mass_mean_and_edge_calls(ssvi_density):
    q = ssvi_density.density
    core, F, tau = q.core, q.forward, q.tau
    left, right = tail_targets(core, F, tau, "edge_calls")

    assert (1.0 - left.survival) + core.mass + right.survival == pytest.approx(1.0, abs=1e-12)
    assert left.partial_mean + core.first_moment + right.partial_mean == pytest.approx(F, rel=1e-12)

    K_L, K_U = core.lower, core.upper
    smile_l = call_from_smile(K_L, F, tau, smile_at(core.fit, K_L)[0])
    smile_u = call_from_smile(K_U, F, tau, smile_at(core.fit, K_U)[0])
    call_u = right.partial_mean - K_U * right.survival
    call_l = (core.first_moment - K_L * core.mass) + call_u + (K_U - K_L) * right.survival
    assert call_u == pytest.approx(smile_u, abs=1e-9)
    assert call_l == pytest.approx(smile_l, abs=1e-9)


def test_fitted_density_reprices_edge_calls(ssvi_density):
    q = ssvi_density.density
    for K in (q.K_L, q.K_U):
        sigma = smile_at(q.core.fit, K)[0]
        assert float(q.call_price(K)) == pytest.approx(call_from_smile(K, q.forward, q.tau, sigma), abs=1e-5)


def test_tail_targets_rejects_unknown_closure(ssvi_density):
    q = ssvi_density.density
    with pytest.raises(InvalidInput):
        tail_targets(q.core, q.forward, q.tau, "middle")


def test_core_integrals_match_lognormal_to_panel_tolerance(flat_density):
    core = flat_density.density.core
    truth = LognormalMarginal(SPOT, 0.3, 1.0)

    def upper_mean(K):
        return SPOT * norm.cdf((np.log(SPOT / K) + 0.045) / 0.3)

    assert core.mass == pytest.approx(float(truth.cdf(core.upper) - truth.cdf(core.lower)), abs=1e-9)
    assert core.first_moment == pytest.approx(upper_mean(core.lower) - upper_mean(core.upper), abs=1e-7)
    x = np.array([63.7, 100.0, 151.3])
    m0, m1 = core.cumulative(x)
    assert m0 == pytest.approx(truth.cdf(x) - truth.cdf(core.lower), abs=1e-9)
    assert m1 == pytest.approx(upper_mean(core.lower) - upper_mean(x), abs=1e-7)


def test_core_panel_mass_matches_adaptive_quadrature(ssvi_density):
    fit = ssvi_density.fit
    for a, b in [(20.0, 20.4), (57.3, 58.1), (99.9, 100.6)]:
        exact, _ = quad(lambda K: float(fit.density_at(K)), a, b, epsabs=1e-14, limit=200)
        assert CoreDensity.from_fit(fit, lower=a, upper=b).mass == pytest.approx(exact, abs=2e-10)


def test_ssvi_density_matches_truth_in_core(ssvi_density):
    K = np.linspace(40.0, 140.0, 21)
    truth = ssvi_rnd(SSVI_PRESET, K, SSVI_PRESET_MATURITY)
    assert np.max(np.abs(ssvi_density.density.pdf(K) - truth)) < 1e-3


def test_density_frame_and_dict(ssvi_density):
    frame = ssvi_density.to_frame()
    assert list(frame.columns) == ["strike", "density", "cdf"]
    assert frame["cdf"].is_monotonic_increasing
    payload = ssvi_density.to_dict()
    assert {"mass", "mean", "repricing_err", "tail_params"} <= set(payload)
    assert set(payload["tail_params"]) == {"L", "U"}


# --- Marginal ---


def test_marginal_median(unit_vol_density):
    marginal = unit_vol_density.marginal
    median = SPOT * math.exp(-0.5)
    assert marginal.cdf(median) == pytest.approx(0.5, abs=1e-6)
    assert marginal.quantile(0.5) == pytest.approx(60.653, rel=1e-4)


def test_marginal_monotone_and_round_trip(unit_vol_density):
    marginal = unit_vol_density.marginal
    x = np.geomspace(marginal.support[0], marginal.support[1], 10_000)
    assert np.all(np.diff(marginal.cdf(x)) >= 0)
    nodes = marginal.grid
    inner = nodes[(marginal.cdf_values > 1e-6) & (marginal.cdf_values < 1 - 1e-6)]
    assert marginal.quantile(marginal.cdf(inner)) == pytest.approx(inner, rel=1e-8)


def test_marginal_serialization_round_trip(unit_vol_density):
    marginal = unit_vol_density.marginal
    restored = marginal_from_dict(marginal_to_dict(marginal))
    u = np.linspace(0.01, 0.99, 25)
    assert restored.quantile(u) == pytest.approx(marginal.quantile(u), rel=1e-12)
    lognormal = LognormalMarginal(SPOT, 0.4, 2.0)
    assert marginal_from_dict(marginal_to_dict(lognormal)).quantile(0.3) == pytest.approx(lognormal.quantile(0.3))


def test_lognormal_marginal_quantile():
    marginal = LognormalMarginal(SPOT, 1.0, 1.0)
    assert marginal.quantile(0.8413447460685429) == pytest.approx(100.0 * math.exp(0.5), rel=1e-6)
    assert marginal.mean == SPOT
    assert marginal.call_price(100.0) == pytest.approx(38.2925, abs=1e-4)


# --- Calendar ---


def test_calendar_equal_marginals():
    q = LognormalMarginal(SPOT, 1.0, 1.0)
    assert calendar_check(q, q, 0.0, np.linspace(20.0, 300.0, 50)) == []


def test_calendar_black_scholes_ordered():
    early, late = LognormalMarginal(SPOT, 1.0, 1.0), LognormalMarginal(SPOT, 1.0, 1.2)
    assert calendar_check(early, late, 0.0, np.linspace(20.0, 300.0, 50)) == []


def test_calendar_swapped_marginals_violate_at_the_money():
    early, late = LognormalMarginal(SPOT, 1.0, 1.0), LognormalMarginal(SPOT, 1.0, 1.2)
    violations = calendar_check(late, early, 0.0, np.linspace(20.0, 300.0, 57))
    assert violations
    assert any(abs(v.strike - SPOT) <= 10.0 for v in violations)
    assert all(v.value < 0 for v in violations)


# --- Breeden-Litzenberger ---


def test_bl_density_matches_lognormal_on_dense_grid():
    strikes = np.linspace(20.0, 300.0, 561)
    prices = bs_price(SPOT, strikes, 0.0, 1.0, 0.4)
    grid = np.linspace(40.0, 250.0, 22)
    sampled = bl_density(list(zip(strikes, prices)), 0.0, 1.0, grid)
    assert sampled.density == pytest.approx(LognormalMarginal(SPOT, 0.4, 1.0).pdf(grid), abs=1e-5)


def test_bl_density_of_linear_prices_is_zero():
    strikes = np.linspace(50.0, 150.0, 11)
    sampled = bl_density(list(zip(strikes, 120.0 - strikes)), 0.0, 1.0)
    assert sampled.density == pytest.approx(np.zeros(9), abs=1e-10)


def test_lqr_beats_bl_on_noisy_ssvi_quotes():
    chain = ssvi_chain(strikes=bl_preset_strikes(), noise=0.005, seed=5)
    quotes = chain.quotes_at(SSVI_PRESET_MATURITY)
    strikes = np.array([q.strike for q in quotes])
    ivs = np.array([q.iv for q in quotes])
    fit = lqr_fit(strikes, ivs, np.linspace(strikes[0], strikes[-1], 101), 8, SPOT, SSVI_PRESET_MATURITY)
    comparison = compare_with_lqr(
        fit,
        [(q.strike, q.price) for q in quotes],
        0.0,
        SSVI_PRESET_MATURITY,
        lambda K: ssvi_rnd(SSVI_PRESET, K, SSVI_PRESET_MATURITY),
        np.linspace(10.0, 40.0, 31),
    )
    assert comparison.lqr_max_error < comparison.bl_max_error
