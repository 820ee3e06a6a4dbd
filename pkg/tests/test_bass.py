"""
Bass Calibration Tests
Operator, fixed-point iteration, transport maps and the calibrated model,
checked against the closed-form Black-Scholes solution.
"""

import math

import numpy as np
import pytest
from scipy.stats import norm

from backend.bass import (
    FixedPointOptions,
    apply_A,
    benchmark_schemes,
    calibrate,
    gaussian_fixed_point,
    inner_map,
    iteration_fit,
    load_model,
    save_model,
    solve_fixed_point,
    transport_map,
    w_grid,
)
from backend.bass.fixed_point import cdf_mean, initial_guess, recenter
from backend.density.marginal import LognormalMarginal
from backend.quad import GridFunction, QuadratureScheme
from backend.synth.lognormal import bs_marginals
from backend.utils.exceptions import (
    CalendarArbitrage,
    InvalidInput,
    MaxIterExceeded,
    TimeOutOfInterval,
)

SPOT = 100.0


def bs_spot(t, w):
    return SPOT * np.exp(-0.5 * t + np.asarray(w))


def is_cdf(F: GridFunction, slack: float = 1e-12) -> bool:
    values = F.values
    return bool(np.all(np.diff(values) >= -slack) and values.min() >= -slack and values.max() <= 1.0 + slack)


# --- Operator ---


def test_w_grid_bounds():
    grid = w_grid(1.44, points=11, width=8.0)
    assert grid[0] == pytest.approx(-9.6)
    assert grid[-1] == pytest.approx(9.6)
    with pytest.raises(InvalidInput):
        w_grid(0.0)


def test_operator_fixes_gaussian_cdf(bs_preset_marginals, trap_scheme):
    mu_1, mu_2 = bs_preset_marginals[:2]
    grid = w_grid(1.2)
    F = GridFunction(grid, norm.cdf(grid), kind="cdf")
    AF = apply_A(F, mu_1, mu_2, 0.2, trap_scheme)
    assert np.max(np.abs(AF.values - F.values)) < 2e-4
    assert is_cdf(AF)


def test_operator_on_identical_marginals_returns_cdf(trap_scheme):
    mu = LognormalMarginal(SPOT, 1.0, 1.0)
    grid = w_grid(1.2)
    F = GridFunction(grid, norm.cdf(grid), kind="cdf")
    assert is_cdf(apply_A(F, mu, mu, 0.2, trap_scheme))


def test_operator_preserves_monotonicity_on_random_cdfs(bs_preset_marginals, trap_scheme):
    mu_1, mu_2 = bs_preset_marginals[:2]
    grid = w_grid(1.2, points=201)
    rng = np.random.default_rng(17)
    for _ in range(100):
        weights = rng.dirichlet(np.ones(3))
        means = rng.uniform(-1.0, 1.0, 3)
        scales = rng.uniform(0.3, 1.5, 3)
        values = sum(p * norm.cdf((grid - m) / s) for p, m, s in zip(weights, means, scales))
        AF = apply_A(GridFunction(grid, values, kind="cdf"), mu_1, mu_2, 0.2, trap_scheme)
        assert is_cdf(AF)


def test_inner_map_is_monotone(bs_preset_marginals, trap_scheme):
    grid = w_grid(1.2)
    F = GridFunction(grid, norm.cdf(grid), kind="cdf")
    G = inner_map(F, bs_preset_marginals[1], 0.2, trap_scheme)
    assert G.kind == "map"
    assert np.all(np.diff(G.values) >= 0)


def test_recenter_removes_mean():
    grid = np.linspace(-10.0, 10.0, 2001)
    F = GridFunction(grid, norm.cdf(grid - 0.3), kind="cdf")
    assert cdf_mean(F) == pytest.approx(0.3, abs=1e-6)
    assert cdf_mean(recenter(F)) == pytest.approx(0.0, abs=1e-6)


def test_initial_guess_kinds():
    grid = np.linspace(-3.0, 3.0, 7)
    assert initial_guess(grid, 1.0, 0.25, "increment").values == pytest.approx(norm.cdf(grid / 0.5))
    assert initial_guess(grid, 1.0, 0.25, "maturity").values == pytest.approx(norm.cdf(grid))
    with pytest.raises(InvalidInput):
        initial_guess(grid, 1.0, 0.25, "uniform")


# --- Fixed point ---


def test_fixed_point_converges_to_gaussian(bs_preset_marginals, trap_scheme):
    mu_1, mu_2 = bs_preset_marginals[:2]
    interval = solve_fixed_point(mu_1, mu_2, 0.2, 1e-5, 500, trap_scheme)
    w = np.linspace(-3.0, 3.0, 121)
    assert np.max(np.abs(interval.F_W(w) - norm.cdf(w))) < 1e-3
    assert interval.t_start == 1.0 and interval.t_end == pytest.approx(1.2)
    assert interval.iterations == len(interval.error_history)
    assert all(e > 0 for e in interval.error_history)
    assert interval.final_error <= 1e-5
    assert is_cdf(interval.F_W)


@pytest.mark.parametrize("tol", [1e-3, 1e-4])
def test_fixed_point_error_within_contraction_cushion(bs_preset_marginals, trap_scheme, tol):
    mu_1, mu_2 = bs_preset_marginals[:2]
    interval = solve_fixed_point(mu_1, mu_2, 0.2, tol, 500, trap_scheme)
    w = interval.F_W.grid[np.abs(interval.F_W.grid) <= 3.0]
    assert np.max(np.abs(interval.F_W(w) - gaussian_fixed_point(1.0, w))) <= 10 * tol


def test_fixed_point_from_maturity_guess(bs_preset_marginals, trap_scheme):
    mu_1, mu_2 = bs_preset_marginals[:2]
    from_maturity = solve_fixed_point(
        mu_1, mu_2, 0.2, 1e-4, 500, trap_scheme, FixedPointOptions(initial_guess="maturity")
    )
    from_increment = solve_fixed_point(
        mu_1, mu_2, 0.2, 1e-4, 500, trap_scheme, FixedPointOptions(initial_guess="increment")
    )
    assert from_maturity.iterations <= from_increment.iterations


def test_default_guess_starts_away_from_black_scholes_fixed_point(bs_preset_marginals, trap_scheme):
    assert FixedPointOptions().initial_guess == "increment"
    mu_1, mu_2 = bs_preset_marginals[:2]
    at_solution = solve_fixed_point(
        mu_1, mu_2, 0.2, 1e-3, 500, trap_scheme, FixedPointOptions(initial_guess="maturity")
    )
    from_default = solve_fixed_point(mu_1, mu_2, 0.2, 1e-3, 500, trap_scheme, FixedPointOptions())
    assert at_solution.iterations == 1
    assert from_default.iterations > 1


def test_fixed_point_identical_marginals_smoke(trap_scheme):
    mu = LognormalMarginal(SPOT, 1.0, 1.0)
    interval = solve_fixed_point(mu, mu, 0.2, 1e-2, 500, trap_scheme)
    history = interval.error_history
    assert history[-1] <= 1e-2
    assert all(b <= a for a, b in zip(history, history[1:]))


def test_fixed_point_iteration_cap(bs_preset_marginals, trap_scheme):
    mu_1, mu_2 = bs_preset_marginals[:2]
    with pytest.raises(MaxIterExceeded) as info:
        solve_fixed_point(mu_1, mu_2, 0.2, 1e-9, 3, trap_scheme)
    assert len(info.value.history) == 3


@pytest.mark.parametrize("tol, max_iter, dt", [(0.0, 10, 0.2), (1.5, 10, 0.2), (1e-3, 0, 0.2), (1e-3, 10, 0.0)])
def test_fixed_point_argument_checks(bs_preset_marginals, trap_scheme, tol, max_iter, dt):
    mu_1, mu_2 = bs_preset_marginals[:2]
    with pytest.raises(InvalidInput):
        solve_fixed_point(mu_1, mu_2, dt, tol, max_iter, trap_scheme)


def test_iterations_grow_linearly_in_log_tolerance(bs_preset_marginals, trap_scheme):
    frame = benchmark_schemes(
        bs_preset_marginals,
        (1.0, 1.2, 1.5),
        tols=(1e-2, 1e-3, 1e-4, 1e-5),
        schemes=(trap_scheme,),
        exact=gaussian_fixed_point,
    )
    assert len(frame) == 4 * 2
    assert frame["fixed_point_error"].notna().all()
    fit = iteration_fit(frame)
    assert len(fit) == 2
    assert (fit["r2"] >= 0.9).all()
    assert (fit["slope"] > 0).all()


# --- Transport map and model ---


@pytest.mark.parametrize("t", [0.5, 1.0, 1.1, 1.2, 1.35, 1.5])
def test_spot_map_matches_black_scholes(bs_model, t):
    w = np.linspace(-3.0 * math.sqrt(t), 3.0 * math.sqrt(t), 61)
    spots = bs_model.spot_map(t, w)
    assert spots == pytest.approx(bs_spot(t, w), rel=1e-3)


def test_transport_map_monotone(bs_model):
    interval = bs_model.intervals[1]
    w = np.sort(np.random.default_rng(3).normal(0.0, 1.3, 1000))
    spots = transport_map(interval, None, 1.3, w, bs_model.scheme)
    assert np.all(np.diff(spots) >= 0)


def test_transport_map_at_interval_end_is_inner_map(bs_model, bs_preset_marginals):
    interval = bs_model.intervals[0]
    w = interval.F_W.grid[::50]
    rebuilt = transport_map(interval, bs_preset_marginals[1], interval.t_end, w, bs_model.scheme)
    direct = inner_map(interval.F_W, bs_preset_marginals[1], interval.dt, bs_model.scheme)(w)
    assert rebuilt == pytest.approx(direct, rel=1e-12)
    assert transport_map(interval, None, interval.t_end, 0.0, bs_model.scheme) == pytest.approx(
        float(interval.inner(0.0))
    )


def test_transport_map_rejects_time_outside_interval(bs_model):
    with pytest.raises(TimeOutOfInterval):
        transport_map(bs_model.intervals[0], None, 1.3, 0.0, bs_model.scheme)
    with pytest.raises(TimeOutOfInterval):
        bs_model.spot_map(2.0, 0.0)


def test_calibrated_model_structure(bs_model):
    assert len(bs_model.intervals) == 2
    assert bs_model.spot == pytest.approx(SPOT)
    assert bs_model.total_iterations == sum(i.iterations for i in bs_model.intervals)
    rows = bs_model.convergence_rows()
    assert len(rows) == bs_model.total_iterations
    assert rows[0][:2] == (0, 1)
    for j, t in enumerate(bs_model.maturities):
        assert bs_model.maturity_map(j)(0.0) == pytest.approx(SPOT * math.exp(-0.5 * t), rel=1e-3)


def test_schemes_agree(bs_preset_marginals, bs_model, gh_scheme):
    gh_model = calibrate(bs_preset_marginals, (1.0, 1.2, 1.5), gh_scheme, tol=1e-6, max_iter=500)
    for trap_interval, gh_interval in zip(bs_model.intervals, gh_model.intervals):
        assert trap_interval.F_W.sup_distance(gh_interval.F_W) < 5e-4


def test_single_maturity_model(trap_scheme):
    model = calibrate(bs_marginals(SPOT, 1.0, (1.0,)), (1.0,), trap_scheme, 1e-4, 100)
    assert model.intervals == ()
    w = np.linspace(-2.0, 2.0, 9)
    assert model.spot_map(1.0, w) == pytest.approx(bs_spot(1.0, w), rel=1e-5)


def test_calibrate_rejects_calendar_arbitrage(trap_scheme):
    marginals = [LognormalMarginal(SPOT, 1.1, 1.0), LognormalMarginal(SPOT, 0.9, 1.2)]
    with pytest.raises(CalendarArbitrage) as info:
        calibrate(marginals, (1.0, 1.2), trap_scheme, 1e-4, 100)
    assert info.value.violations


def test_calibrate_input_checks(bs_preset_marginals, trap_scheme):
    with pytest.raises(InvalidInput):
        calibrate(bs_preset_marginals, (1.0, 1.5, 1.2), trap_scheme, 1e-4, 100)
    with pytest.raises(InvalidInput):
        calibrate(bs_preset_marginals[:2], (1.0, 1.2, 1.5), trap_scheme, 1e-4, 100)


def test_calibrate_tags_failing_interval(bs_preset_marginals, trap_scheme):
    with pytest.raises(MaxIterExceeded) as info:
        calibrate(bs_preset_marginals, (1.0, 1.2, 1.5), trap_scheme, 1e-9, 2, workers=2)
    assert info.value.interval in (0, 1)


def test_model_file_round_trip(bs_model, tmp_path):
    path = save_model(bs_model, tmp_path / "model.json", metadata={"config_hash": "abc"})
    restored = load_model(path)
    assert restored.maturities == bs_model.maturities
    w = np.linspace(-2.0, 2.0, 11)
    assert restored.spot_map(1.3, w) == pytest.approx(bs_model.spot_map(1.3, w), rel=1e-12)
    again = save_model(restored, tmp_path / "again.json", metadata={"config_hash": "abc"})
    assert again.read_text() == path.read_text()


def test_load_model_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.json")


def test_model_requires_matching_interval_count(bs_model):
    with pytest.raises(InvalidInput):
        type(bs_model)(
            maturities=bs_model.maturities,
            marginals=bs_model.marginals,
            intervals=bs_model.intervals[:1],
            scheme=bs_model.scheme,
            initial_map=bs_model.initial_map,
            spot=bs_model.spot,
        )


def test_scheme_smoothness_round_trips_through_dict():
    scheme = QuadratureScheme(kind="gauss_hermite", n=61, m=2)
    assert QuadratureScheme(**scheme.to_dict()) == scheme
