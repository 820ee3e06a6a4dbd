"""
BLV Quick Demo - Black-Scholes Experiment
Calibrates the closed-form case and walks through every stage.
"""

import sys

import numpy as np

from backend.bass import benchmark_schemes, calibrate, fixed_point_distance, gaussian_fixed_point, iteration_fit
from backend.mc import SimulationSpec, evaluate_model
from backend.quad import QuadratureScheme
from backend.services.performance_monitor import PerformanceMonitor
from backend.synth import BS_PRESET, bs_marginals
from backend.utils.exceptions import BLVException
from backend.utils.logger import setup_logging

print("=" * 70)
print("📈 BLV Quick Demo - Black-Scholes Experiment")
print("=" * 70)
print()
print("This demo runs the closed-form case end to end:")
print("  ✓ Lognormal marginals at T = 1, 1.2, 1.5 (σ = 1)")
print("  ✓ Fixed-point calibration per interval")
print("  ✓ Transport map against S_t = S_0·exp(W_t − t/2)")
print("  ✓ Monte Carlo calibration error")
print("  ✓ Trapezoid vs Gauss-Hermite iteration counts")
print()
print("=" * 70)
print()


def demo(paths: int = 500_000):
    spot, sigma, maturities = BS_PRESET["spot"], BS_PRESET["sigma"], BS_PRESET["maturities"]
    marginals = bs_marginals(spot, sigma, maturities)
    scheme = QuadratureScheme("trapezoid", 101, 2)
    monitor = PerformanceMonitor()

    # Stage 1: Calibration
    print("📍 Stage 1: Fixed-point calibration (tol 1e-4)")
    print()
    model = calibrate(marginals, maturities, scheme, tol=1e-4, max_iter=500, workers=2, monitor=monitor)
    for interval in model.intervals:
        distance = fixed_point_distance(interval, gaussian_fixed_point)
        print(
            f"   [{interval.t_start:.1f}, {interval.t_end:.1f}]  iterations={interval.iterations:3d}"
            f"  err_itr={interval.final_error:.2e}  |F_W − Φ|={distance:.2e}"
        )
    print(f"   Wall time: {monitor.duration('calibrate'):.2f}s")
    print()

    # Stage 2: Transport map
    print("-" * 70)
    print("📍 Stage 2: Spot map f(t, w) vs closed form")
    print()
    w = np.linspace(-2.0, 2.0, 5)
    for t in (0.5, 1.1, 1.35, 1.5):
        exact = spot * np.exp(sigma * w - 0.5 * sigma**2 * t)
        worst = float(np.max(np.abs(model.spot_map(t, w) / exact - 1.0)))
        print(f"   t={t:<5} max relative error {worst:.2e}")
    print()

    # Stage 3: Monte Carlo
    print("-" * 70)
    print(f"📍 Stage 3: Monte Carlo report ({paths:,} paths)")
    print()
    _, report = evaluate_model(model, SimulationSpec(n_paths=paths, seed=20240501, workers=2))
    for entry in report.maturities:
        print(f"   T={entry.maturity:<4} err_cab={entry.err_cab:.2e}  dropped={entry.dropped}")
    print()

    # Stage 4: Schemes
    print("-" * 70)
    print("📍 Stage 4: Iterations vs tolerance")
    print()
    schemes = (scheme, QuadratureScheme("gauss_hermite", 101, 2))
    frame = benchmark_schemes(marginals, maturities, (1e-2, 1e-3, 1e-4), schemes, exact=gaussian_fixed_point)
    print(frame[["scheme", "tol", "interval", "iterations", "fixed_point_error"]].to_string(index=False))
    print()
    fit = iteration_fit(frame)
    for row in fit.itertuples():
        print(f"   {row.scheme:<14} interval {row.interval}: slope={row.slope:.1f} per decade, R²={row.r2:.3f}")
    print()

    print("=" * 70)
    print("✅ Demo Complete!")
    print("=" * 70)


if __name__ == "__main__":
    setup_logging("WARNING")
    try:
        demo()
    except KeyboardInterrupt:
        print("\n\n👋 Demo interrupted.")
    except BLVException as e:
        print(f"\n\n❌ Error: {e}")
        sys.exit(1)
