"""Bass local volatility: fixed-point calibration and transport maps."""

from backend.bass.benchmark import benchmark_schemes, fixed_point_distance, gaussian_fixed_point, iteration_fit
from backend.bass.fixed_point import BassInterval, FixedPointOptions, recenter, solve_fixed_point
from backend.bass.model import BassModel, calibrate, check_calendar, load_model, save_model
from backend.bass.operator import apply_A, inner_map, w_grid
from backend.bass.transport import transport_map

__all__ = [
    "BassInterval",
    "BassModel",
    "FixedPointOptions",
    "apply_A",
    "benchmark_schemes",
    "calibrate",
    "check_calendar",
    "fixed_point_distance",
    "gaussian_fixed_point",
    "inner_map",
    "iteration_fit",
    "load_model",
    "recenter",
    "save_model",
    "solve_fixed_point",
    "transport_map",
    "w_grid",
]
