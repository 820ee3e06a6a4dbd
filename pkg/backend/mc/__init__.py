"""Monte Carlo pricing of the calibrated model and calibration error."""

from backend.mc.report import CalibrationReport, MaturityError, calibration_error, evaluate_model, reference_ivs
from backend.mc.simulation import (
    PathEngine,
    SimulationResult,
    SimulationSpec,
    default_strikes,
    pair_units,
    price_calls,
    price_model,
    simulate_terminals,
)

__all__ = [
    "CalibrationReport",
    "MaturityError",
    "PathEngine",
    "SimulationResult",
    "SimulationSpec",
    "calibration_error",
    "default_strikes",
    "evaluate_model",
    "pair_units",
    "price_calls",
    "price_model",
    "reference_ivs",
    "simulate_terminals",
]
