"""Synthetic ground truth: Black-Scholes marginals and the SSVI surface."""

from backend.synth.lognormal import BS_PRESET, M_MAX, bs_chain, bs_marginals, bs_truth_frame
from backend.synth.noise import add_noise
from backend.synth.ssvi import (
    SSVI_BL_STRIKE_RANGE,
    SSVI_PRESET,
    SSVI_PRESET_MATURITY,
    SsviParams,
    bl_preset_strikes,
    preset_strikes,
    ssvi_chain,
    ssvi_iv,
    ssvi_rnd,
    ssvi_strike_smile,
    ssvi_truth_frame,
)

__all__ = [
    "BS_PRESET",
    "M_MAX",
    "SSVI_BL_STRIKE_RANGE",
    "SSVI_PRESET",
    "SSVI_PRESET_MATURITY",
    "SsviParams",
    "add_noise",
    "bl_preset_strikes",
    "bs_chain",
    "bs_marginals",
    "bs_truth_frame",
    "preset_strikes",
    "ssvi_chain",
    "ssvi_iv",
    "ssvi_rnd",
    "ssvi_strike_smile",
    "ssvi_truth_frame",
]
