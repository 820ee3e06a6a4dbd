"""Implied-volatility noise injection."""

import numpy as np

from backend.utils.exceptions import InvalidInput

DEFAULT_MAGNITUDE = 0.005


def add_noise(ivs: np.ndarray, magnitude: float = DEFAULT_MAGNITUDE, seed: int = 0) -> np.ndarray:
    """σ̃ = σ + ε with ε i.i.d. uniform on [−magnitude, magnitude]."""
    if magnitude < 0:
        raise InvalidInput(f"noise magnitude must be non-negative, got {magnitude}")
    ivs = np.asarray(ivs, dtype=float)
    if magnitude == 0:
        return ivs.copy()
    rng = np.random.default_rng(seed)
    return ivs + rng.uniform(-magnitude, magnitude, size=ivs.shape)
