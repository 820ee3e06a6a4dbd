"""
Heat Kernel
Gaussian density with variance t.
"""

from typing import Union

import numpy as np

from backend.utils.exceptions import InvalidInput

ArrayLike = Union[float, np.ndarray]


def heat_kernel(x: ArrayLike, t: float) -> ArrayLike:
    """K_t(x) = exp(−x²/2t) / √(2πt)."""
    if not (np.isfinite(t) and t > 0):
        raise InvalidInput(f"kernel variance must be positive, got {t}")
    x = np.asarray(x, dtype=float)
    value = np.exp(-0.5 * x * x / t) / np.sqrt(2.0 * np.pi * t)
    return float(value) if value.ndim == 0 else value
