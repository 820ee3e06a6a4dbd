"""
Normalized Hermite Polynomials
H^σ_n(x) = He_n(x/σ)/√(n!), orthonormal under the variance-σ² Gaussian.
"""

from typing import Union

import numpy as np

from backend.utils.exceptions import InvalidInput

ArrayLike = Union[float, np.ndarray]


def hermite_sigma(n: int, sigma: float, x: ArrayLike) -> ArrayLike:
    """Evaluate H^σ_n at x with the normalized three-term recurrence."""
    if int(n) != n or n < 0:
        raise InvalidInput(f"order must be a non-negative integer, got {n}")
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidInput(f"sigma must be positive, got {sigma}")

    y = np.asarray(x, dtype=float) / sigma
    previous = np.ones_like(y)
    if n == 0:
        return float(previous) if previous.ndim == 0 else previous

    current = y.copy()
    for k in range(1, int(n)):
        previous, current = current, (y * current - np.sqrt(k) * previous) / np.sqrt(k + 1)
    return float(current) if current.ndim == 0 else current


def hermite_sigma_derivative(n: int, sigma: float, x: ArrayLike) -> ArrayLike:
    """(H^σ_n)' = (√n/σ) H^σ_{n−1}."""
    if n == 0:
        value = np.zeros_like(np.asarray(x, dtype=float))
        return float(value) if value.ndim == 0 else value
    return np.sqrt(n) / sigma * hermite_sigma(n - 1, sigma, x)
