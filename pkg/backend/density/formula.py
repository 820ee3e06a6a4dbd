"""
Density From Smile
Risk-neutral density of a zero-rate underlying in terms of σ, σ′ and σ″.
"""

from typing import Union

import numpy as np
from scipy.stats import norm

ArrayLike = Union[float, np.ndarray]


def smile_d1_d2(K: ArrayLike, forward: float, tau: float, sigma: ArrayLike):
    vol = np.asarray(sigma, dtype=float) * np.sqrt(tau)
    d1 = (np.log(forward / np.asarray(K, dtype=float)) + 0.5 * vol**2) / vol
    return d1, d1 - vol


def smile_bracket(
    K: ArrayLike,
    forward: float,
    tau: float,
    sigma: ArrayLike,
    dsigma: ArrayLike,
    d2sigma: ArrayLike,
) -> ArrayLike:
    """
    1/(K²στ) + 2d₁σ′/(Kσ√τ) + d₁d₂σ′²/σ + σ″, the factor that decides the
    sign of the density.
    """
    K = np.asarray(K, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    sqrt_tau = np.sqrt(tau)
    d1, d2 = smile_d1_d2(K, forward, tau, sigma)
    return (
        1.0 / (K * K * sigma * tau)
        + 2.0 * d1 * dsigma / (K * sigma * sqrt_tau)
        + d1 * d2 * np.asarray(dsigma) ** 2 / sigma
        + d2sigma
    )


def density_from_smile(
    K: ArrayLike,
    forward: float,
    tau: float,
    sigma: ArrayLike,
    dsigma: ArrayLike,
    d2sigma: ArrayLike,
) -> ArrayLike:
    """q(K) = F√τ φ(d₁) · smile_bracket(K)."""
    d1, _ = smile_d1_d2(K, forward, tau, sigma)
    value = forward * np.sqrt(tau) * norm.pdf(d1) * smile_bracket(K, forward, tau, sigma, dsigma, d2sigma)
    return float(value) if np.ndim(value) == 0 else value


def survival_from_smile(K: ArrayLike, forward: float, tau: float, sigma: ArrayLike, dsigma: ArrayLike) -> ArrayLike:
    """P(X > K) = N(d₂) − K n(d₂)√τ σ′."""
    _, d2 = smile_d1_d2(K, forward, tau, sigma)
    return norm.cdf(d2) - np.asarray(K) * norm.pdf(d2) * np.sqrt(tau) * dsigma


def upper_partial_mean_from_smile(
    K: ArrayLike, forward: float, tau: float, sigma: ArrayLike, dsigma: ArrayLike
) -> ArrayLike:
    """E[X; X > K] = F N(d₁) − K² n(d₂)√τ σ′."""
    d1, d2 = smile_d1_d2(K, forward, tau, sigma)
    K = np.asarray(K, dtype=float)
    return forward * norm.cdf(d1) - K * K * norm.pdf(d2) * np.sqrt(tau) * dsigma


def call_from_smile(K: ArrayLike, forward: float, tau: float, sigma: ArrayLike) -> ArrayLike:
    """Undiscounted Black call F N(d₁) − K N(d₂) at the smile volatility."""
    d1, d2 = smile_d1_d2(K, forward, tau, sigma)
    value = forward * norm.cdf(d1) - np.asarray(K, dtype=float) * norm.cdf(d2)
    return float(value) if np.ndim(value) == 0 else value
