"""
Implied Volatility Curves
Sampled smiles and the put/call blend used near the money.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from backend.utils.exceptions import DomainMismatch, InvalidInput

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class IvCurve:
    """Implied volatility sampled on ascending strikes, linear in between."""

    strikes: np.ndarray
    ivs: np.ndarray

    def __post_init__(self):
        strikes = np.asarray(self.strikes, dtype=float)
        ivs = np.asarray(self.ivs, dtype=float)
        if strikes.ndim != 1 or strikes.shape != ivs.shape or strikes.size == 0:
            raise InvalidInput("strikes and ivs must be equal-length 1-D arrays")
        order = np.argsort(strikes)
        object.__setattr__(self, "strikes", strikes[order])
        object.__setattr__(self, "ivs", ivs[order])

    @property
    def domain(self) -> Tuple[float, float]:
        return float(self.strikes[0]), float(self.strikes[-1])

    def __call__(self, K: ArrayLike) -> ArrayLike:
        value = np.interp(K, self.strikes, self.ivs)
        return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class BlendedIvCurve:
    """σ̂(K) = w·IV_put + (1 − w)·IV_call with w = (K_max − K)/(K_max − K_min)."""

    call: IvCurve
    put: IvCurve
    k_min: float
    k_max: float

    @property
    def domain(self) -> Tuple[float, float]:
        return min(self.put.domain[0], self.k_min), max(self.call.domain[1], self.k_max)

    def __call__(self, K: ArrayLike) -> ArrayLike:
        K_arr = np.asarray(K, dtype=float)
        w = np.clip((self.k_max - K_arr) / (self.k_max - self.k_min), 0.0, 1.0)
        value = w * self.put(K_arr) + (1.0 - w) * self.call(K_arr)
        # endpoints reproduce the inputs exactly
        value = np.where(K_arr <= self.k_min, self.put(K_arr), value)
        value = np.where(K_arr >= self.k_max, self.call(K_arr), value)
        return float(value) if np.ndim(value) == 0 else value

    def sample(self, strikes: np.ndarray) -> IvCurve:
        strikes = np.asarray(strikes, dtype=float)
        return IvCurve(strikes=strikes, ivs=np.asarray(self(strikes), dtype=float))


def blend_put_call(iv_call: IvCurve, iv_put: IvCurve, k_min: float, k_max: float) -> BlendedIvCurve:
    """
    Blend put and call smiles over [k_min, k_max].

    Put IVs are used below k_min, call IVs above k_max and an affine
    blend in between.

    Raises:
        DomainMismatch: a curve does not cover [k_min, k_max]
    """
    if not k_min < k_max:
        raise InvalidInput(f"k_min must be below k_max, got {k_min} >= {k_max}")
    for name, curve in (("call", iv_call), ("put", iv_put)):
        low, high = curve.domain
        if low > k_min or high < k_max:
            raise DomainMismatch(
                f"{name} curve covers [{low}, {high}], blending band is [{k_min}, {k_max}]"
            )
    return BlendedIvCurve(call=iv_call, put=iv_put, k_min=float(k_min), k_max=float(k_max))
