"""
Transport Map
f(t, w) = K_{T_{i+1}−t} ⋆ (F⁻¹_{μ_{i+1}} ∘ (K_Δ ⋆ F_{W_{T_i}}))(w) on [T_i, T_{i+1}].
"""

from typing import Optional, Union

import numpy as np

from backend.bass.fixed_point import BassInterval
from backend.bass.operator import inner_map
from backend.density.marginal import MarginalDistribution
from backend.quad.schemes import QuadratureScheme, convolve_values
from backend.utils.exceptions import TimeOutOfInterval

ArrayLike = Union[float, np.ndarray]

TIME_SLACK = 1e-12


def transport_map(
    interval: BassInterval,
    mu_next: Optional[MarginalDistribution],
    t: float,
    w: ArrayLike,
    scheme: QuadratureScheme,
) -> ArrayLike:
    """
    Spot at time t for Brownian level w.

    The interval carries its inner map; passing mu_next rebuilds it from
    F_W for that marginal instead. At t = T_{i+1} the outer kernel has
    zero variance and the inner map is returned directly.

    Raises:
        TimeOutOfInterval: t outside [T_i, T_{i+1}]
    """
    if t < interval.t_start - TIME_SLACK or t > interval.t_end + TIME_SLACK:
        raise TimeOutOfInterval(f"t={t} outside [{interval.t_start}, {interval.t_end}]")
    inner = interval.inner if mu_next is None else inner_map(interval.F_W, mu_next, interval.dt, scheme)
    remaining = interval.t_end - t
    if remaining <= TIME_SLACK:
        value = np.asarray(inner(w))
    else:
        value = np.asarray(convolve_values(inner, remaining, w, scheme))
    return float(value) if value.ndim == 0 else value
