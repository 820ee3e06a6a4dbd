"""
Quadrature Schemes
Heat-kernel convolution by the truncated trapezoidal rule or Gauss-Hermite.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
import structlog
from scipy.linalg import eigh_tridiagonal

from backend.quad.grid_function import GridFunction
from backend.quad.kernels import heat_kernel
from backend.utils.exceptions import (
    EpsilonOutOfRange,
    InvalidInput,
    InvalidVariance,
    UnsupportedOrder,
)

logger = structlog.get_logger()

GH_MAX_ORDER = 200
LATTICE_RTOL = 1e-9


def admissible_epsilon(dt: float) -> Tuple[float, float]:
    """Open interval (max{1 − dt, 0}, 1) that ε must lie in."""
    return max(1.0 - dt, 0.0), 1.0


def default_epsilon(dt: float) -> float:
    low, high = admissible_epsilon(dt)
    return 0.5 * (low + high)


def trapezoid_params(m: int, N: int, dt: float, epsilon: Optional[float] = None) -> Tuple[float, float]:
    """
    Step h and truncation Nh of the trapezoidal rule for a variance-dt kernel.

    Nh = √(2·dt/(1−ε) · m·ln(2N+1)) and h = Nh/N. Without an explicit ε
    the midpoint of the admissible interval is used.

    Returns:
        (h, Nh) with h·N == Nh
    """
    if N < 1 or m < 1:
        raise InvalidInput(f"need N >= 1 and m >= 1, got N={N}, m={m}")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidVariance(f"interval length must be positive, got {dt}")
    if epsilon is None:
        epsilon = default_epsilon(dt)
    low, high = admissible_epsilon(dt)
    if not low < epsilon < high:
        raise EpsilonOutOfRange(f"epsilon={epsilon} outside ({low}, {high}) for dt={dt}")

    truncation = np.sqrt(2.0 * dt / (1.0 - epsilon) * m * np.log(2 * N + 1))
    h = truncation / N
    return float(h), float(h * N)


def gh_nodes(n: int, t: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Hermite nodes and weights for the variance-t Gaussian.

    Golub-Welsch: the nodes of the physicists' rule are the eigenvalues of
    the Jacobi matrix with off-diagonal √(k/2); mapping x ↦ √(2t)·x and
    w ↦ w/√π turns Σ w f(x) into an expectation under N(0, t).
    """
    if int(n) != n or not 1 <= n <= GH_MAX_ORDER:
        raise UnsupportedOrder(f"Gauss-Hermite order must be in [1, {GH_MAX_ORDER}], got {n}")
    if not (np.isfinite(t) and t > 0):
        raise InvalidVariance(f"variance must be positive, got {t}")
    n = int(n)
    if n == 1:
        return np.zeros(1), np.ones(1)

    off_diagonal = np.sqrt(np.arange(1, n) / 2.0)
    roots, vectors = eigh_tridiagonal(np.zeros(n), off_diagonal)
    # first eigenvector components squared times μ0 = √π, then divided by √π
    weights = vectors[0, :] ** 2
    nodes = np.sqrt(2.0 * t) * roots

    # symmetric rule
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return nodes, weights / weights.sum()


@lru_cache(maxsize=256)
def _trapezoid_rule(n: int, m: int, epsilon: Optional[float], t: float) -> Tuple[np.ndarray, np.ndarray]:
    N = (n - 1) // 2
    h, _ = trapezoid_params(m, N, t, epsilon)
    nodes = h * np.arange(-N, N + 1, dtype=float)
    weights = h * heat_kernel(nodes, t)
    return nodes, weights


@lru_cache(maxsize=256)
def _gauss_hermite_rule(n: int, t: float) -> Tuple[np.ndarray, np.ndarray]:
    return gh_nodes(n, t)


@dataclass(frozen=True)
class QuadratureScheme:
    """
    Convolution rule against the heat kernel.

    For the trapezoid, n is the point count 2N+1 (N = (n−1)//2); for
    Gauss-Hermite it is the node count. m is the assumed smoothness order
    and epsilon an optional override of ε (otherwise the admissible
    midpoint for each kernel variance).
    """

    kind: Literal["trapezoid", "gauss_hermite"] = "trapezoid"
    n: int = 101
    m: int = 2
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("trapezoid", "gauss_hermite"):
            raise InvalidInput(f"unknown quadrature kind {self.kind!r}")
        if self.n < 3:
            raise InvalidInput(f"scheme needs n >= 3, got {self.n}")
        if self.m < 1:
            raise InvalidInput(f"smoothness order must be >= 1, got {self.m}")
        if self.kind == "gauss_hermite" and self.n > GH_MAX_ORDER:
            raise UnsupportedOrder(f"Gauss-Hermite order must be <= {GH_MAX_ORDER}, got {self.n}")

    @property
    def half_count(self) -> int:
        return (self.n - 1) // 2

    def rule(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights approximating ∫ f(x) K_t(x) dx."""
        if not (np.isfinite(t) and t > 0):
            raise InvalidVariance(f"kernel variance must be positive, got {t}")
        if self.kind == "trapezoid":
            return _trapezoid_rule(self.n, self.m, self.epsilon, float(t))
        return _gauss_hermite_rule(self.n, float(t))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "m": self.m, "epsilon": self.epsilon}


@lru_cache(maxsize=256)
def _lattice_rule(
    n: int, m: int, epsilon: Optional[float], t: float, spacing: float
) -> Optional[Tuple[int, np.ndarray]]:
    N = (n - 1) // 2
    h, truncation = trapezoid_params(m, N, t, epsilon)
    stride = int(np.floor(h / spacing * (1.0 + 1e-12)))
    if stride < 1:
        return None
    step = stride * spacing
    half = int(np.ceil(truncation / step * (1.0 - 1e-12)))
    weights = step * heat_kernel(step * np.arange(-half, half + 1, dtype=float), t)
    return stride, weights


def _uniform_spacing(grid: np.ndarray) -> Optional[float]:
    steps = np.diff(grid)
    spacing = float(np.mean(steps))
    if spacing <= 0 or np.max(np.abs(steps - spacing)) > LATTICE_RTOL * spacing:
        return None
    return spacing


def _lattice_convolve(f: GridFunction, t: float, scheme: QuadratureScheme) -> Optional[np.ndarray]:
    """
    Trapezoid convolution on f's own uniform grid.

    The step is snapped down to a multiple of the grid spacing and the
    truncation kept, so every abscissa w − x_k is a grid node or a point
    of the padded lattice: no interpolation inside the grid.
    """
    spacing = _uniform_spacing(f.grid)
    if spacing is None:
        return None
    rule = _lattice_rule(scheme.n, scheme.m, scheme.epsilon, float(t), round(spacing, 15))
    if rule is None:
        return None
    stride, weights = rule
    half = (weights.size - 1) // 2
    pad = half * stride
    size = f.grid.size
    padded = f(f.grid[0] + spacing * np.arange(-pad, size + pad, dtype=float))
    padded[pad : pad + size] = f.values
    offsets = stride * np.arange(-half, half + 1)
    return padded[pad + np.arange(size)[:, None] - offsets[None, :]] @ weights


def convolve(f: GridFunction, t: float, out_grid: np.ndarray, scheme: QuadratureScheme) -> GridFunction:
    """
    (K_t ⋆ f)(w) = ∫ f(w − x) K_t(x) dx on out_grid.

    f is evaluated at the shifted abscissae through its interpolant and
    extrapolation rule. The result keeps f's kind. A trapezoid convolution
    back onto f's own uniform grid runs on the grid lattice instead.
    """
    if not (np.isfinite(t) and t > 0):
        raise InvalidVariance(f"kernel variance must be positive, got {t}")
    out_grid = np.asarray(out_grid, dtype=float)
    if scheme.kind == "trapezoid" and out_grid.shape == f.grid.shape and np.array_equal(out_grid, f.grid):
        values = _lattice_convolve(f, t, scheme)
        if values is not None:
            return GridFunction(out_grid, values, kind=f.kind)
    nodes, weights = scheme.rule(t)
    samples = f(out_grid[:, None] - nodes[None, :])
    return GridFunction(out_grid, samples @ weights, kind=f.kind)


def convolve_values(f, t: float, points: np.ndarray, scheme: QuadratureScheme) -> np.ndarray:
    """Convolution of any vectorized callable, evaluated at points."""
    nodes, weights = scheme.rule(t)
    points = np.asarray(points, dtype=float)
    return np.asarray(f(points[..., None] - nodes)) @ weights
