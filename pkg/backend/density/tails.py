"""
Lognormal Mixture Tails
Two-component lognormal densities pasted below K_L and above K_U. Given the
density, its slope, the survival probability and the partial expectation at
the pasting strike, the parameters reduce to a single unknown v₂ which is
scanned and refined with Brent's method.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from scipy.optimize import brentq
from scipy.stats import norm

from backend.utils.exceptions import InvalidMixture, NoRoot

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]
TailSide = Literal["L", "U"]

SINGLE_LOGNORMAL_TOL = 1e-6
ROOT_ACCEPT_TOL = 1e-7


@dataclass(frozen=True)
class TailParams:
    """
    λ·LN(μ₁, v₁²) + (1 − λ)·LN(μ₂, v₂²) with μ_j = ln η_j − v_j²/2.

    The mixture is kept unnormalized over its region: its own CDF below K_L
    (left) or survival above K_U (right) equals the region's mass.
    """

    side: TailSide
    lam: float
    v1: float
    v2: float
    eta1: float
    eta2: float
    z: float
    strike: float

    @property
    def mu1(self) -> float:
        return float(np.log(self.eta1) - 0.5 * self.v1**2)

    @property
    def mu2(self) -> float:
        return float(np.log(self.eta2) - 0.5 * self.v2**2)

    def _components(self):
        return ((self.lam, self.mu1, self.v1, self.eta1), (1.0 - self.lam, self.mu2, self.v2, self.eta2))

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(safe)
        for weight, mu, v, _ in self._components():
            total = total + weight * norm.pdf((np.log(safe) - mu) / v) / (safe * v)
        return np.where(x > 0, total, 0.0)

    def pdf_slope(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for weight, mu, v, _ in self._components():
            y = (np.log(x) - mu) / v
            total = total - weight * norm.pdf(y) / (x * x * v) * (1.0 + y / v)
        return total

    def cdf(self, x: ArrayLike) -> ArrayLike:
        """P(X ≤ x) under the mixture."""
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(safe)
        for weight, mu, v, _ in self._components():
            total = total + weight * norm.cdf((np.log(safe) - mu) / v)
        return np.where(x > 0, total, 0.0)

    def sf(self, x: ArrayLike) -> ArrayLike:
        """P(X > x) under the mixture, accurate deep in the right tail."""
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(safe)
        for weight, mu, v, _ in self._components():
            total = total + weight * norm.sf((np.log(safe) - mu) / v)
        return np.where(x > 0, total, 1.0)

    def partial_mean_below(self, x: ArrayLike) -> ArrayLike:
        """E[X; X ≤ x]."""
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(safe)
        for weight, mu, v, eta in self._components():
            total = total + weight * eta * norm.cdf((np.log(safe) - mu - v * v) / v)
        return np.where(x > 0, total, 0.0)

    def partial_mean_above(self, x: ArrayLike) -> ArrayLike:
        """E[X; X > x]."""
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(safe)
        for weight, mu, v, eta in self._components():
            total = total + weight * eta * norm.sf((np.log(safe) - mu - v * v) / v)
        return np.where(x > 0, total, self.lam * self.eta1 + (1.0 - self.lam) * self.eta2)

    @property
    def mass(self) -> float:
        """Probability of the tail region."""
        return float(norm.cdf(-self.z) if self.side == "L" else norm.cdf(self.z))

    @property
    def partial_mean(self) -> float:
        """E[X; X in the tail region]."""
        sign = -1.0 if self.side == "L" else 1.0
        return float(
            self.lam * self.eta1 * norm.cdf(sign * (self.z + self.v1))
            + (1.0 - self.lam) * self.eta2 * norm.cdf(sign * (self.z + self.v2))
        )

    def quantile(self, u: float) -> float:
        """Mixture x with cdf(x) = u."""
        bounds = [np.exp(mu + v * norm.ppf(u)) for _, mu, v, _ in self._components()]
        low, high = min(bounds), max(bounds)
        if high <= low * (1.0 + 1e-14):
            return float(low)
        return float(
            np.exp(brentq(lambda y: float(self.cdf(np.exp(y))) - u, np.log(low), np.log(high), xtol=1e-14))
        )

    def survival_quantile(self, p: float) -> float:
        """Mixture x with sf(x) = p."""
        bounds = [np.exp(mu + v * norm.isf(p)) for _, mu, v, _ in self._components()]
        low, high = min(bounds), max(bounds)
        if high <= low * (1.0 + 1e-14):
            return float(low)
        return float(
            np.exp(brentq(lambda y: float(self.sf(np.exp(y))) - p, np.log(low), np.log(high), xtol=1e-14))
        )

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "strike": self.strike,
            "lambda": self.lam,
            "v1": self.v1,
            "v2": self.v2,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "z": self.z,
            "mass": self.mass,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TailParams":
        return cls(
            side=data["side"],
            lam=float(data["lambda"]),
            v1=float(data["v1"]),
            v2=float(data["v2"]),
            eta1=float(data["eta1"]),
            eta2=float(data["eta2"]),
            z=float(data["z"]),
            strike=float(data["strike"]),
        )


@dataclass(frozen=True)
class TailTargets:
    """
    Conditions at the pasting strike.

    survival is P(X > strike); partial_mean is E[X; X < strike] for the left
    tail and E[X; X > strike] for the right tail.
    """

    side: TailSide
    strike: float
    density: float
    slope: float
    survival: float
    partial_mean: float


@dataclass(frozen=True)
class TailConstraints:
    v1_min: Optional[float] = None
    v2_max: Optional[float] = None
    lambda_min: Optional[float] = None

    @classmethod
    def bimodal(cls) -> "TailConstraints":
        """v₁ ≥ 1, v₂ ∈ (0, 1), λ > 0.5 for a core with a minor low-strike mode."""
        return cls(v1_min=1.0, v2_max=1.0, lambda_min=0.5)

    def admits(self, lam: float, v1: float, v2: float) -> bool:
        if self.v1_min is not None and v1 < self.v1_min:
            return False
        if self.v2_max is not None and v2 >= self.v2_max:
            return False
        if self.lambda_min is not None and lam <= self.lambda_min:
            return False
        return True


@dataclass(frozen=True)
class TailScan:
    points: int = 400
    low: float = 1e-3
    high: float = 10.0
    root_tol: float = 1e-9


@dataclass
class _Candidate:
    v2: float
    lam: float = np.nan
    v1: float = np.nan
    residual: float = np.nan
    problems: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.problems and np.isfinite(self.residual)


def _mixture_at(targets: TailTargets, z: float, v2: float) -> _Candidate:
    K, q, a = targets.strike, targets.density, norm.pdf(z) / targets.strike
    D = (q + K * targets.slope) / z
    cand = _Candidate(v2=v2)
    numerator = q - a / v2
    denominator = D - q / v2
    if denominator == 0 or not np.isfinite(denominator):
        cand.problems.append("v1 undefined")
        return cand
    v1 = numerator / denominator
    cand.v1 = v1
    if not (np.isfinite(v1) and v1 > 0):
        cand.problems.append(f"v1={v1} not positive")
        return cand
    spread = a / v1 - a / v2
    if spread == 0:
        cand.problems.append("v1 equals v2")
        return cand
    lam = numerator / spread
    cand.lam = lam
    if not (0.0 <= lam <= 1.0):
        cand.problems.append(f"lambda={lam} outside [0, 1]")
    sign = -1.0 if targets.side == "L" else 1.0
    eta1 = K * np.exp(z * v1 + 0.5 * v1 * v1)
    eta2 = K * np.exp(z * v2 + 0.5 * v2 * v2)
    model = lam * eta1 * norm.cdf(sign * (z + v1)) + (1.0 - lam) * eta2 * norm.cdf(sign * (z + v2))
    cand.residual = float(model - targets.partial_mean)
    return cand


def _params(targets: TailTargets, z: float, lam: float, v1: float, v2: float) -> TailParams:
    K = targets.strike
    return TailParams(
        side=targets.side,
        lam=float(lam),
        v1=float(v1),
        v2=float(v2),
        eta1=float(K * np.exp(z * v1 + 0.5 * v1 * v1)),
        eta2=float(K * np.exp(z * v2 + 0.5 * v2 * v2)),
        z=float(z),
        strike=float(K),
    )


def _single_lognormal(targets: TailTargets, z: float) -> Optional[TailParams]:
    """Collapse to one lognormal when density and slope already agree with one."""
    a = norm.pdf(z) / targets.strike
    v_density = a / targets.density
    D = (targets.density + targets.strike * targets.slope) / z
    if D <= 0:
        return None
    v_slope = np.sqrt(a / D)
    if abs(v_density - v_slope) > SINGLE_LOGNORMAL_TOL * v_density:
        return None
    params = _params(targets, z, 1.0, v_density, v_density)
    if abs(params.partial_mean - targets.partial_mean) > ROOT_ACCEPT_TOL * targets.strike:
        return None
    return params


def solve_tail(
    targets: TailTargets,
    constraints: Optional[TailConstraints] = None,
    scan: TailScan = TailScan(),
) -> TailParams:
    """
    Solve the reduced one-parameter tail system.

    N(z) is the survival probability at the pasting strike; λ, v₁, η₁, η₂
    are explicit in v₂; the partial-expectation condition is the residual
    scanned over log-spaced v₂ and refined with brentq. Among valid roots the
    one minimizing |v₁ − v₂| is returned.

    Raises:
        NoRoot: no valid root in the scan bracket
    """
    constraints = constraints or TailConstraints()
    if not (0.0 < targets.survival < 1.0):
        raise NoRoot(
            f"{targets.side} tail survival {targets.survival} outside (0, 1)",
            bracket=(scan.low, scan.high),
            residuals=(np.nan, np.nan),
        )
    if targets.density <= 0 or not np.isfinite(targets.slope):
        raise NoRoot(
            f"{targets.side} tail needs a positive density and finite slope at K={targets.strike}",
            bracket=(scan.low, scan.high),
            residuals=(np.nan, np.nan),
        )
    z = float(norm.ppf(targets.survival))
    if abs(z) < 1e-10:
        raise NoRoot(
            f"{targets.side} tail pasting strike sits at the median",
            bracket=(scan.low, scan.high),
            residuals=(np.nan, np.nan),
        )

    single = _single_lognormal(targets, z)
    if single is not None:
        logger.debug("Tail collapses to one lognormal", side=targets.side, v=single.v1)
        return single

    high = scan.high if constraints.v2_max is None else min(scan.high, constraints.v2_max)
    grid = np.geomspace(scan.low, high, scan.points, endpoint=constraints.v2_max is None)
    candidates = [_mixture_at(targets, z, v2) for v2 in grid]

    def admissible(c: _Candidate) -> bool:
        return c.valid and constraints.admits(c.lam, c.v1, c.v2)

    scale = max(abs(targets.partial_mean), targets.strike)
    roots: List[_Candidate] = []
    for left, right in zip(candidates[:-1], candidates[1:]):
        if not (np.isfinite(left.residual) and np.isfinite(right.residual)):
            continue
        if left.residual == 0.0 and admissible(left):
            roots.append(left)
            continue
        if np.sign(left.residual) == np.sign(right.residual):
            continue
        try:
            v2 = brentq(
                lambda v: _mixture_at(targets, z, v).residual,
                left.v2,
                right.v2,
                xtol=1e-14,
                rtol=4 * np.finfo(float).eps,
            )
        except ValueError:
            continue
        root = _mixture_at(targets, z, v2)
        if not admissible(root):
            logger.debug("Tail candidate rejected", side=targets.side, v2=v2, problems=root.problems)
            continue
        if abs(root.residual) > ROOT_ACCEPT_TOL * scale:
            continue
        roots.append(root)

    if not roots:
        valid = [c for c in candidates if admissible(c)]
        if valid:
            best = min(valid, key=lambda c: abs(c.residual))
            if abs(best.residual) <= scan.root_tol * scale:
                roots.append(best)
    if not roots:
        ends = (candidates[0].residual, candidates[-1].residual)
        invalid = sum(1 for c in candidates if not c.valid)
        if invalid == len(candidates):
            raise InvalidMixture(f"{targets.side} tail: every scanned v2 gives an invalid mixture")
        raise NoRoot(
            f"{targets.side} tail: no admissible root for v2 in [{scan.low}, {high}]",
            bracket=(scan.low, high),
            residuals=ends,
        )

    roots.sort(key=lambda c: abs(c.v1 - c.v2))
    chosen = roots[0]
    if len(roots) > 1:
        logger.warning(
            "Multiple tail roots",
            side=targets.side,
            chosen_v2=chosen.v2,
            alternatives=[(r.v1, r.v2, r.lam) for r in roots[1:]],
        )
    params = _params(targets, z, chosen.lam, chosen.v1, chosen.v2)
    logger.debug("Tail solved", **params.to_dict())
    return params


def tail_residuals(params: TailParams, targets: TailTargets) -> Tuple[float, ...]:
    """Residuals of density, slope, survival and partial-expectation conditions."""
    K = targets.strike
    return (
        float(params.pdf(K) - targets.density),
        float(params.pdf_slope(K) - targets.slope),
        float(norm.cdf(params.z) - targets.survival),
        float(params.partial_mean - targets.partial_mean),
    )


__all__ = [
    "TailConstraints",
    "TailParams",
    "TailScan",
    "TailTargets",
    "solve_tail",
    "tail_residuals",
]
