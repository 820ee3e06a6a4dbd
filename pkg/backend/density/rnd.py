"""
Risk-Neutral Density
LQR core on [K_L, K_U] pasted to lognormal-mixture tails, with exact call
prices, mass and mean, and a no-arbitrage report.
"""

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.integrate import quad

from backend.density.formula import call_from_smile, survival_from_smile, upper_partial_mean_from_smile
from backend.density.lqr import LqrFit, smile_at
from backend.density.tails import TailConstraints, TailParams, TailScan, TailTargets, solve_tail
from backend.utils.exceptions import InvalidInput, InvalidMixture, NoRoot, PastingMismatch

logger = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]
TailClosure = Literal["edge_calls", "upper_tail", "smile"]

PASTING_TOL = 1e-6
SIMPSON_TOL = 1e-10
SIMPSON_MAX_DEPTH = 30


def _as_output(values: np.ndarray, like) -> ArrayLike:
    return float(values.reshape(-1)[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))


@dataclass(frozen=True)
class CoreDensity:
    """
    LQR density on [lower, upper] with cumulative mass and first moment at
    each grid node. Panels and partial panels are integrated by adaptive
    Simpson on fresh local fits to SIMPSON_TOL absolute mass per panel.
    """

    fit: LqrFit
    grid: np.ndarray
    values: np.ndarray
    mass_cum: np.ndarray
    moment_cum: np.ndarray
    slope_lower: float
    slope_upper: float

    @classmethod
    def from_fit(cls, fit: LqrFit, lower: Optional[float] = None, upper: Optional[float] = None) -> "CoreDensity":
        grid = fit.strike_grid
        lower = float(grid[0]) if lower is None else float(lower)
        upper = float(grid[-1]) if upper is None else float(upper)
        if not lower < upper:
            raise InvalidInput(f"core range [{lower}, {upper}] is empty")
        inner = grid[(grid > lower) & (grid < upper)]
        nodes = np.concatenate([[lower], inner, [upper]])

        values = fit.density_at(nodes)
        m0, m1 = _panel_integrals(fit, nodes[:-1], nodes[1:])
        mass_cum = np.concatenate([[0.0], np.cumsum(m0)])
        moment_cum = np.concatenate([[0.0], np.cumsum(m1)])
        return cls(
            fit=fit,
            grid=nodes,
            values=values,
            mass_cum=mass_cum,
            moment_cum=moment_cum,
            slope_lower=fit.density_slope(lower, +1),
            slope_upper=fit.density_slope(upper, -1),
        )

    @property
    def lower(self) -> float:
        return float(self.grid[0])

    @property
    def upper(self) -> float:
        return float(self.grid[-1])

    @property
    def mass(self) -> float:
        return float(self.mass_cum[-1])

    @property
    def first_moment(self) -> float:
        return float(self.moment_cum[-1])

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x_arr)
        inside = (x_arr >= self.lower) & (x_arr <= self.upper)
        if inside.any():
            out[inside] = self.fit.density_at(x_arr[inside])
        return _as_output(out, x)

    def cumulative(self, x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """(∫ q, ∫ x q) from lower to x, with x clipped to the core range."""
        x_arr = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), self.lower, self.upper)
        j = np.clip(np.searchsorted(self.grid, x_arr, side="right") - 1, 0, self.grid.size - 2)
        m0, m1 = _panel_integrals(self.fit, self.grid[j], x_arr)
        return self.mass_cum[j] + m0, self.moment_cum[j] + m1


def _simpson(h: np.ndarray, x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    """Simpson sums of (q, x·q) over [x₀, x₂] for rows x = (x₀, x₁, x₂)."""
    w = np.array([1.0, 4.0, 1.0])
    return np.stack([h / 6.0 * (fx @ w), h / 6.0 * ((x * fx) @ w)])


def _panel_integrals(fit: LqrFit, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    (∫ q, ∫ x q) over each [a_i, b_i] by adaptive Simpson.

    Subintervals are bisected until the two-half estimate agrees with the
    whole-interval one within 15× their share of SIMPSON_TOL; the first
    moment uses the same test scaled by max(1, b). All open subintervals of
    one depth are evaluated in a single density call.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    totals = np.zeros((2, a.size))
    if a.size == 0:
        return totals[0], totals[1]

    ends = np.unique(np.concatenate([a, b]))
    f_ends = np.asarray(fit.density_at(ends), dtype=float)
    fa = f_ends[np.searchsorted(ends, a)]
    fb = f_ends[np.searchsorted(ends, b)]
    m = 0.5 * (a + b)
    fm = np.asarray(fit.density_at(m), dtype=float)

    owner = np.arange(a.size)
    tol = np.full(a.size, SIMPSON_TOL)
    scale = np.maximum(1.0, np.abs(b))
    whole = _simpson(b - a, np.stack([a, m, b], axis=1), np.stack([fa, fm, fb], axis=1))

    for _ in range(SIMPSON_MAX_DEPTH):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        f_quarter = np.asarray(fit.density_at(np.concatenate([lm, rm])), dtype=float)
        flm, frm = f_quarter[: a.size], f_quarter[a.size :]
        left = _simpson(m - a, np.stack([a, lm, m], axis=1), np.stack([fa, flm, fm], axis=1))
        right = _simpson(b - m, np.stack([m, rm, b], axis=1), np.stack([fm, frm, fb], axis=1))
        halves = left + right
        diff = halves - whole
        done = (np.abs(diff[0]) <= 15.0 * tol) & (np.abs(diff[1]) <= 15.0 * tol * scale[owner])
        refined = halves + diff / 15.0
        np.add.at(totals[0], owner[done], refined[0, done])
        np.add.at(totals[1], owner[done], refined[1, done])
        if done.all():
            return totals[0], totals[1]

        open_ = ~done
        a, m, b = a[open_], m[open_], b[open_]
        fa, fm, fb, flm, frm = fa[open_], fm[open_], fb[open_], flm[open_], frm[open_]
        lm, rm = lm[open_], rm[open_]
        owner, tol = owner[open_], tol[open_]
        left, right = left[:, open_], right[:, open_]

        a, m, b = np.concatenate([a, m]), np.concatenate([lm, rm]), np.concatenate([m, b])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
        owner = np.concatenate([owner, owner])
        tol = np.concatenate([tol, tol]) / 2.0
        whole = np.concatenate([left, right], axis=1)

    logger.debug("Simpson depth exhausted", open_intervals=int(a.size))
    np.add.at(totals[0], owner, whole[0])
    np.add.at(totals[1], owner, whole[1])
    return totals[0], totals[1]


@dataclass(frozen=True)
class RiskNeutralDensity:
    """Piecewise density: left mixture below K_L, LQR core, right mixture above K_U."""

    core: CoreDensity
    left: TailParams
    right: TailParams
    forward: float
    tau: float
    smoothness_order: int = 2

    @property
    def K_L(self) -> float:
        return self.core.lower

    @property
    def K_U(self) -> float:
        return self.core.upper

    @property
    def left_mass(self) -> float:
        return self.left.mass

    @property
    def right_mass(self) -> float:
        return self.right.mass

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x_arr)
        low = (x_arr > 0) & (x_arr < self.K_L)
        high = x_arr > self.K_U
        mid = ~low & ~high & (x_arr > 0)
        out[low] = self.left.pdf(x_arr[low])
        out[high] = self.right.pdf(x_arr[high])
        if mid.any():
            out[mid] = self.core.pdf(x_arr[mid])
        return _as_output(out, x)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x_arr)
        low = x_arr < self.K_L
        high = x_arr > self.K_U
        mid = ~low & ~high
        out[low] = self.left.cdf(x_arr[low])
        if mid.any():
            out[mid] = self.left_mass + self.core.cumulative(x_arr[mid])[0]
        out[high] = self.left_mass + self.core.mass + (self.right_mass - self.right.sf(x_arr[high]))
        return _as_output(np.clip(out, 0.0, 1.0), x)

    def call_price(self, K: ArrayLike) -> ArrayLike:
        """Undiscounted ∫ max(x − K, 0) q(x) dx."""
        K_arr = np.atleast_1d(np.asarray(K, dtype=float))
        out = np.empty_like(K_arr)
        upper_mass, upper_mean = self.right_mass, self.right.partial_mean
        core_mass, core_mean = self.core.mass, self.core.first_moment

        high = K_arr >= self.K_U
        out[high] = self.right.partial_mean_above(K_arr[high]) - K_arr[high] * self.right.sf(K_arr[high])

        mid = (K_arr >= self.K_L) & ~high
        if mid.any():
            m0, m1 = self.core.cumulative(K_arr[mid])
            above0, above1 = core_mass - m0, core_mean - m1
            out[mid] = (above1 + upper_mean) - K_arr[mid] * (above0 + upper_mass)

        low = K_arr < self.K_L
        if low.any():
            Kl = K_arr[low]
            left0 = self.left_mass - self.left.cdf(Kl)
            left1 = self.left.partial_mean - self.left.partial_mean_below(Kl)
            out[low] = (left1 + core_mean + upper_mean) - Kl * (left0 + core_mass + upper_mass)
        return _as_output(out, K)

    def put_price(self, K: ArrayLike) -> ArrayLike:
        """Undiscounted put by parity against the density's own mean and mass."""
        K_arr = np.asarray(K, dtype=float)
        return self.call_price(K) - (self.mean() - K_arr * self.mass())

    def mass(self) -> float:
        return float(self.left_mass + self.core.mass + self.right_mass)

    def mean(self) -> float:
        return float(self.left.partial_mean + self.core.first_moment + self.right.partial_mean)

    def sample_grid(self, tail_points: int = 100, floor: float = 1e-10) -> np.ndarray:
        """Strikes covering both tails down to probability `floor` and the core grid."""
        x_low = min(self.left.quantile(floor), 0.5 * self.K_L)
        x_high = max(self.right.survival_quantile(floor), 2.0 * self.K_U)
        left = np.geomspace(x_low, self.K_L, tail_points)[:-1]
        right = np.geomspace(self.K_U, x_high, tail_points)[1:]
        return np.concatenate([left, self.core.grid, right])

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "forward": self.forward,
            "K_L": self.K_L,
            "K_U": self.K_U,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


def shrink_lower_strike(core: CoreDensity) -> Optional[float]:
    """First interior local minimum of the core density, if any."""
    q = core.values
    interior = np.where((q[1:-1] < q[:-2]) & (q[1:-1] <= q[2:]))[0]
    if interior.size == 0:
        return None
    return float(core.grid[interior[0] + 1])


def tail_targets(
    core: CoreDensity,
    forward: float,
    tau: float,
    closure: TailClosure = "edge_calls",
) -> Tuple[TailTargets, TailTargets]:
    """
    Conditions for both tails from the core and the smile at the edges.

    Density and slope always come from the core. Mass and partial mean
    depend on the closure:

    - "edge_calls": the tails take the mass and mean the core leaves and
      the smile's call prices at K_L and K_U are reproduced exactly, so
      the core's own integration error is shared by both tails
    - "upper_tail": the left tail follows the smile and the right tail
      takes whatever mass and mean remain
    - "smile": both tails follow the smile; mass and mean are not closed

    Raises:
        InvalidInput: unknown closure
    """
    if closure not in ("edge_calls", "upper_tail", "smile"):
        raise InvalidInput(f"unknown tail closure {closure!r}")
    fit = core.fit
    K_L, K_U = core.lower, core.upper
    sigma_l, dsigma_l, _ = smile_at(fit, K_L)
    sigma_u, dsigma_u, _ = smile_at(fit, K_U)
    m0, m1 = core.mass, core.first_moment

    if closure == "edge_calls":
        call_l = float(call_from_smile(K_L, forward, tau, sigma_l))
        call_u = float(call_from_smile(K_U, forward, tau, sigma_u))
        survival_u = (call_l - call_u - m1 + K_L * m0) / (K_U - K_L)
        partial_u = call_u + K_U * survival_u
        survival_l = survival_u + m0
        partial_l = forward - m1 - partial_u
    else:
        survival_l = float(survival_from_smile(K_L, forward, tau, sigma_l, dsigma_l))
        partial_l = forward - float(upper_partial_mean_from_smile(K_L, forward, tau, sigma_l, dsigma_l))
        if closure == "upper_tail":
            survival_u = survival_l - m0
            partial_u = forward - partial_l - m1
        else:
            survival_u = float(survival_from_smile(K_U, forward, tau, sigma_u, dsigma_u))
            partial_u = float(upper_partial_mean_from_smile(K_U, forward, tau, sigma_u, dsigma_u))

    left = TailTargets(
        side="L",
        strike=K_L,
        density=float(core.values[0]),
        slope=core.slope_lower,
        survival=float(survival_l),
        partial_mean=float(partial_l),
    )
    right = TailTargets(
        side="U",
        strike=K_U,
        density=float(core.values[-1]),
        slope=core.slope_upper,
        survival=float(survival_u),
        partial_mean=float(partial_u),
    )
    return left, right


@dataclass(frozen=True)
class TailOptions:
    close_budget: bool = True
    shrink_domain: bool = False
    left_constraints: Optional[TailConstraints] = None
    right_constraints: Optional[TailConstraints] = None
    scan: TailScan = field(default_factory=TailScan)

    @property
    def closures(self) -> Tuple[TailClosure, ...]:
        """Closures to try in order."""
        return ("edge_calls", "upper_tail") if self.close_budget else ("smile",)


def fit_tails(
    core: CoreDensity,
    forward: float,
    tau: float,
    options: TailOptions = TailOptions(),
) -> Tuple[TailParams, TailParams]:
    """
    Left and right mixture parameters matching the core at K_L and K_U.

    With budget closure the edge-call targets are tried first; when either
    tail has no admissible mixture for them the upper tail absorbs the
    budget instead.

    Raises:
        NoRoot: a tail system has no admissible root
        InvalidMixture: every scanned candidate violates λ ∈ [0, 1] or v > 0
    """
    closures = options.closures
    for attempt, closure in enumerate(closures):
        left_targets, right_targets = tail_targets(core, forward, tau, closure)
        try:
            left = solve_tail(left_targets, options.left_constraints, options.scan)
            right = solve_tail(right_targets, options.right_constraints, options.scan)
            break
        except (NoRoot, InvalidMixture) as exc:
            if attempt == len(closures) - 1:
                raise
            logger.warning("Tail closure infeasible", tau=tau, closure=closure, reason=str(exc))
    logger.info(
        "Tails fitted",
        tau=tau,
        closure=closure,
        K_L=core.lower,
        K_U=core.upper,
        left_mass=left.mass,
        right_mass=right.mass,
        lambda_L=left.lam,
        lambda_U=right.lam,
    )
    return left, right


def assemble(
    fit: LqrFit,
    tails: Tuple[TailParams, TailParams],
    forward: float,
    tau: float,
    core: Optional[CoreDensity] = None,
) -> RiskNeutralDensity:
    """
    Paste the tails onto the core.

    Raises:
        PastingMismatch: density jump above 1e-6 at K_L or K_U, or tails
            pasted at strikes other than the core edges
    """
    left, right = tails
    if core is None:
        core = CoreDensity.from_fit(fit, left.strike, right.strike)
    if not (np.isclose(left.strike, core.lower, rtol=1e-12) and np.isclose(right.strike, core.upper, rtol=1e-12)):
        raise PastingMismatch(
            f"tails pasted at ({left.strike}, {right.strike}), core spans ({core.lower}, {core.upper})"
        )
    jump_l = abs(float(left.pdf(core.lower)) - float(core.values[0]))
    jump_u = abs(float(right.pdf(core.upper)) - float(core.values[-1]))
    if max(jump_l, jump_u) > PASTING_TOL:
        raise PastingMismatch(f"density jumps {jump_l:.3e} at K_L and {jump_u:.3e} at K_U")

    rnd = RiskNeutralDensity(core=core, left=left, right=right, forward=forward, tau=tau)
    logger.info("Density assembled", tau=tau, mass=rnd.mass(), mean=rnd.mean(), forward=forward)
    return rnd


@dataclass(frozen=True)
class DensityReport:
    min_density: float
    mass: float
    mean: float
    forward: float
    max_repricing_error: float
    left_mass: float
    right_mass: float
    pasting_jumps: Tuple[float, float]
    slope_mismatch: Tuple[float, float]
    tolerance_scale: float

    @property
    def mean_error(self) -> float:
        return abs(self.mean - self.forward) / self.forward

    @property
    def nonnegative(self) -> bool:
        return self.min_density >= -1e-12

    @property
    def mass_ok(self) -> bool:
        return abs(self.mass - 1.0) < 1e-6

    @property
    def mean_ok(self) -> bool:
        return self.mean_error < 1e-4

    @property
    def repricing_ok(self) -> bool:
        return self.max_repricing_error < 1e-4 * self.tolerance_scale

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.mass_ok and self.mean_ok and self.repricing_ok

    def to_dict(self) -> dict:
        return {
            "min_density": self.min_density,
            "mass": self.mass,
            "mean": self.mean,
            "forward": self.forward,
            "mean_error": self.mean_error,
            "repricing_err": self.max_repricing_error,
            "L_cdf": self.left_mass,
            "U_cdf": self.right_mass,
            "pasting_jumps": list(self.pasting_jumps),
            "slope_mismatch": list(self.slope_mismatch),
            "passed": self.passed,
        }


def _integrate(fn, a: float, b: float) -> float:
    value, _ = quad(fn, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(value)


def density_report(
    q: RiskNeutralDensity,
    call_quotes: Sequence[Tuple[float, float]] = (),
    rate: float = 0.0,
    spot: Optional[float] = None,
) -> DensityReport:
    """
    Check non-negativity, total mass, mean against the forward and call
    repricing. Mass and mean are integrated numerically from q.pdf so a
    corrupted density is caught independently of its cached integrals.

    Args:
        q: Assembled density
        call_quotes: (strike, spot-premium call price) pairs
        rate: Continuously compounded rate used to forward the premiums
        spot: Scale of the repricing tolerance (defaults to the forward)
    """
    grid = q.sample_grid()
    min_density = float(np.min(q.pdf(grid)))

    def pdf(x: float) -> float:
        return float(q.pdf(x))

    def first(x: float) -> float:
        return x * float(q.pdf(x))

    pieces = [(0.0, q.K_L), (q.K_L, q.K_U), (q.K_U, np.inf)]
    mass = sum(_integrate(pdf, a, b) for a, b in pieces)
    mean = sum(_integrate(first, a, b) for a, b in pieces)

    max_err = 0.0
    if len(call_quotes):
        strikes = np.array([k for k, _ in call_quotes], dtype=float)
        prices = np.array([c for _, c in call_quotes], dtype=float) * np.exp(rate * q.tau)
        max_err = float(np.max(np.abs(q.call_price(strikes) - prices)))

    jumps = (
        abs(float(q.left.pdf(q.K_L)) - float(q.core.values[0])),
        abs(float(q.right.pdf(q.K_U)) - float(q.core.values[-1])),
    )
    slopes = (
        abs(float(q.left.pdf_slope(q.K_L)) - q.core.slope_lower),
        abs(float(q.right.pdf_slope(q.K_U)) - q.core.slope_upper),
    )
    report = DensityReport(
        min_density=min_density,
        mass=mass,
        mean=mean,
        forward=q.forward,
        max_repricing_error=max_err,
        left_mass=q.left_mass,
        right_mass=q.right_mass,
        pasting_jumps=jumps,
        slope_mismatch=slopes,
        tolerance_scale=spot if spot is not None else q.forward,
    )
    if not report.passed:
        logger.warning("Density checks failed", tau=q.tau, **report.to_dict())
    return report


__all__ = [
    "CoreDensity",
    "DensityReport",
    "RiskNeutralDensity",
    "TailOptions",
    "assemble",
    "density_report",
    "fit_tails",
    "shrink_lower_strike",
    "tail_targets",
]
