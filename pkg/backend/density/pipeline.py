"""
Density Pipeline
Quotes of one maturity to an arbitrage-checked density and marginal; all
maturities of a chain in a thread pool with calendar checks between them.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from backend.config import settings
from backend.density.calendar import CalendarViolation, calendar_check
from backend.density.lqr import LqrFit, lqr_fit
from backend.density.marginal import GridSpec, SplineMarginal, to_marginal
from backend.density.rnd import (
    CoreDensity,
    DensityReport,
    RiskNeutralDensity,
    TailOptions,
    assemble,
    density_report,
    fit_tails,
    shrink_lower_strike,
)
from backend.density.tails import TailConstraints, TailScan
from backend.marketdata.black_scholes import bs_price, implied_vols
from backend.marketdata.blending import IvCurve, blend_put_call
from backend.marketdata.quotes import OptionChain, OptionQuote, normalize_chain
from backend.utils.exceptions import TooFewQuotes

logger = structlog.get_logger()


@dataclass(frozen=True)
class DensityOptions:
    window_count: int = 8
    eval_points: int = 401
    blend_band: Optional[Tuple[float, float]] = None
    tails: TailOptions = field(default_factory=TailOptions)
    grid: GridSpec = field(default_factory=GridSpec)

    @classmethod
    def from_settings(cls, **overrides) -> "DensityOptions":
        """Defaults from the global settings, with keyword overrides."""
        base = dict(
            window_count=settings.LQR_WINDOW_COUNT,
            eval_points=settings.LQR_EVAL_POINTS,
            tails=TailOptions(
                close_budget=settings.TAIL_CLOSE_BUDGET,
                scan=TailScan(
                    points=settings.TAIL_SCAN_POINTS,
                    low=settings.TAIL_SCAN_LOW,
                    high=settings.TAIL_SCAN_HIGH,
                    root_tol=settings.TAIL_ROOT_TOL,
                ),
            ),
            grid=GridSpec(
                tail_points=settings.MARGINAL_TAIL_POINTS,
                cdf_floor=settings.MARGINAL_CDF_FLOOR,
                smoothness_order=settings.QUAD_SMOOTHNESS,
            ),
        )
        base.update(overrides)
        return cls(**base)

    def bimodal(self) -> "DensityOptions":
        """Shrink the core to its first interior minimum and constrain the left tail."""
        tails = TailOptions(
            close_budget=self.tails.close_budget,
            shrink_domain=True,
            left_constraints=TailConstraints.bimodal(),
            right_constraints=self.tails.right_constraints,
            scan=self.tails.scan,
        )
        return DensityOptions(self.window_count, self.eval_points, self.blend_band, tails, self.grid)


@dataclass(frozen=True)
class MaturityDensity:
    tau: float
    forward: float
    smile: IvCurve
    fit: LqrFit
    density: RiskNeutralDensity
    marginal: SplineMarginal
    report: DensityReport
    skipped: int = 0

    def to_frame(self) -> pd.DataFrame:
        """Density samples with columns strike, density, cdf."""
        strikes = self.density.sample_grid()
        return pd.DataFrame(
            {
                "strike": strikes,
                "density": self.density.pdf(strikes),
                "cdf": self.marginal.cdf(strikes),
            }
        )

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "forward": self.forward,
            "quotes": int(self.smile.strikes.size),
            "skipped": self.skipped,
            "K_L": self.density.K_L,
            "K_U": self.density.K_U,
            "mass": self.report.mass,
            "mean": self.report.mean,
            "repricing_err": self.report.max_repricing_error,
            "tail_params": {"L": self.density.left.to_dict(), "U": self.density.right.to_dict()},
            "report": self.report.to_dict(),
        }


def _side_ivs(quotes: Sequence[OptionQuote], spot: float, tau: float, side: str) -> Tuple[np.ndarray, np.ndarray]:
    chosen = [q for q in quotes if q.side == side]
    if not chosen:
        return np.empty(0), np.empty(0)
    strikes = np.array([q.strike for q in chosen])
    ivs = np.array([np.nan if q.iv is None else q.iv for q in chosen])
    priced = np.isnan(ivs)
    if priced.any():
        prices = np.array([q.price for q, p in zip(chosen, priced) if p])
        ivs[priced] = implied_vols(prices, spot, strikes[priced], 0.0, tau, side)
    return strikes, ivs


def smile_from_quotes(
    quotes: Sequence[OptionQuote],
    spot: float,
    tau: float,
    blend_band: Optional[Tuple[float, float]] = None,
) -> Tuple[IvCurve, int]:
    """
    Observed smile of one maturity on a zero-rate chain.

    Out-of-the-money quotes are preferred where both sides trade a strike;
    with a moneyness band the put and call smiles are blended across it.
    Returns the curve and the number of quotes whose IV could not be
    recovered.
    """
    call_k, call_iv = _side_ivs(quotes, spot, tau, "call")
    put_k, put_iv = _side_ivs(quotes, spot, tau, "put")
    skipped = int(np.isnan(call_iv).sum() + np.isnan(put_iv).sum())
    call_k, call_iv = call_k[~np.isnan(call_iv)], call_iv[~np.isnan(call_iv)]
    put_k, put_iv = put_k[~np.isnan(put_iv)], put_iv[~np.isnan(put_iv)]

    if call_k.size and put_k.size and blend_band is not None:
        k_min, k_max = blend_band[0] * spot, blend_band[1] * spot
        blended = blend_put_call(IvCurve(call_k, call_iv), IvCurve(put_k, put_iv), k_min, k_max)
        strikes = np.union1d(put_k[put_k < k_max], call_k[call_k > k_min])
        return blended.sample(strikes), skipped

    by_strike: Dict[float, float] = {}
    for k, iv in zip(put_k, put_iv):
        by_strike[float(k)] = float(iv)
    for k, iv in zip(call_k, call_iv):
        if k >= spot or k not in by_strike:
            by_strike[float(k)] = float(iv)
    if not by_strike:
        raise TooFewQuotes(f"no invertible quotes at maturity {tau}")
    strikes = np.array(sorted(by_strike))
    return IvCurve(strikes, np.array([by_strike[k] for k in strikes])), skipped


def _call_quotes(quotes: Sequence[OptionQuote], spot: float, tau: float) -> List[Tuple[float, float]]:
    """(K, C) pairs; puts through parity and IV-only quotes through Black-Scholes."""
    pairs = []
    for q in quotes:
        if q.price is not None:
            price = q.price if q.side == "call" else q.price + spot - q.strike
        else:
            price = bs_price(spot, q.strike, 0.0, tau, q.iv, "call")
        pairs.append((q.strike, float(price)))
    return pairs


def core_from_quotes(
    quotes: Sequence[OptionQuote],
    spot: float,
    tau: float,
    options: DensityOptions = DensityOptions(),
) -> Tuple[IvCurve, int, LqrFit, CoreDensity]:
    """
    Smile, skipped-quote count, LQR fit and core density of one maturity.

    With domain shrinking on, the core starts at its first interior minimum
    when that lies below the spot.
    """
    smile, skipped = smile_from_quotes(quotes, spot, tau, options.blend_band)
    if skipped:
        logger.warning("Quotes without implied vol skipped", tau=tau, skipped=skipped)
    grid = np.linspace(smile.strikes[0], smile.strikes[-1], options.eval_points)
    fit = lqr_fit(smile.strikes, smile.ivs, grid, options.window_count, spot, tau)

    core = CoreDensity.from_fit(fit)
    if options.tails.shrink_domain:
        shrunk = shrink_lower_strike(core)
        if shrunk is not None and shrunk < spot:
            logger.info("Core domain shrunk", tau=tau, K_L=shrunk)
            core = CoreDensity.from_fit(fit, lower=shrunk)
    return smile, skipped, fit, core


def build_density(
    quotes: Sequence[OptionQuote],
    spot: float,
    tau: float,
    options: DensityOptions = DensityOptions(),
) -> MaturityDensity:
    """
    Quotes of one maturity on a zero-rate chain to a density and marginal.

    Raises:
        TooFewQuotes: fewer than 5 distinct usable strikes
        NoRoot, InvalidMixture: tail system has no admissible solution
        PastingMismatch, NonMonotone: assembly or CDF checks fail
    """
    smile, skipped, fit, core = core_from_quotes(quotes, spot, tau, options)
    tails = fit_tails(core, spot, tau, options.tails)
    rnd = assemble(fit, tails, spot, tau, core=core)
    report = density_report(rnd, _call_quotes(quotes, spot, tau), rate=0.0, spot=spot)
    marginal = to_marginal(rnd, options.grid)
    return MaturityDensity(
        tau=tau,
        forward=spot,
        smile=smile,
        fit=fit,
        density=rnd,
        marginal=marginal,
        report=report,
        skipped=skipped,
    )


@dataclass(frozen=True)
class DensitySurface:
    """Densities of every maturity plus calendar violations between neighbours."""

    spot: float
    maturities: Tuple[MaturityDensity, ...]
    calendar_violations: Dict[Tuple[float, float], Tuple[CalendarViolation, ...]]

    @property
    def marginals(self) -> Tuple[SplineMarginal, ...]:
        return tuple(m.marginal for m in self.maturities)

    def violations_dict(self) -> dict:
        return {
            f"{early}-{late}": [v.to_dict() for v in found]
            for (early, late), found in self.calendar_violations.items()
        }


def calendar_grid(early: RiskNeutralDensity, late: RiskNeutralDensity, points: int = 200) -> np.ndarray:
    return np.linspace(min(early.K_L, late.K_L), max(early.K_U, late.K_U), points)


def build_densities(
    chain: OptionChain,
    options: DensityOptions = DensityOptions(),
    workers: int = 1,
) -> DensitySurface:
    """
    Densities for every maturity of a chain.

    The chain is normalized to zero rate first. Maturities are fitted in a
    thread pool and collected in maturity order.
    """
    normalized = normalize_chain(chain)
    maturities = normalized.maturities
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [
            executor.submit(build_density, normalized.quotes_at(tau), normalized.spot, tau, options)
            for tau in maturities
        ]
        results = tuple(f.result() for f in futures)

    violations: Dict[Tuple[float, float], Tuple[CalendarViolation, ...]] = {}
    for early, late in zip(results[:-1], results[1:]):
        found = calendar_check(early.density, late.density, 0.0, calendar_grid(early.density, late.density))
        violations[(early.tau, late.tau)] = tuple(found)

    logger.info(
        "Densities built",
        maturities=len(results),
        calendar_violations=sum(len(v) for v in violations.values()),
    )
    return DensitySurface(spot=normalized.spot, maturities=results, calendar_violations=violations)
