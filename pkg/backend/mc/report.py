"""
Calibration Report
Mean absolute percentage error between model and reference implied
volatilities per maturity.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from backend.bass.model import BassModel
from backend.density.marginal import MarginalDistribution
from backend.marketdata.black_scholes import implied_vols
from backend.mc.simulation import SimulationSpec, default_strikes, price_model
from backend.utils.exceptions import AllPricesOutOfBand, InvalidInput

logger = structlog.get_logger()


@dataclass(frozen=True)
class MaturityError:
    maturity: float
    strikes: np.ndarray
    model_prices: np.ndarray
    model_ivs: np.ndarray
    reference_ivs: np.ndarray
    err_cab: float
    dropped: int

    def to_dict(self) -> dict:
        return {
            "maturity": self.maturity,
            "err_cab": self.err_cab,
            "dropped": self.dropped,
            "strikes": self.strikes.tolist(),
            "model_prices": self.model_prices.tolist(),
            "model_ivs": [None if np.isnan(v) else float(v) for v in self.model_ivs],
            "reference_ivs": [None if np.isnan(v) else float(v) for v in self.reference_ivs],
        }


@dataclass(frozen=True)
class CalibrationReport:
    spot: float
    rate: float
    maturities: Tuple[MaturityError, ...]

    def err_cab(self, maturity: float) -> float:
        for entry in self.maturities:
            if np.isclose(entry.maturity, maturity):
                return entry.err_cab
        raise KeyError(maturity)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"maturity": e.maturity, "err_cab": e.err_cab, "dropped": e.dropped} for e in self.maturities],
            columns=["maturity", "err_cab", "dropped"],
        )

    def to_dict(self) -> dict:
        return {"spot": self.spot, "rate": self.rate, "maturities": [e.to_dict() for e in self.maturities]}


def reference_ivs(marginal: MarginalDistribution, strikes: np.ndarray, spot: float) -> np.ndarray:
    """Implied volatilities of the marginal's own call prices (zero rate)."""
    strikes = np.asarray(strikes, dtype=float)
    return implied_vols(np.asarray(marginal.call_price(strikes)), spot, strikes, 0.0, marginal.tau)


def calibration_error(
    model_prices: Mapping[float, np.ndarray],
    strikes: np.ndarray,
    reference: Mapping[float, np.ndarray],
    spot: float,
    rate: float = 0.0,
) -> CalibrationReport:
    """
    err_cab = mean |IV_model − IV_ref| / IV_ref per maturity.

    Model prices are undiscounted expectations. Strikes whose model price
    cannot be inverted, or whose reference IV is missing, are dropped and
    counted.

    Raises:
        AllPricesOutOfBand: every strike of some maturity was dropped
    """
    strikes = np.asarray(strikes, dtype=float)
    entries = []
    for tau in sorted(model_prices):
        prices = np.asarray(model_prices[tau], dtype=float)
        if prices.shape != strikes.shape:
            raise InvalidInput(f"maturity {tau}: {prices.size} prices for {strikes.size} strikes")
        if tau not in reference:
            raise InvalidInput(f"no reference IVs for maturity {tau}")
        ref = np.asarray(reference[tau], dtype=float)
        ivs = implied_vols(prices * np.exp(-rate * tau), spot, strikes, rate, tau)
        keep = np.isfinite(ivs) & np.isfinite(ref) & (ref > 0)
        dropped = int(strikes.size - keep.sum())
        if not keep.any():
            raise AllPricesOutOfBand(f"maturity {tau}: no model price inverts to an implied volatility")
        if dropped:
            logger.warning("Model prices dropped", maturity=tau, dropped=dropped)
        err = float(np.mean(np.abs(ivs[keep] - ref[keep]) / ref[keep]))
        entries.append(MaturityError(float(tau), strikes, prices, ivs, ref, err, dropped))
        logger.info("Calibration error", maturity=tau, err_cab=err, strikes=int(keep.sum()))
    return CalibrationReport(spot=float(spot), rate=float(rate), maturities=tuple(entries))


def evaluate_model(
    model: BassModel,
    spec: SimulationSpec,
    strikes: Optional[np.ndarray] = None,
    reference: Optional[Dict[float, np.ndarray]] = None,
) -> Tuple[pd.DataFrame, CalibrationReport]:
    """
    Price the model and score it.

    Reference IVs default to those implied by the model's own marginals.
    """
    strikes = default_strikes(model.spot) if strikes is None else np.asarray(strikes, dtype=float)
    prices = price_model(model, spec, strikes)
    if reference is None:
        reference = {tau: reference_ivs(mu, strikes, model.spot) for tau, mu in zip(model.maturities, model.marginals)}
    by_maturity = {tau: group["price"].to_numpy() for tau, group in prices.groupby("maturity", sort=True)}
    return prices, calibration_error(by_maturity, strikes, reference, model.spot)
