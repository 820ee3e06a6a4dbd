"""
Custom Exception Classes
Provides specific exceptions for every calibration stage.
"""

from typing import List, Optional, Sequence, Tuple


class BLVException(Exception):
    """Base exception for all BLV errors."""
    pass


class ConfigurationError(BLVException):
    """Raised when configuration is invalid."""
    pass


class InvalidInput(BLVException):
    """Raised when a numeric input is non-positive or not finite."""
    pass


class StageError(BLVException):
    """Raised when a named pipeline stage fails."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


# ===== MARKET DATA =====

class MarketDataError(BLVException):
    """Base class for quote parsing and pricing errors."""
    pass


class MalformedRow(MarketDataError):
    """Raised when a chain row cannot be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class DuplicateQuote(MarketDataError):
    """Raised when (maturity, strike, side) appears twice."""
    pass


class NoQuotes(MarketDataError):
    """Raised when a chain holds no usable quote."""
    pass


class NegativeValue(MarketDataError):
    """Raised when a strike, price, iv or maturity is negative."""
    pass


class PriceOutOfBand(MarketDataError):
    """Raised when a price sits at or outside its no-arbitrage bounds."""
    pass


class NoConvergence(MarketDataError):
    """Raised when implied volatility inversion hits its iteration cap."""
    pass


class DomainMismatch(MarketDataError):
    """Raised when an IV curve does not cover the blending band."""
    pass


# ===== DENSITY =====

class DensityError(BLVException):
    """Base class for risk-neutral density construction errors."""
    pass


class TooFewQuotes(DensityError):
    """Raised when a maturity has fewer quotes than the LQR needs."""
    pass


class SingularDesign(DensityError):
    """Raised when no window holds three distinct strikes."""
    pass


class OutOfRange(DensityError):
    """Raised when a strike lies outside the fitted range."""
    pass


class NoRoot(DensityError):
    """Raised when the tail equation has no admissible root."""

    def __init__(
        self,
        message: str,
        bracket: Tuple[float, float] = (float("nan"), float("nan")),
        residuals: Tuple[float, float] = (float("nan"), float("nan")),
    ):
        self.bracket = bracket
        self.residuals = residuals
        super().__init__(
            f"{message} (bracket={bracket}, residuals={residuals})"
        )


class InvalidMixture(DensityError):
    """Raised when a candidate root gives λ outside [0, 1] or v ≤ 0."""
    pass


class PastingMismatch(DensityError):
    """Raised when the density jumps at a pasting strike."""
    pass


class NonMonotone(DensityError):
    """Raised when a numerical CDF decreases."""
    pass


class TooFewStrikes(DensityError):
    """Raised when finite differences get fewer than three strikes."""
    pass


# ===== QUADRATURE =====

class QuadratureError(BLVException):
    """Base class for quadrature errors."""
    pass


class EpsilonOutOfRange(QuadratureError):
    """Raised when ε lies outside (max{1 − dt, 0}, 1)."""
    pass


class InvalidVariance(QuadratureError):
    """Raised when a kernel variance is not positive."""
    pass


class UnsupportedOrder(QuadratureError):
    """Raised when a Gauss-Hermite order is outside [1, 200]."""
    pass


# ===== CALIBRATION =====

class CalibrationError(BLVException):
    """Base class for fixed-point calibration errors."""
    pass


class QuantileOverflow(CalibrationError):
    """Raised when inner convolution values escape [0, 1]."""
    pass


class MaxIterExceeded(CalibrationError):
    """Raised when the fixed point misses its tolerance."""

    def __init__(self, message: str, history: Optional[Sequence[float]] = None):
        self.history: List[float] = list(history or [])
        super().__init__(message)


class TimeOutOfInterval(CalibrationError):
    """Raised when a transport map is asked outside its interval."""
    pass


class CalendarArbitrage(CalibrationError):
    """Raised when consecutive marginals violate the calendar condition."""

    def __init__(self, message: str, violations: Optional[list] = None):
        self.violations = list(violations or [])
        super().__init__(message)


# ===== PRICING =====

class PricingError(BLVException):
    """Base class for Monte Carlo pricing errors."""
    pass


class AllPricesOutOfBand(PricingError):
    """Raised when no model price inverts to an implied volatility."""
    pass
