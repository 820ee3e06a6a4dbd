"""BLV: Bass local volatility calibration from option quotes."""

__version__ = "0.1.0"
