"""
Centralized configuration management for BLV.
Loads environment variables and provides typed access to numeric defaults.
"""

from pathlib import Path
from typing import Literal, Optional
from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Project Paths
    PROJECT_ROOT: Path = Path(__file__).parent.parent
    OUTPUT_DIR: Path = PROJECT_ROOT / "output"

    # Quadrature
    QUAD_SCHEME: Literal["trapezoid", "gauss_hermite"] = Field("trapezoid")
    QUAD_POINTS: int = Field(101, ge=3, description="Trapezoid 2N+1 points or GH node count")
    QUAD_SMOOTHNESS: int = Field(2, ge=1, description="Assumed smoothness order m")
    QUAD_EPSILON: Optional[float] = Field(
        None, gt=0.0, lt=1.0, description="Override for ε (default: admissible midpoint)"
    )

    # Fixed-point iteration
    FIXED_POINT_TOL: float = Field(1e-4, gt=0.0, lt=1.0)
    FIXED_POINT_MAX_ITER: int = Field(500, ge=1)
    W_GRID_POINTS: int = Field(801, ge=11, description="Points of the uniform w-grid")
    W_GRID_WIDTH: float = Field(8.0, gt=0.0, description="Half-width in units of √T_{i+1}")
    QUANTILE_CLAMP: float = Field(1e-12, gt=0.0, lt=1e-3)
    INITIAL_GUESS: Literal["increment", "maturity"] = Field("increment")
    RECENTER: bool = Field(True, description="Shift each iterate to zero mean")

    # Local quadratic regression
    LQR_WINDOW_COUNT: int = Field(8, ge=5)
    LQR_EVAL_POINTS: int = Field(401, ge=11)

    # Lognormal mixture tails
    TAIL_SCAN_POINTS: int = Field(400, ge=10)
    TAIL_SCAN_LOW: float = Field(1e-3, gt=0.0)
    TAIL_SCAN_HIGH: float = Field(10.0, gt=0.0)
    TAIL_ROOT_TOL: float = Field(1e-9, gt=0.0)
    TAIL_CLOSE_BUDGET: bool = Field(True, description="Tails close mass and mean and reprice the edge calls")

    # Marginal grids
    MARGINAL_TAIL_POINTS: int = Field(200, ge=10)
    MARGINAL_CDF_FLOOR: float = Field(1e-12, gt=0.0)

    # Monte Carlo
    MC_PATHS: int = Field(1_000_000, ge=1)
    MC_SEED: int = Field(20240501, ge=0)
    MC_ANTITHETIC: bool = Field(True)
    MC_CHUNK_SIZE: int = Field(262_144, ge=2)
    MC_COUPLING: Literal["brownian", "transport"] = Field("transport")
    MC_STRIKE_COUNT: int = Field(21, ge=1)

    # Concurrency
    NUM_WORKERS: int = Field(4, ge=1)

    # Logging
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field("INFO")
    LOG_FILE: Optional[str] = Field(None)

    class Config:
        env_prefix = "BLV_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


# Global settings instance
settings = Settings()
