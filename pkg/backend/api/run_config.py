"""
Run Configuration
Validated settings of one CLI run: JSON file values overridden by flags.
"""

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from backend.bass.fixed_point import FixedPointOptions
from backend.config import settings
from backend.density.pipeline import DensityOptions
from backend.mc.simulation import SimulationSpec
from backend.quad.schemes import QuadratureScheme
from backend.utils.exceptions import ConfigurationError

SCHEME_ALIASES = {"trap": "trapezoid", "trapezoid": "trapezoid", "gh": "gauss_hermite", "gauss_hermite": "gauss_hermite"}

# fields that do not change any artifact
UNHASHED = {"output_dir", "workers", "log_level"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=(), frozen=True)

    input: Optional[Path] = None
    preset: Optional[Literal["bs", "ssvi"]] = None
    model_file: Optional[Path] = None
    spot: Optional[float] = Field(None, gt=0.0)
    rate: float = 0.0
    maturities: Optional[List[float]] = None
    noise: float = Field(0.0, ge=0.0)
    synth_seed: int = Field(0, ge=0)

    scheme: Literal["trapezoid", "gauss_hermite"] = Field(default_factory=lambda: settings.QUAD_SCHEME)
    n: int = Field(default_factory=lambda: settings.QUAD_POINTS)
    m: int = Field(default_factory=lambda: settings.QUAD_SMOOTHNESS)
    epsilon: Optional[float] = Field(default_factory=lambda: settings.QUAD_EPSILON)

    tol: float = Field(default_factory=lambda: settings.FIXED_POINT_TOL)
    max_iter: int = Field(default_factory=lambda: settings.FIXED_POINT_MAX_ITER)
    initial_guess: Literal["increment", "maturity"] = Field(default_factory=lambda: settings.INITIAL_GUESS)

    window_count: int = Field(default_factory=lambda: settings.LQR_WINDOW_COUNT)
    bimodal: bool = False
    blend_band: Optional[Tuple[float, float]] = None

    paths: int = Field(default_factory=lambda: settings.MC_PATHS)
    seed: int = Field(default_factory=lambda: settings.MC_SEED)
    antithetic: bool = Field(default_factory=lambda: settings.MC_ANTITHETIC)
    chunk_size: int = Field(default_factory=lambda: settings.MC_CHUNK_SIZE)
    coupling: Literal["brownian", "transport"] = Field(default_factory=lambda: settings.MC_COUPLING)
    strikes: Optional[List[float]] = None

    output_dir: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    workers: int = Field(default_factory=lambda: settings.NUM_WORKERS)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(default_factory=lambda: settings.LOG_LEVEL)

    @field_validator("scheme", mode="before")
    @classmethod
    def _scheme_alias(cls, value):
        return SCHEME_ALIASES.get(str(value).lower(), value)

    @field_validator("tol")
    @classmethod
    def _tol_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {value}")
        return value

    @field_validator("max_iter", "paths", "workers")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value

    @field_validator("window_count")
    @classmethod
    def _window_count(cls, value: int) -> int:
        if value < 5:
            raise ValueError(f"window_count must be >= 5, got {value}")
        return value

    @field_validator("n")
    @classmethod
    def _points(cls, value: int) -> int:
        if value < 3:
            raise ValueError(f"n must be >= 3, got {value}")
        return value

    @field_validator("maturities")
    @classmethod
    def _sorted_maturities(cls, value):
        if value is not None and (not value or value[0] <= 0 or any(b <= a for a, b in zip(value, value[1:]))):
            raise ValueError(f"maturities must be positive and strictly increasing, got {value}")
        return value

    @model_validator(mode="after")
    def _paths_exist(self) -> "RunConfig":
        for name in ("input", "model_file"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name} file not found: {path}")
        if self.input is not None and self.preset is not None:
            raise ValueError("give either an input chain or a preset, not both")
        if self.input is not None and self.spot is None:
            raise ValueError("a chain input needs --spot")
        return self

    @classmethod
    def from_sources(cls, config_file: Optional[Path] = None, **flags) -> "RunConfig":
        """
        JSON config file values, then every flag that is not None.

        Raises:
            ConfigurationError: unreadable file or invalid values
        """
        values = {}
        if config_file is not None:
            path = Path(config_file)
            if not path.exists():
                raise ConfigurationError(f"config file not found: {path}")
            try:
                values = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
        values.update({k: v for k, v in flags.items() if v is not None})
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigurationError(str(e)) from e

    def require_source(self) -> None:
        if self.input is None and self.preset is None:
            raise ConfigurationError("an input chain (--input) or a synth preset (--preset) is required")

    def require_model(self) -> Path:
        if self.model_file is None:
            raise ConfigurationError("a calibrated model file (--model) is required")
        return self.model_file

    def quadrature_scheme(self) -> QuadratureScheme:
        return QuadratureScheme(kind=self.scheme, n=self.n, m=self.m, epsilon=self.epsilon)

    def fixed_point_options(self) -> FixedPointOptions:
        return FixedPointOptions.from_settings(initial_guess=self.initial_guess)

    def density_options(self) -> DensityOptions:
        options = DensityOptions.from_settings(window_count=self.window_count, blend_band=self.blend_band)
        return options.bimodal() if self.bimodal else options

    def simulation_spec(self) -> SimulationSpec:
        return SimulationSpec(
            n_paths=self.paths,
            seed=self.seed,
            antithetic=self.antithetic,
            chunk_size=self.chunk_size,
            coupling=self.coupling,
            workers=self.workers,
        )

    def canonical_json(self) -> str:
        payload = self.model_dump(mode="json", exclude=UNHASHED)
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """First 16 hex digits of the SHA-256 of the canonical JSON dump."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]
