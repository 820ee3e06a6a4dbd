"""
Monte Carlo Simulation
Terminal spots of the calibrated model at every maturity, generated in
independently seeded chunks and priced with antithetic pair statistics.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from backend.bass.model import BassModel
from backend.config import settings
from backend.marketdata.black_scholes import implied_vols
from backend.quad.grid_function import GridFunction
from backend.quad.schemes import convolve_values
from backend.utils.exceptions import InvalidInput

logger = structlog.get_logger()


@dataclass(frozen=True)
class SimulationSpec:
    n_paths: int
    seed: int = 0
    antithetic: bool = True
    chunk_size: int = 262_144
    coupling: Literal["brownian", "transport"] = "transport"
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise InvalidInput(f"n_paths must be >= 1, got {self.n_paths}")
        if self.chunk_size < 2:
            raise InvalidInput(f"chunk_size must be >= 2, got {self.chunk_size}")
        if self.seed < 0:
            raise InvalidInput(f"seed must be non-negative, got {self.seed}")
        if self.coupling not in ("brownian", "transport"):
            raise InvalidInput(f"unknown coupling {self.coupling!r}")

    @classmethod
    def from_settings(cls, **overrides) -> "SimulationSpec":
        base = dict(
            n_paths=settings.MC_PATHS,
            seed=settings.MC_SEED,
            antithetic=settings.MC_ANTITHETIC,
            chunk_size=settings.MC_CHUNK_SIZE,
            coupling=settings.MC_COUPLING,
            workers=settings.NUM_WORKERS,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def chunk_sizes(self) -> Tuple[int, ...]:
        full, rest = divmod(self.n_paths, self.chunk_size)
        return tuple([self.chunk_size] * full + ([rest] if rest else []))

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "antithetic": self.antithetic,
            "chunk_size": self.chunk_size,
            "coupling": self.coupling,
        }


@dataclass(frozen=True)
class SimulationResult:
    """Terminal spots and Brownian levels, one row per maturity."""

    maturities: Tuple[float, ...]
    terminals: np.ndarray
    brownian: np.ndarray
    chunk_sizes: Tuple[int, ...]
    antithetic: bool
    spot: float

    @property
    def n_paths(self) -> int:
        return self.terminals.shape[1]

    def pair_units(self, values: np.ndarray) -> np.ndarray:
        """Independent units of a per-path quantity: antithetic pair averages or the paths themselves."""
        return pair_units(values, self.chunk_sizes, self.antithetic)

    def martingale_check(self) -> pd.DataFrame:
        """Per maturity: mean(S_T), its standard error and the gap to the spot."""
        rows = []
        for j, tau in enumerate(self.maturities):
            units = self.pair_units(self.terminals[j])
            mean = float(self.terminals[j].mean())
            se = float(units.std(ddof=1) / np.sqrt(units.size)) if units.size > 1 else np.nan
            rows.append({"maturity": tau, "mean": mean, "se": se, "gap": mean - self.spot})
        return pd.DataFrame(rows, columns=["maturity", "mean", "se", "gap"])


def _pair_index(chunk_sizes: Sequence[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    first, second, single = [], [], []
    offset = 0
    for size in chunk_sizes:
        half = -(-size // 2)
        j = np.arange(size - half)
        first.append(offset + j)
        second.append(offset + half + j)
        if size % 2:
            single.append(np.array([offset + half - 1]))
        offset += size
    return tuple(np.concatenate(parts) if parts else np.empty(0, dtype=int) for parts in (first, second, single))


def pair_units(values: np.ndarray, chunk_sizes: Sequence[int], antithetic: bool) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not antithetic:
        return values
    first, second, single = _pair_index(chunk_sizes)
    return np.concatenate([0.5 * (values[..., first] + values[..., second]), values[..., single]], axis=-1)


def _normals(rng: np.random.Generator, steps: int, size: int, antithetic: bool) -> np.ndarray:
    """Standard normals (steps × size); with antithetic the second half mirrors the first."""
    if not antithetic:
        return rng.standard_normal((steps, size))
    half = -(-size // 2)
    z = rng.standard_normal((steps, half))
    return np.concatenate([z, -z], axis=1)[:, :size]


def _chunk_generators(seed: int, count: int) -> List[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(seq)) for seq in np.random.SeedSequence(seed).spawn(count)]


class PathEngine:
    """
    Maps Brownian increments to spots.

    With "transport" coupling (default) the level W_{T_{j−1}} is recovered
    from the simulated spot by inverting f(T_{j−1}, ·) of the next interval
    before the increment is added, so the martingale property and every
    marginal hold even for a loosely converged model. With "brownian"
    coupling W is one Brownian motion and S_{T_j} is the maturity map at
    W_{T_j}.
    """

    def __init__(self, model: BassModel, coupling: str = "transport"):
        self.model = model
        self.coupling = coupling
        taus = np.asarray(model.maturities, dtype=float)
        self.increments = np.sqrt(np.diff(np.concatenate([[0.0], taus])))
        self.start_inverses: List[Optional[GridFunction]] = [None]
        if coupling == "transport":
            self.start_inverses += [self._start_inverse(j) for j in range(1, len(taus))]

    def _start_inverse(self, j: int) -> GridFunction:
        interval = self.model.intervals[j - 1]
        grid = interval.F_W.grid
        spots = np.maximum.accumulate(convolve_values(interval.inner, interval.dt, grid, self.model.scheme))
        keep = np.concatenate([[True], np.diff(spots) > 0])
        return GridFunction(spots[keep], grid[keep], kind="map")

    def run(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        m, size = len(self.model.maturities), z.shape[1]
        W = np.empty((m, size))
        S = np.empty((m, size))
        W[0] = self.increments[0] * z[0]
        S[0] = self.model.initial_map(W[0])
        for j in range(1, m):
            if self.coupling == "transport":
                start = np.asarray(self.start_inverses[j](S[j - 1]))
            else:
                start = W[j - 1]
            W[j] = start + self.increments[j] * z[j]
            S[j] = self.model.intervals[j - 1].inner(W[j])
        return W, S


def _run_chunks(model: BassModel, spec: SimulationSpec, task):
    engine = PathEngine(model, spec.coupling)
    sizes = spec.chunk_sizes
    generators = _chunk_generators(spec.seed, len(sizes))
    steps = len(model.maturities)

    def work(k: int):
        z = _normals(generators[k], steps, sizes[k], spec.antithetic)
        W, S = engine.run(z)
        return task(k, W, S)

    with ThreadPoolExecutor(max_workers=max(1, spec.workers)) as executor:
        futures = [executor.submit(work, k) for k in range(len(sizes))]
        return [f.result() for f in futures]


def simulate_terminals(model: BassModel, spec: SimulationSpec) -> SimulationResult:
    """
    Terminal spots at every maturity for spec.n_paths paths.

    Chunk k draws from its own Philox stream spawned from the seed, so the
    output depends only on (seed, chunk_size, n_paths) and not on workers.
    """
    parts = _run_chunks(model, spec, lambda k, W, S: (W, S))
    brownian = np.concatenate([W for W, _ in parts], axis=1)
    terminals = np.concatenate([S for _, S in parts], axis=1)
    logger.info(
        "Paths simulated",
        paths=spec.n_paths,
        chunks=len(parts),
        coupling=spec.coupling,
        antithetic=spec.antithetic,
    )
    return SimulationResult(
        maturities=tuple(model.maturities),
        terminals=terminals,
        brownian=brownian,
        chunk_sizes=spec.chunk_sizes,
        antithetic=spec.antithetic,
        spot=model.spot,
    )


def price_calls(result: SimulationResult, strikes: np.ndarray, maturity_index: int) -> Tuple[np.ndarray, np.ndarray]:
    """Undiscounted call prices mean((S_T − K)₊) and their standard errors."""
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(strikes < 0):
        raise InvalidInput("strikes must be non-negative")
    S = result.terminals[maturity_index]
    payoffs = np.maximum(S[None, :] - strikes[:, None], 0.0)
    units = result.pair_units(payoffs)
    prices = payoffs.mean(axis=1)
    se = units.std(axis=1, ddof=1) / np.sqrt(units.shape[1]) if units.shape[1] > 1 else np.full(strikes.size, np.nan)
    return prices, se


def default_strikes(spot: float, count: int = 21) -> np.ndarray:
    """Uniform strikes on [0.5·S₀, 1.5·S₀]."""
    return np.linspace(0.5 * spot, 1.5 * spot, count)


def price_model(
    model: BassModel,
    spec: SimulationSpec,
    strikes: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """
    Streaming call prices at every maturity.

    Each chunk reduces to payoff sums, unit sums and unit sums of squares;
    chunks are combined in order. Columns: maturity, strike, price, se, iv.
    """
    strikes = default_strikes(model.spot, settings.MC_STRIKE_COUNT) if strikes is None else np.asarray(strikes, float)
    m = len(model.maturities)

    def reduce_chunk(k: int, W: np.ndarray, S: np.ndarray):
        size = S.shape[1]
        sums = np.empty((m, strikes.size))
        unit_sums = np.empty((m, strikes.size))
        unit_squares = np.empty((m, strikes.size))
        n_units = 0
        for j in range(m):
            payoffs = np.maximum(S[j][None, :] - strikes[:, None], 0.0)
            units = pair_units(payoffs, (size,), spec.antithetic)
            sums[j] = payoffs.sum(axis=1)
            unit_sums[j] = units.sum(axis=1)
            unit_squares[j] = (units**2).sum(axis=1)
            n_units = units.shape[1]
        return size, n_units, sums, unit_sums, unit_squares

    parts = _run_chunks(model, spec, reduce_chunk)
    n_paths = sum(p[0] for p in parts)
    n_units = sum(p[1] for p in parts)
    total = sum(p[2] for p in parts)
    unit_total = sum(p[3] for p in parts)
    unit_square_total = sum(p[4] for p in parts)

    prices = total / n_paths
    unit_mean = unit_total / n_units
    if n_units > 1:
        variance = np.maximum(unit_square_total - n_units * unit_mean**2, 0.0) / (n_units - 1)
        se = np.sqrt(variance / n_units)
    else:
        se = np.full_like(prices, np.nan)

    frames = []
    for j, tau in enumerate(model.maturities):
        ivs = implied_vols(prices[j], model.spot, strikes, 0.0, tau)
        frames.append(pd.DataFrame({"maturity": tau, "strike": strikes, "price": prices[j], "se": se[j], "iv": ivs}))
    logger.info("Model priced", paths=n_paths, maturities=m, strikes=strikes.size)
    return pd.concat(frames, ignore_index=True)
