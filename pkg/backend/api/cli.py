"""
Command-Line Interface
Subcommands chaining quotes → densities → calibration → Monte Carlo report.
"""

import argparse
import sys
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from backend.api.artifacts import write_csv, write_json
from backend.api.run_config import RunConfig
from backend.bass.benchmark import benchmark_schemes, gaussian_fixed_point, iteration_fit
from backend.bass.model import BassModel, calibrate, load_model, save_model
from backend.config import settings
from backend.density.marginal import MarginalDistribution
from backend.density.pipeline import DensitySurface, build_densities
from backend.marketdata.quotes import OptionChain, chain_frame, parse_chain
from backend.mc.report import evaluate_model
from backend.mc.simulation import default_strikes, price_model
from backend.quad.convergence import convergence_study
from backend.quad.schemes import QuadratureScheme
from backend.services.error_handler import EXIT_OK, EXIT_USAGE, ErrorHandler
from backend.synth.lognormal import BS_PRESET, bs_chain, bs_marginals, bs_strikes, bs_truth_frame
from backend.synth.ssvi import (
    SSVI_PRESET,
    SSVI_PRESET_MATURITY,
    SsviParams,
    preset_strikes,
    ssvi_chain,
    ssvi_truth_frame,
)
from backend.utils.exceptions import ConfigurationError
from backend.utils.logger import setup_logging

logger = structlog.get_logger()

DEFAULT_TOLS = (1e-2, 1e-3, 1e-4, 1e-5)
DEFAULT_N_LIST = (9, 17, 33, 65, 129)


class Pipeline:
    """One CLI run: a validated config, its hash and the stage runner."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.config_hash = config.config_hash()
        self.errors = ErrorHandler()
        self.out = config.output_dir

    def csv(self, frame: pd.DataFrame, name: str):
        return write_csv(frame, self.out / name, self.config_hash)

    def json(self, payload: dict, name: str):
        return write_json(payload, self.out / name, self.config_hash)

    # ----- inputs -----

    def preset_maturities(self) -> Tuple[float, ...]:
        if self.config.maturities:
            return tuple(self.config.maturities)
        return tuple(BS_PRESET["maturities"]) if self.config.preset == "bs" else (SSVI_PRESET_MATURITY,)

    def spot(self) -> float:
        if self.config.spot is not None:
            return self.config.spot
        return BS_PRESET["spot"] if self.config.preset == "bs" else SSVI_PRESET.spot

    def load_chain(self) -> OptionChain:
        config = self.config
        config.require_source()
        if config.preset == "bs":
            return bs_chain(self.spot(), BS_PRESET["sigma"], self.preset_maturities(), rate=config.rate)
        if config.preset == "ssvi":
            return ssvi_chain(self.ssvi_params(), self.preset_maturities(), noise=config.noise, seed=config.synth_seed)
        return parse_chain(config.input.read_text(encoding="utf-8"), config.spot, config.rate)

    def ssvi_params(self) -> SsviParams:
        return replace(SSVI_PRESET, spot=self.spot(), rate=self.config.rate)

    def densities(self) -> DensitySurface:
        chain = self.errors.run_stage("quotes", self.load_chain)
        surface = self.errors.run_stage(
            "density", build_densities, chain, self.config.density_options(), self.config.workers
        )
        frames = [m.to_frame().assign(maturity=m.tau) for m in surface.maturities]
        self.csv(pd.concat(frames, ignore_index=True)[["maturity", "strike", "density", "cdf"]], "densities.csv")
        self.json(
            {
                "spot": surface.spot,
                "dropped_quotes": chain.dropped,
                "maturities": [m.to_dict() for m in surface.maturities],
                "calendar_violations": surface.violations_dict(),
            },
            "densities.json",
        )
        return surface

    def marginals(self) -> Tuple[Tuple[float, ...], List[MarginalDistribution]]:
        if self.config.preset == "bs":
            maturities = self.preset_maturities()
            return maturities, bs_marginals(self.spot(), BS_PRESET["sigma"], maturities)
        surface = self.densities()
        return tuple(m.tau for m in surface.maturities), list(surface.marginals)

    def strikes(self, model: BassModel) -> np.ndarray:
        if self.config.strikes:
            return np.asarray(self.config.strikes, dtype=float)
        return default_strikes(model.spot, settings.MC_STRIKE_COUNT)

    # ----- outputs -----

    def write_model(self, model: BassModel) -> None:
        save_model(model, self.out / "model.json", {"config_hash": self.config_hash})
        rows = model.convergence_rows()
        self.csv(pd.DataFrame(rows, columns=["interval", "iter", "err"]), "convergence.csv")

    def write_report(self, model: BassModel) -> None:
        prices, report = self.errors.run_stage(
            "report", evaluate_model, model, self.config.simulation_spec(), self.strikes(model)
        )
        self.csv(prices, "prices.csv")
        self.json(report.to_dict(), "report.json")


def cmd_synth(pipeline: Pipeline) -> int:
    config = pipeline.config
    if config.preset is None:
        raise ConfigurationError("synth needs --preset bs or --preset ssvi")
    chain = pipeline.load_chain()
    pipeline.csv(chain_frame(chain), "chain.csv")
    if config.preset == "bs":
        strikes = bs_strikes(pipeline.spot())
        truth = [bs_truth_frame(pipeline.spot(), BS_PRESET["sigma"], t, strikes) for t in pipeline.preset_maturities()]
        params = {"spot": pipeline.spot(), "sigma": BS_PRESET["sigma"]}
    else:
        strikes = preset_strikes()
        truth = [ssvi_truth_frame(pipeline.ssvi_params(), t, strikes) for t in pipeline.preset_maturities()]
        params = pipeline.ssvi_params().to_dict()
    pipeline.csv(pd.concat(truth, ignore_index=True), "truth.csv")
    pipeline.json(
        {
            "preset": config.preset,
            "params": params,
            "maturities": list(pipeline.preset_maturities()),
            "noise": config.noise,
            "seed": config.synth_seed,
        },
        "synth.json",
    )
    return EXIT_OK


def cmd_rnd(pipeline: Pipeline) -> int:
    pipeline.densities()
    return EXIT_OK


def cmd_calibrate(pipeline: Pipeline) -> int:
    config = pipeline.config
    maturities, marginals = pipeline.marginals()
    model = pipeline.errors.run_stage(
        "calibrate",
        calibrate,
        marginals,
        maturities,
        config.quadrature_scheme(),
        config.tol,
        config.max_iter,
        config.fixed_point_options(),
        config.workers,
    )
    pipeline.write_model(model)
    pipeline.write_report(model)
    return EXIT_OK


def cmd_price(pipeline: Pipeline) -> int:
    model = pipeline.errors.run_stage("load", load_model, pipeline.config.require_model())
    prices = pipeline.errors.run_stage(
        "price", price_model, model, pipeline.config.simulation_spec(), pipeline.strikes(model)
    )
    pipeline.csv(prices, "prices.csv")
    return EXIT_OK


def cmd_report(pipeline: Pipeline) -> int:
    model = pipeline.errors.run_stage("load", load_model, pipeline.config.require_model())
    pipeline.write_report(model)
    return EXIT_OK


def cmd_benchmark(pipeline: Pipeline, experiment: str, tols: Sequence[float], n_list: Sequence[int]) -> int:
    config = pipeline.config
    if experiment == "quad":
        table = pipeline.errors.run_stage("benchmark", convergence_study, config.m, n_list)
        pipeline.csv(table.to_frame(), "quad_convergence.csv")
        return EXIT_OK

    maturities = tuple(config.maturities or BS_PRESET["maturities"])
    marginals = bs_marginals(config.spot or BS_PRESET["spot"], BS_PRESET["sigma"], maturities)
    schemes = [QuadratureScheme(kind=kind, n=config.n, m=config.m) for kind in ("trapezoid", "gauss_hermite")]
    frame = pipeline.errors.run_stage(
        "benchmark",
        benchmark_schemes,
        marginals,
        maturities,
        tols,
        schemes,
        config.max_iter,
        config.fixed_point_options(),
        gaussian_fixed_point,
    )
    pipeline.csv(frame, "benchmark.csv")
    pipeline.csv(iteration_fit(frame), "iteration_fit.csv")
    return EXIT_OK


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    flag = parent.add_argument
    flag("--config", type=str, default=None, help="JSON run config; flags override its values")
    flag("--input", type=str, default=None, help="Chain CSV (maturity,strike,side,price,iv)")
    flag("--preset", choices=["bs", "ssvi"], default=None, help="Synthetic input instead of a chain")
    flag("--model", dest="model_file", type=str, default=None, help="Calibrated model JSON")
    flag("--spot", type=float, default=None)
    flag("--rate", type=float, default=None)
    flag("--maturities", type=float, nargs="+", default=None)
    flag("--noise", type=float, default=None, help="Uniform IV noise magnitude for the ssvi preset")
    flag("--synth-seed", type=int, default=None)
    flag("--scheme", choices=["trap", "gh", "trapezoid", "gauss_hermite"], default=None)
    flag("--points", dest="n", type=int, default=None, help="Trapezoid 2N+1 points or GH node count")
    flag("--smoothness", dest="m", type=int, default=None)
    flag("--epsilon", type=float, default=None)
    flag("--tol", type=float, default=None)
    flag("--max-iter", type=int, default=None)
    flag("--initial-guess", choices=["increment", "maturity"], default=None)
    flag("--window-count", type=int, default=None)
    flag("--bimodal", action="store_const", const=True, default=None, help="Constrained left tail")
    flag("--blend-band", type=float, nargs=2, default=None, metavar=("LOW", "HIGH"))
    flag("--paths", type=int, default=None)
    flag("--seed", type=int, default=None)
    flag("--no-antithetic", dest="antithetic", action="store_const", const=False, default=None)
    flag("--chunk-size", type=int, default=None)
    flag("--coupling", choices=["brownian", "transport"], default=None)
    flag("--strikes", type=float, nargs="+", default=None)
    flag("--output-dir", type=str, default=None)
    flag("--workers", type=int, default=None)
    flag("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _common_flags()
    parser = argparse.ArgumentParser(prog="blv", description="Bass local volatility calibration")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("calibrate", parents=[parent], help="Quotes to calibrated model and report")
    commands.add_parser("rnd", parents=[parent], help="Risk-neutral densities only")
    commands.add_parser("price", parents=[parent], help="Monte Carlo call prices from a model file")
    commands.add_parser("report", parents=[parent], help="Calibration error report from a model file")
    commands.add_parser("synth", parents=[parent], help="Synthetic chain and ground truth")
    bench = commands.add_parser("benchmark", parents=[parent], help="Scheme benchmarks")
    bench.add_argument("--experiment", choices=["fixed_point", "quad"], default="fixed_point")
    bench.add_argument("--tols", type=float, nargs="+", default=list(DEFAULT_TOLS))
    bench.add_argument("--n-list", type=int, nargs="+", default=list(DEFAULT_N_LIST))
    return parser


CONFIG_FLAGS = (
    "input", "preset", "model_file", "spot", "rate", "maturities", "noise", "synth_seed", "scheme", "n", "m",
    "epsilon", "tol", "max_iter", "initial_guess", "window_count", "bimodal", "blend_band", "paths", "seed",
    "antithetic", "chunk_size", "coupling", "strikes", "output_dir", "workers", "log_level",
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {name: getattr(args, name) for name in CONFIG_FLAGS}
    try:
        config = RunConfig.from_sources(args.config, **flags)
    except ConfigurationError as e:
        print(f"error [config]: {e}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(config.log_level, settings.LOG_FILE)
    pipeline = Pipeline(config)
    logger.info("Run started", command=args.command, config_hash=pipeline.config_hash)
    try:
        if args.command == "benchmark":
            code = cmd_benchmark(pipeline, args.experiment, args.tols, args.n_list)
        else:
            code = COMMANDS[args.command](pipeline)
    except Exception as e:
        stage = getattr(e, "stage", "run")
        print(f"error [{stage}]: {e}", file=sys.stderr)
        return ErrorHandler.exit_code(e)
    logger.info("Run finished", command=args.command, exit_code=code)
    return code


COMMANDS = {
    "calibrate": cmd_calibrate,
    "rnd": cmd_rnd,
    "price": cmd_price,
    "report": cmd_report,
    "synth": cmd_synth,
}
