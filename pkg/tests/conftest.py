"""Shared fixtures: Black-Scholes preset, calibrated model and SSVI density."""

import numpy as np
import pytest

from backend.bass.model import calibrate
from backend.density.pipeline import DensityOptions, build_density
from backend.quad.schemes import QuadratureScheme
from backend.synth.lognormal import BS_PRESET, bs_marginals
from backend.synth.ssvi import SSVI_PRESET, SSVI_PRESET_MATURITY, ssvi_chain

SPOT = BS_PRESET["spot"]
SIGMA = BS_PRESET["sigma"]
MATURITIES = BS_PRESET["maturities"]


@pytest.fixture(scope="session")
def trap_scheme():
    return QuadratureScheme(kind="trapezoid", n=101, m=2)


@pytest.fixture(scope="session")
def gh_scheme():
    return QuadratureScheme(kind="gauss_hermite", n=101, m=2)


@pytest.fixture(scope="session")
def bs_preset_marginals():
    return bs_marginals(SPOT, SIGMA, MATURITIES)


@pytest.fixture(scope="session")
def bs_model(bs_preset_marginals, trap_scheme):
    return calibrate(bs_preset_marginals, MATURITIES, trap_scheme, tol=1e-6, max_iter=500)


@pytest.fixture(scope="session")
def ssvi_clean_chain():
    return ssvi_chain(SSVI_PRESET, (SSVI_PRESET_MATURITY,))


@pytest.fixture(scope="session")
def ssvi_density(ssvi_clean_chain):
    quotes = ssvi_clean_chain.quotes_at(SSVI_PRESET_MATURITY)
    return build_density(quotes, ssvi_clean_chain.spot, SSVI_PRESET_MATURITY, DensityOptions())


@pytest.fixture
def rng():
    return np.random.default_rng(7)
