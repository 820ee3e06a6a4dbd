"""Risk-neutral densities: LQR core, lognormal-mixture tails, marginals."""

from backend.density.breeden_litzenberger import DensityComparison, SampledDensity, bl_density, compare_with_lqr
from backend.density.calendar import CalendarViolation, calendar_check, calendar_values
from backend.density.formula import density_from_smile, smile_bracket
from backend.density.lqr import LqrFit, lqr_fit, rnd_from_iv, smile_at
from backend.density.marginal import (
    GridSpec,
    LognormalMarginal,
    MarginalDistribution,
    SplineMarginal,
    marginal_from_dict,
    marginal_to_dict,
    to_marginal,
)
from backend.density.pipeline import (
    DensityOptions,
    DensitySurface,
    MaturityDensity,
    build_densities,
    build_density,
    core_from_quotes,
    smile_from_quotes,
)
from backend.density.rnd import (
    CoreDensity,
    DensityReport,
    RiskNeutralDensity,
    TailOptions,
    assemble,
    density_report,
    fit_tails,
    shrink_lower_strike,
    tail_targets,
)
from backend.density.tails import TailConstraints, TailParams, TailScan, TailTargets, solve_tail, tail_residuals

__all__ = [
    "CalendarViolation",
    "CoreDensity",
    "DensityComparison",
    "DensityOptions",
    "DensityReport",
    "DensitySurface",
    "GridSpec",
    "LognormalMarginal",
    "LqrFit",
    "MarginalDistribution",
    "MaturityDensity",
    "RiskNeutralDensity",
    "SampledDensity",
    "SplineMarginal",
    "TailConstraints",
    "TailOptions",
    "TailParams",
    "TailScan",
    "TailTargets",
    "assemble",
    "bl_density",
    "build_densities",
    "build_density",
    "calendar_check",
    "calendar_values",
    "compare_with_lqr",
    "core_from_quotes",
    "density_from_smile",
    "density_report",
    "fit_tails",
    "lqr_fit",
    "marginal_from_dict",
    "marginal_to_dict",
    "rnd_from_iv",
    "shrink_lower_strike",
    "smile_at",
    "smile_bracket",
    "smile_from_quotes",
    "solve_tail",
    "tail_residuals",
    "tail_targets",
    "to_marginal",
]
