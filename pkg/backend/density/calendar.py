"""
Calendar Arbitrage Check
Convex-order test between consecutive maturities on a strike grid.
"""

from dataclasses import dataclass
from typing import List, Protocol, Sequence

import numpy as np
import structlog

logger = structlog.get_logger()

CALENDAR_TOL = 1e-6


class PricedDistribution(Protocol):
    tau: float

    def call_price(self, K): ...


@dataclass(frozen=True)
class CalendarViolation:
    strike: float
    value: float

    def to_dict(self) -> dict:
        return {"strike": self.strike, "value": self.value}


def calendar_values(
    q_early: PricedDistribution,
    q_late: PricedDistribution,
    r: float,
    K_grid: Sequence[float],
) -> np.ndarray:
    """
    ∫ max(x − K, 0)(e^{rΔT} q_late(x) − q_early(x e^{−rΔT})) dx for each K,
    evaluated as e^{rΔT}[C_late(K) − e^{rΔT} C_early(K e^{−rΔT})] with
    undiscounted call prices.
    """
    strikes = np.asarray(K_grid, dtype=float)
    growth = np.exp(r * (q_late.tau - q_early.tau))
    late = np.asarray(q_late.call_price(strikes), dtype=float)
    early = np.asarray(q_early.call_price(strikes / growth), dtype=float)
    return growth * (late - growth * early)


def calendar_check(
    q_early: PricedDistribution,
    q_late: PricedDistribution,
    r: float,
    K_grid: Sequence[float],
    tol: float = CALENDAR_TOL,
) -> List[CalendarViolation]:
    """Strikes where the calendar integral falls below −tol."""
    strikes = np.asarray(K_grid, dtype=float)
    values = calendar_values(q_early, q_late, r, strikes)
    violations = [CalendarViolation(float(k), float(v)) for k, v in zip(strikes, values) if v < -tol]
    if violations:
        logger.warning(
            "Calendar violations",
            early_tau=q_early.tau,
            late_tau=q_late.tau,
            count=len(violations),
            worst=min(v.value for v in violations),
        )
    return violations
