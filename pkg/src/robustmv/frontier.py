"""Robust efficient frontier and its dual (risk-aversion) parametrisation.

The frontier maps a worst-case variance budget ``vartheta`` to the best
worst-case expected terminal wealth,

    U0(vartheta) = x0 + sqrt(vartheta) * sqrt(exp(R* T) - 1),

and is the concave conjugate of the optimal mean-variance cost ``V0(lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonpositiveVariance, TargetBelowInitial, ZeroRiskPremium


@dataclass(frozen=True)
class FrontierContext:
    x0: float
    T: float
    R_star: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.R_star < 0:
            raise ValueError(f"risk premium must be non-negative, got {self.R_star}")

    @property
    def growth(self) -> float:
        """``exp(R* T) - 1``."""
        return math.expm1(self.R_star * self.T)

    def _require_premium(self):
        if self.R_star == 0.0:
            raise ZeroRiskPremium("frontier is flat when the risk premium is zero")


def frontier_return(ctx: FrontierContext, vartheta: float) -> float:
    if not vartheta > 0:
        raise NonpositiveVariance(f"variance budget must be positive, got {vartheta}")
    return ctx.x0 + math.sqrt(vartheta) * math.sqrt(ctx.growth)


def inverse_frontier(ctx: FrontierContext, m: float) -> float:
    """Variance budget needed to reach expected terminal wealth ``m``."""
    if not m > ctx.x0:
        raise TargetBelowInitial(f"target {m} must exceed initial capital {ctx.x0}")
    ctx._require_premium()
    return (m - ctx.x0) ** 2 / ctx.growth


def lambda_of_vartheta(ctx: FrontierContext, vartheta: float) -> float:
    if not vartheta > 0:
        raise NonpositiveVariance(f"variance budget must be positive, got {vartheta}")
    ctx._require_premium()
    return math.sqrt(ctx.growth / (4.0 * vartheta))


def vartheta_of_lambda(ctx: FrontierContext, lam: float) -> float:
    """Worst-case variance of the optimal strategy at risk aversion ``lam``."""
    if not lam > 0:
        raise ValueError(f"risk aversion must be positive, got {lam}")
    return ctx.growth / (4.0 * lam * lam)


def dual_value(ctx: FrontierContext, lam: float) -> float:
    """Optimal robust mean-variance cost ``V0(lam)``."""
    if not lam > 0:
        raise ValueError(f"risk aversion must be positive, got {lam}")
    return -ctx.growth / (4.0 * lam) - ctx.x0


def sharpe_lower_bound(ctx: FrontierContext) -> float:
    return math.sqrt(ctx.growth)
