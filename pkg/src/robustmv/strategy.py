"""Closed-form robust mean-variance strategy.

With minimal risk premium ``R*`` the value function on the space of wealth
distributions is

    v(t, mu) = K(t) Var(mu) - mean(mu) + chi(t)
    K(t)     = lam * exp(-R* (T - t))
    chi(t)   = -(exp(R* (T - t)) - 1) / (4 lam)

and the optimal feedback is ``a*(t, x) = (x0 + exp(R* T) / (2 lam) - x) Sigma*^-1 b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ambiguity import AmbiguitySet, WorstCase, worst_case
from .errors import EmptyMeasure, TimeOutOfRange

_TIME_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted point cloud of wealth values; uniform weights if none given."""

    samples: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.samples, dtype=float))
        if x.size == 0:
            raise EmptyMeasure("empirical measure needs at least one sample")
        if self.weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != x.shape or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be non-negative, one per sample, not all zero")
            w = w / w.sum()
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, x: float) -> "EmpiricalMeasure":
        return cls(np.array([x]))

    @property
    def mean(self) -> float:
        return float(self.weights @ self.samples)

    @property
    def var(self) -> float:
        # population variance: v acts on the measure itself
        return float(self.weights @ (self.samples - self.mean) ** 2)


@dataclass(frozen=True, eq=False)
class RobustStrategy:
    lam: float
    x0: float
    T: float
    b: np.ndarray
    worst: WorstCase

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"risk aversion must be positive, got {self.lam}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @classmethod
    def build(cls, aset: AmbiguitySet, b, lam: float, x0: float, T: float) -> "RobustStrategy":
        return cls(lam, x0, T, b, worst_case(aset, b))

    @property
    def R(self) -> float:
        return self.worst.risk_premium

    @property
    def target(self) -> float:
        """Wealth level at which the strategy stops investing."""
        return self.x0 + math.exp(self.R * self.T) / (2.0 * self.lam)

    def _check_t(self, t: float) -> float:
        if not (-_TIME_SLACK <= t <= self.T + _TIME_SLACK):
            raise TimeOutOfRange(f"t={t} outside [0, {self.T}]")
        return t

    def K(self, t: float) -> float:
        self._check_t(t)
        return self.lam * math.exp(-self.R * (self.T - t))

    def chi(self, t: float) -> float:
        self._check_t(t)
        return -math.expm1(self.R * (self.T - t)) / (4.0 * self.lam)

    def dK_dt(self, t: float) -> float:
        return self.R * self.K(t)

    def dchi_dt(self, t: float) -> float:
        return self.R / (4.0 * self.K(t))

    def value_function(self, t: float, mu: EmpiricalMeasure) -> float:
        return self.K(t) * mu.var - mu.mean + self.chi(t)

    def dv_dt(self, t: float, mu: EmpiricalMeasure) -> float:
        return self.dK_dt(t) * mu.var + self.dchi_dt(t)

    def measure_derivative(self, t: float, mu: EmpiricalMeasure, x) -> np.ndarray:
        """Lions derivative ``2 K(t) (x - mean) - 1`` evaluated at ``x``."""
        return 2.0 * self.K(t) * (np.asarray(x, dtype=float) - mu.mean) - 1.0

    def measure_hessian(self, t: float) -> float:
        """``d/dx`` of the Lions derivative; constant in x and mu."""
        return 2.0 * self.K(t)

    def optimal_control(self, t: float, x) -> np.ndarray:
        """Allocation ``(target - x) Sigma*^-1 b``; ``x`` may be an array of wealths."""
        self._check_t(t)
        x = np.asarray(x, dtype=float)
        ratio = np.asarray(self.worst.variance_risk_ratio)
        return (self.target - x)[..., None] * ratio

    def optimal_cost(self) -> float:
        return -math.expm1(self.R * self.T) / (4.0 * self.lam) - self.x0

    def expected_terminal_wealth(self) -> float:
        return self.x0 + math.expm1(self.R * self.T) / (2.0 * self.lam)

    def robust_wealth_variance(self, t: float) -> float:
        """Variance of the optimal wealth at ``t`` when the realised risk premium stays at R*."""
        self._check_t(t)
        return math.exp(2.0 * self.R * (self.T - t)) / (4.0 * self.lam**2) * math.expm1(self.R * t)

    def sharpe(self) -> float:
        """Sharpe ratio of the terminal wealth under the worst case, ``sqrt(exp(R* T) - 1)``."""
        return math.sqrt(math.expm1(self.R * self.T))


def ode_residuals(s: RobustStrategy, n: int = 10_000) -> tuple[float, float]:
    """Max central-difference residuals of ``K' = R* K`` (relative to lam) and ``chi' = R* / (4K)``."""
    t = np.linspace(0.0, s.T, n + 1)
    h = t[1] - t[0]
    K = np.array([s.K(u) for u in t])
    chi = np.array([s.chi(u) for u in t])
    dK = (K[2:] - K[:-2]) / (2 * h)
    dchi = (chi[2:] - chi[:-2]) / (2 * h)
    inner = K[1:-1]
    res_k = np.max(np.abs(dK - s.R * inner)) / s.lam
    res_chi = np.max(np.abs(dchi - s.R / (4.0 * inner)))
    return float(res_k), float(res_chi)


def pde_residual(s: RobustStrategy, t: float, mu: EmpiricalMeasure, h_star_fn=None) -> float:
    """``dv/dt + E_mu[H*(dv/dmu(x), d/dx dv/dmu(x))]`` for the closed-form value function.

    ``h_star_fn(p, M)`` defaults to ``-p^2 R* / (2M)``; pass the Hamiltonian
    module's ``h_star`` to check against it instead.
    """
    if h_star_fn is None:
        def h_star_fn(p, M):
            return -0.5 * p * p / M * s.R

    p = s.measure_derivative(t, mu, mu.samples)
    M = s.measure_hessian(t)
    ham = np.array([h_star_fn(float(pi), M) for pi in p])
    return float(s.dv_dt(t, mu) + mu.weights @ ham)
