"""Pointwise Hamiltonian of the robust mean-variance control problem.

``H(p, M, a, Sigma) = p a'b + M a'Sigma a / 2``.  The investor minimises over
the allocation ``a``, nature maximises over ``Sigma`` in the ambiguity set.
When the set is concave the game has a saddle point at the worst-case
covariance and ``a* = -(p/M) Sigma*^-1 b``.  These functions expose that
structure so it can be checked numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import spd_solve
from .ambiguity import (
    AMBIGUOUS_CORRELATION,
    UNCERTAIN_VOLATILITY,
    AmbiguitySet,
    WorstCase,
    minimize_on_box,
    worst_case,
)
from .errors import NonpositiveM


@dataclass(frozen=True, eq=False)
class HamiltonianContext:
    b: np.ndarray
    aset: AmbiguitySet
    worst: WorstCase

    @classmethod
    def build(cls, aset: AmbiguitySet, b) -> "HamiltonianContext":
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls(b, aset, worst_case(aset, b))


def _vec(ctx: HamiltonianContext, a) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != ctx.b.shape:
        raise ValueError(f"allocation must have shape {ctx.b.shape}, got {a.shape}")
    return a


def evaluate_H(ctx: HamiltonianContext, p: float, M: float, a, theta) -> float:
    a = _vec(ctx, a)
    sig = ctx.aset.gamma(theta)
    return float(p * (a @ ctx.b) + 0.5 * M * (a @ sig @ a))


def evaluate_H_completed(ctx: HamiltonianContext, p: float, M: float, a, theta) -> float:
    """Same value as ``evaluate_H`` written with the square completed in ``a``."""
    if M <= 0:
        raise NonpositiveM(f"M must be positive, got {M}")
    a = _vec(ctx, a)
    sig = ctx.aset.gamma(theta)
    ratio = spd_solve(sig, ctx.b)
    shifted = a + (p / M) * ratio
    return float(0.5 * M * (shifted @ sig @ shifted) - 0.5 * p * p / M * (ctx.b @ ratio))


def sigma_hat(ctx: HamiltonianContext, a) -> tuple[np.ndarray, bool]:
    """Parameter maximising ``a' gamma(theta) a``; second item flags ``a = 0``."""
    a = _vec(ctx, a)
    aset = ctx.aset
    if not np.any(a):
        return np.array(aset.upper), True
    if aset.kind == UNCERTAIN_VOLATILITY:
        return np.array(aset.upper), False
    if aset.kind == AMBIGUOUS_CORRELATION:
        theta = aset.upper if a[0] * a[1] >= 0 else aset.lower
        return np.array(theta), False
    theta = minimize_on_box(lambda th: -float(a @ aset.gamma(th) @ a), aset)
    return theta, False


def h_star(ctx: HamiltonianContext, p: float, M: float) -> tuple[float, np.ndarray]:
    """Saddle value ``-p^2 R* / (2M)`` and the minimising allocation."""
    if M <= 0:
        raise NonpositiveM(f"M must be positive, got {M}")
    w = ctx.worst
    value = -0.5 * p * p / M * w.risk_premium
    a_star = -(p / M) * np.asarray(w.variance_risk_ratio)
    return float(value), a_star


def isaacs_gap(ctx: HamiltonianContext, p: float, M: float, a_grid: np.ndarray, theta_grid: np.ndarray) -> tuple[float, float]:
    """(min over a of max over theta, max over theta of min over a) of H on grids."""
    a_grid = np.atleast_2d(a_grid)
    gammas = np.array([ctx.aset.gamma(th) for th in np.atleast_2d(theta_grid)])
    lin = p * (a_grid @ ctx.b)
    quad = 0.5 * M * np.einsum("ni,kij,nj->nk", a_grid, gammas, a_grid)
    table = lin[:, None] + quad
    return float(table.max(axis=1).min()), float(table.min(axis=0).max())


def saddle_point_violation(
    ctx: HamiltonianContext, n_pm: int = 200, n_a: int = 50, n_theta: int = 33, seed: int = 0
) -> float:
    """Largest violation of the two saddle-point inequalities on random samples.

    For random ``(p, M > 0)`` checks ``H(a*, theta) <= H*`` over a parameter
    grid and ``H* <= H(a, theta*)`` over random allocations.  A value ``<= 0``
    up to rounding means both hold.
    """
    rng = np.random.default_rng(seed)
    thetas = ctx.aset.grid(n_theta) if ctx.aset.q <= 3 else ctx.aset.sample(n_theta**2, rng)
    gammas = np.array([ctx.aset.gamma(th) for th in thetas])
    sig_star = np.asarray(ctx.worst.sigma_star)
    worst = -np.inf
    for _ in range(n_pm):
        p = rng.normal(scale=2.0)
        M = rng.uniform(0.05, 5.0)
        value, a_star = h_star(ctx, p, M)
        over_theta = p * (a_star @ ctx.b) + 0.5 * M * np.einsum("i,kij,j->k", a_star, gammas, a_star)
        radius = 3.0 * np.linalg.norm(a_star) + 1.0
        a = a_star + radius * rng.uniform(-1.0, 1.0, size=(n_a, ctx.b.size))
        over_a = p * (a @ ctx.b) + 0.5 * M * np.einsum("ni,ij,nj->n", a, sig_star, a)
        worst = max(worst, float(over_theta.max() - value), float(value - over_a.min()))
    return worst
