"""Covariance ambiguity sets and the worst-case (minimal risk premium) problem.

An ambiguity set is a map ``theta -> gamma(theta)`` from a box ``Theta`` into
symmetric positive definite matrices.  The worst case over the set is the
parameter minimising the squared market price of risk ``b' gamma(theta)^-1 b``.
Two families have closed-form worst cases:

* uncertain volatilities: ``gamma(theta) = diag(theta)`` with each variance in
  an interval; the worst case is the upper corner.
* ambiguous correlation between two assets with known volatilities; the worst
  case depends on where ``rho0_plus = min|beta| / max|beta|`` sits relative to
  the correlation interval.

Anything else goes through ``AmbiguitySet.custom`` and a grid + golden-section
search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._linalg import cholesky, spd_solve
from .errors import NumericNonConvergence, ThetaOutOfDomain

UNCERTAIN_VOLATILITY = "uncertain_volatility"
AMBIGUOUS_CORRELATION = "ambiguous_correlation"
CUSTOM = "custom"

GRID_POINTS = 33
GRID_BUDGET = GRID_POINTS**3
GOLDEN_TOL = 1e-10
MAX_SWEEPS = 500
CONCAVITY_ATOL = 1e-10

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AmbiguitySet:
    """Parametrised prior set of covariance matrices.

    Build instances with the classmethod constructors rather than directly.
    ``lower``/``upper`` bound the parameter box; for uncertain volatility the
    parameters are variances, for ambiguous correlation the single parameter
    is the correlation.
    """

    kind: str
    d: int
    lower: np.ndarray
    upper: np.ndarray
    sigma: Optional[tuple] = None
    gamma_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @classmethod
    def uncertain_volatility(cls, sigma_lo, sigma_hi) -> "AmbiguitySet":
        lo = np.atleast_1d(np.asarray(sigma_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(sigma_hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("volatility bounds must be 1-d and of equal length")
        if np.any(lo <= 0):
            raise ValueError("lower volatility bounds must be positive")
        if np.any(lo > hi) or not np.all(np.isfinite(hi)):
            raise ValueError("volatility bounds must satisfy 0 < lo <= hi < inf")
        return cls(UNCERTAIN_VOLATILITY, lo.size, _frozen(lo**2), _frozen(hi**2))

    @classmethod
    def ambiguous_correlation(cls, sigma1: float, sigma2: float, rho_lo: float, rho_hi: float) -> "AmbiguitySet":
        if sigma1 <= 0 or sigma2 <= 0:
            raise ValueError("marginal volatilities must be positive")
        if not (-1.0 < rho_lo <= rho_hi < 1.0):
            raise ValueError("correlation bounds must satisfy -1 < lo <= hi < 1")
        return cls(
            AMBIGUOUS_CORRELATION, 2, _frozen([rho_lo]), _frozen([rho_hi]), sigma=(float(sigma1), float(sigma2))
        )

    @classmethod
    def custom(cls, gamma, lower, upper, n_check: int = 64, seed: int = 0) -> "AmbiguitySet":
        """Wrap a caller-supplied ``gamma`` on the box ``[lower, upper]``.

        ``gamma`` must be concave in the matrix order.  Positive definiteness
        is checked at ``n_check`` random parameters (raises), concavity along
        midpoints of random pairs (warns only).
        """
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or np.any(lo > hi):
            raise ValueError("parameter box must satisfy lower <= upper")
        d = np.atleast_2d(gamma(lo.copy())).shape[0]
        aset = cls(CUSTOM, d, _frozen(lo), _frozen(hi), gamma_fn=gamma)
        rng = np.random.default_rng(seed)
        pts = aset.sample(n_check, rng)
        for theta in np.vstack([lo, hi, pts]):
            cholesky(aset.gamma(theta))
        worst = check_concavity(aset, n_pairs=n_check, rng=rng)
        if worst < -CONCAVITY_ATOL:
            warnings.warn(f"gamma does not look concave (midpoint defect {worst:.3e})", stacklevel=2)
        return aset

    @property
    def q(self) -> int:
        """Dimension of the parameter box."""
        return self.lower.size

    def check_theta(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape != (self.q,):
            raise ThetaOutOfDomain(f"expected parameter of length {self.q}, got shape {th.shape}")
        slack = 1e-12 * (1.0 + np.abs(self.lower) + np.abs(self.upper))
        if np.any(th < self.lower - slack) or np.any(th > self.upper + slack) or not np.all(np.isfinite(th)):
            raise ThetaOutOfDomain(f"{th} outside [{self.lower}, {self.upper}]")
        return th

    def gamma(self, theta) -> np.ndarray:
        th = self.check_theta(theta)
        if self.kind == UNCERTAIN_VOLATILITY:
            return np.diag(th)
        if self.kind == AMBIGUOUS_CORRELATION:
            s1, s2 = self.sigma
            c = s1 * s2 * th[0]
            return np.array([[s1 * s1, c], [c, s2 * s2]])
        return np.array(self.gamma_fn(th.copy()), dtype=float)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * rng.random((n, self.q))

    def grid(self, n: int) -> np.ndarray:
        """Tensor grid with ``n`` points per dimension, shape ``(n**q, q)``."""
        axes = [np.linspace(lo, hi, n) for lo, hi in zip(self.lower, self.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.q)


@dataclass(frozen=True)
class CorrelationCaseReport:
    beta: tuple
    rho0_plus: float
    rho0_minus: float
    case: str
    kappa_bar: tuple
    kappa_under: tuple
    theta_star: float


@dataclass(frozen=True, eq=False)
class WorstCase:
    theta_star: np.ndarray
    sigma_star: np.ndarray
    risk_premium: float
    variance_risk_ratio: np.ndarray
    degenerate: bool = False
    correlation_case: Optional[CorrelationCaseReport] = None


def _as_drift(aset: AmbiguitySet, b) -> np.ndarray:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (aset.d,):
        raise ValueError(f"drift must have length {aset.d}, got shape {b.shape}")
    return b


def risk_premium(aset: AmbiguitySet, b, theta) -> float:
    """``b' gamma(theta)^-1 b`` via a Cholesky solve."""
    b = _as_drift(aset, b)
    return float(b @ spd_solve(aset.gamma(theta), b))


def _kappa(aset: AmbiguitySet, b: np.ndarray, rho: float) -> tuple:
    s1, s2 = aset.sigma
    k1 = (b[0] / s1**2 - b[1] * rho / (s1 * s2)) / (1.0 - rho * rho)
    k2 = (b[1] / s2**2 - b[0] * rho / (s1 * s2)) / (1.0 - rho * rho)
    return (float(k1), float(k2))


def classify_correlation(aset: AmbiguitySet, b) -> CorrelationCaseReport:
    """Locate the two-asset ambiguous-correlation problem among the six cases.

    Cases ``I.*`` have ``beta1 * beta2 > 0`` and compare the interval with
    ``rho0_plus``; cases ``II.*'`` have ``beta1 * beta2 <= 0`` and compare with
    ``rho0_minus``.  Suffix 1 means the interval lies strictly below the
    critical correlation, 2 strictly above, 3 that it contains it.
    """
    if aset.kind != AMBIGUOUS_CORRELATION:
        raise ValueError("classify_correlation needs an ambiguous-correlation set")
    b = _as_drift(aset, b)
    s1, s2 = aset.sigma
    beta1, beta2 = b[0] / s1, b[1] / s2
    big = max(abs(beta1), abs(beta2))
    if big == 0.0:
        raise ValueError("case analysis undefined for zero drift")
    rho0_plus = min(abs(beta1), abs(beta2)) / big
    rho0_minus = -rho0_plus
    lo, hi = float(aset.lower[0]), float(aset.upper[0])

    if beta1 * beta2 > 0:
        crit, branch, mark = rho0_plus, "I", ""
    else:
        crit, branch, mark = rho0_minus, "II", "'"
    if hi < crit:
        sub, theta = 1, hi
    elif lo > crit:
        sub, theta = 2, lo
    else:
        sub, theta = 3, crit
        # rho0 in the interval forces rho0 < 1, i.e. |beta1| != |beta2|
        assert beta1 * beta1 != beta2 * beta2

    return CorrelationCaseReport(
        beta=(float(beta1), float(beta2)),
        rho0_plus=rho0_plus,
        rho0_minus=rho0_minus,
        case=f"{branch}.{sub}{mark}",
        kappa_bar=_kappa(aset, b, hi),
        kappa_under=_kappa(aset, b, lo),
        theta_star=theta,
    )


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL, max_iter: int = 500) -> float:
    """Minimiser of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = lo, hi
    if b - a <= tol:
        return 0.5 * (a + b)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise NumericNonConvergence("golden-section search exceeded its iteration budget")
    x = 0.5 * (a + b)
    # endpoints are legitimate minimisers of a monotone f
    return min((lo, x, hi), key=f)


def minimize_on_box(f, aset: AmbiguitySet, tol: float = GOLDEN_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Grid search followed by coordinate-wise golden-section refinement.

    The first sweep brackets each coordinate between the neighbours of the
    best grid point; later sweeps use the whole coordinate range.
    """
    q = aset.q
    n = GRID_POINTS if q <= 3 else max(2, int(GRID_BUDGET ** (1.0 / q)))
    pts = aset.grid(n)
    vals = np.array([f(p) for p in pts])
    x = pts[int(np.argmin(vals))].copy()
    spacing = (aset.upper - aset.lower) / (n - 1)
    lower, upper = np.asarray(aset.lower), np.asarray(aset.upper)

    for sweep in range(max_sweeps):
        x_old = x.copy()
        for i in range(q):
            if sweep == 0:
                lo, hi = max(lower[i], x[i] - spacing[i]), min(upper[i], x[i] + spacing[i])
            else:
                lo, hi = lower[i], upper[i]

            def line(t, i=i):
                y = x.copy()
                y[i] = t
                return f(y)

            x[i] = golden_section(line, lo, hi, tol=tol)
        if np.max(np.abs(x - x_old)) <= tol and sweep > 0:
            return x
    raise NumericNonConvergence(f"coordinate search did not settle within {max_sweeps} sweeps")


def worst_case(aset: AmbiguitySet, b) -> WorstCase:
    """Parameter minimising the risk premium over the ambiguity set."""
    b = _as_drift(aset, b)

    if not np.any(b):
        theta = aset.upper.copy()
        sig = aset.gamma(theta)
        cholesky(sig)
        return WorstCase(_frozen(theta), _frozen(sig), 0.0, _frozen(np.zeros(aset.d)), degenerate=True)

    if aset.kind == UNCERTAIN_VOLATILITY:
        theta = np.array(aset.upper)
        ratio = b / theta
        return WorstCase(_frozen(theta), _frozen(np.diag(theta)), float(b @ ratio), _frozen(ratio))

    if aset.kind == AMBIGUOUS_CORRELATION:
        report = classify_correlation(aset, b)
        theta = np.array([report.theta_star])
        sig = aset.gamma(theta)
        if report.case.endswith(("3", "3'")):
            s1, s2 = aset.sigma
            beta1, beta2 = report.beta
            if beta1 * beta1 > beta2 * beta2:
                ratio = np.array([b[0] / s1**2, 0.0])
            else:
                ratio = np.array([0.0, b[1] / s2**2])
            prem = max(beta1 * beta1, beta2 * beta2)
        else:
            ratio = spd_solve(sig, b)
            prem = float(b @ ratio)
        return WorstCase(_frozen(theta), _frozen(sig), float(prem), _frozen(ratio), correlation_case=report)

    theta = minimize_on_box(lambda th: risk_premium(aset, b, th), aset)
    sig = aset.gamma(theta)
    ratio = spd_solve(sig, b)
    return WorstCase(_frozen(theta), _frozen(sig), float(b @ ratio), _frozen(ratio))


def check_concavity(aset: AmbiguitySet, n_pairs: int = 64, rng: Optional[np.random.Generator] = None) -> float:
    """Smallest midpoint defect ``e_i'[gamma(mid) - (gamma(t1) + gamma(t2))/2] e_i``.

    Non-negative (up to rounding) for a concave parametrisation.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    t1, t2 = aset.sample(n_pairs, rng), aset.sample(n_pairs, rng)
    worst = math.inf
    for a, c in zip(t1, t2):
        gap = aset.gamma(0.5 * (a + c)) - 0.5 * (aset.gamma(a) + aset.gamma(c))
        worst = min(worst, float(np.diag(gap).min()))
    return worst


__all__ = [
    "AmbiguitySet",
    "CorrelationCaseReport",
    "WorstCase",
    "risk_premium",
    "worst_case",
    "classify_correlation",
    "golden_section",
    "minimize_on_box",
    "check_concavity",
]
