"""Monte Carlo engine for true-model markets and feedback wealth strategies.

Markets are simulated with an Euler scheme on a uniform grid.  Bounded state
variables (variance in the Heston-type model, correlation in the two-asset
model) follow Wright-Fisher-type dynamics; the square-root argument is floored
at zero before each step and the state is projected back onto its interval
after it.

Every path draws its Gaussian increments from its own Philox stream keyed on
``(path index, seed)``, so a path's trajectory does not depend on block size,
worker count or scheduling.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

from ._linalg import cholesky
from .ambiguity import AmbiguitySet
from .errors import InvalidGrid, NonFiniteWealth, TooFewSamples, ZeroVariance
from .strategy import RobustStrategy

DEFAULT_STEPS_PER_YEAR = 252
DEFAULT_BLOCK = 4096
Z95 = 1.959963984540054


# --------------------------------------------------------------------------
# market models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HestonBoundedModel:
    """One asset whose variance is a Wright-Fisher diffusion on ``[sigma_lo^2, sigma_hi^2]``."""

    b: float
    kappa: float
    eta: float
    sigma0: float
    sigma_lo: float
    sigma_hi: float
    sigma_inf: float
    rho: float

    d = 1
    n_noise = 2

    def __post_init__(self):
        if not 0 < self.sigma_lo <= self.sigma_hi < math.inf:
            raise ValueError("need 0 < sigma_lo <= sigma_hi < inf")
        if not (self.sigma_lo <= self.sigma0 <= self.sigma_hi and self.sigma_lo <= self.sigma_inf <= self.sigma_hi):
            raise ValueError("sigma0 and sigma_inf must lie in [sigma_lo, sigma_hi]")
        if self.kappa < 0 or self.eta < 0 or not -1 <= self.rho <= 1:
            raise ValueError("need kappa >= 0, eta >= 0, -1 <= rho <= 1")

    def _simulate(self, z: np.ndarray, dt: float):
        n, n_steps, _ = z.shape
        lo2, hi2, inf2 = self.sigma_lo**2, self.sigma_hi**2, self.sigma_inf**2
        perp = math.sqrt(1.0 - self.rho * self.rho)
        sdt = math.sqrt(dt)
        var = np.empty((n, n_steps + 1))
        ret = np.empty((n, n_steps, 1))
        v = np.full(n, self.sigma0**2)
        var[:, 0] = v
        for k in range(n_steps):
            z1, z2 = z[:, k, 0], z[:, k, 1]
            ret[:, k, 0] = self.b * dt + np.sqrt(v) * sdt * z1
            arg = np.maximum((v - lo2) * (hi2 - v), 0.0)
            v = v + self.kappa * (inf2 - v) * dt + self.eta * np.sqrt(arg) * sdt * (self.rho * z1 + perp * z2)
            v = np.clip(v, lo2, hi2)
            var[:, k + 1] = v
        return ret, var


@dataclass(frozen=True)
class StochCorrModel:
    """Two assets with known volatilities and a Wright-Fisher correlation on ``[0, rho_hi]``."""

    b: tuple
    sigma: tuple
    kappa: float
    eta: float
    rho0: float
    rho_inf: float
    rho_hi: float

    d = 2
    n_noise = 3

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        object.__setattr__(self, "sigma", tuple(float(x) for x in self.sigma))
        if len(self.b) != 2 or len(self.sigma) != 2 or min(self.sigma) <= 0:
            raise ValueError("need two drifts and two positive volatilities")
        if not 0 < self.rho_hi < 1:
            raise ValueError("need 0 < rho_hi < 1")
        if not (0 <= self.rho0 <= self.rho_hi and 0 <= self.rho_inf <= self.rho_hi):
            raise ValueError("rho0 and rho_inf must lie in [0, rho_hi]")
        if self.kappa < 0 or self.eta < 0:
            raise ValueError("need kappa >= 0, eta >= 0")

    def _simulate(self, z: np.ndarray, dt: float):
        n, n_steps, _ = z.shape
        (b1, b2), (s1, s2) = self.b, self.sigma
        sdt = math.sqrt(dt)
        corr = np.empty((n, n_steps + 1))
        ret = np.empty((n, n_steps, 2))
        r = np.full(n, float(self.rho0))
        corr[:, 0] = r
        for k in range(n_steps):
            z1, z2, z3 = z[:, k, 0], z[:, k, 1], z[:, k, 2]
            ret[:, k, 0] = b1 * dt + s1 * (np.sqrt(1.0 - r * r) * z1 + r * z2) * sdt
            ret[:, k, 1] = b2 * dt + s2 * z2 * sdt
            arg = np.maximum(r * (self.rho_hi - r), 0.0)
            r = r + self.kappa * (self.rho_inf - r) * dt + self.eta * np.sqrt(arg) * sdt * z3
            r = np.clip(r, 0.0, self.rho_hi)
            corr[:, k + 1] = r
        return ret, corr


@dataclass(frozen=True, eq=False)
class ConstantCovarianceModel:
    """Multi-asset Black-Scholes returns with a fixed covariance matrix."""

    b: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (b.size, b.size):
            raise ValueError("covariance shape does not match drift")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", cholesky(cov))

    @property
    def d(self) -> int:
        return self.b.size

    @property
    def n_noise(self) -> int:
        return self.b.size

    def _simulate(self, z: np.ndarray, dt: float):
        ret = self.b * dt + math.sqrt(dt) * np.einsum("ij,nkj->nki", self._chol, z)
        return ret, None


Model = Union[HestonBoundedModel, StochCorrModel, ConstantCovarianceModel]


# --------------------------------------------------------------------------
# paths
# --------------------------------------------------------------------------


def path_normals(seed: int, path_ids: Sequence[int], n_steps: int, n_noise: int) -> np.ndarray:
    """Standard normals of shape ``(len(path_ids), n_steps, n_noise)``, one Philox stream per path."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    out = np.empty((len(path_ids), n_steps, n_noise))
    for row, pid in enumerate(path_ids):
        gen = np.random.Generator(np.random.Philox(key=np.array([int(pid), seed], dtype=np.uint64)))
        out[row] = gen.standard_normal((n_steps, n_noise))
    return out


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Simulated return increments and latent state on a uniform time grid.

    ``returns[i, k]`` is the per-unit-capital return of each asset over step
    ``k`` of path ``i``; ``state`` holds the variance or correlation at the
    grid points (``None`` for constant-covariance markets).
    """

    times: np.ndarray
    returns: np.ndarray
    state: Optional[np.ndarray]
    path_offset: int = 0

    @property
    def n_paths(self) -> int:
        return self.returns.shape[0]

    @property
    def n_steps(self) -> int:
        return self.returns.shape[1]

    @property
    def d(self) -> int:
        return self.returns.shape[2]


def _check_grid(T: float, n_steps: int, n_paths: int):
    if not T > 0 or int(n_steps) != n_steps or n_steps < 1 or int(n_paths) != n_paths or n_paths < 0:
        raise InvalidGrid(f"invalid grid T={T}, n_steps={n_steps}, n_paths={n_paths}")


def simulate_paths(model: Model, T: float, n_steps: int, n_paths: int, seed: int, path_offset: int = 0) -> PathEnsemble:
    _check_grid(T, n_steps, n_paths)
    dt = T / n_steps
    z = path_normals(seed, range(path_offset, path_offset + n_paths), n_steps, model.n_noise)
    ret, state = model._simulate(z, dt)
    return PathEnsemble(np.linspace(0.0, T, n_steps + 1), ret, state, path_offset)


def simulate_heston_paths(model: HestonBoundedModel, T: float, n_steps: int, n_paths: int, seed: int, path_offset: int = 0) -> PathEnsemble:
    return simulate_paths(model, T, n_steps, n_paths, seed, path_offset)


def simulate_stochcorr_paths(model: StochCorrModel, T: float, n_steps: int, n_paths: int, seed: int, path_offset: int = 0) -> PathEnsemble:
    return simulate_paths(model, T, n_steps, n_paths, seed, path_offset)


# --------------------------------------------------------------------------
# strategies and wealth
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeedbackStrategy:
    """Allocation rule ``(t, wealth array) -> allocation array of shape (n, d)``."""

    label: str
    control: Callable[[float, np.ndarray], np.ndarray]
    d: int
    analytic_excess: Optional[float] = None
    param: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.control(t, x)


def robust_feedback(strategy: RobustStrategy, label: str = "robust", param: Optional[float] = None) -> FeedbackStrategy:
    return FeedbackStrategy(
        label=label,
        control=strategy.optimal_control,
        d=strategy.b.size,
        analytic_excess=strategy.expected_terminal_wealth() - strategy.x0,
        param=param,
        meta={"risk_premium": strategy.R},
    )


def misspecified_strategy(
    b,
    lam: float,
    x0: float,
    T: float,
    sigma_tilde: Optional[float] = None,
    rho_tilde: Optional[float] = None,
    sigma: Sequence[float] = (1.0, 1.0),
    label: Optional[str] = None,
) -> FeedbackStrategy:
    """Classical mean-variance feedback of an investor certain of one covariance.

    Exactly one of ``sigma_tilde`` (single asset, believed volatility) and
    ``rho_tilde`` (two assets with volatilities ``sigma``, believed
    correlation) must be given.  The investor is the robust investor over a
    singleton ambiguity set, so a belief equal to the worst case reproduces the
    robust map bit for bit.
    """
    if (sigma_tilde is None) == (rho_tilde is None):
        raise ValueError("give exactly one of sigma_tilde and rho_tilde")
    if sigma_tilde is not None:
        if not sigma_tilde > 0:
            raise ValueError(f"misspecified volatility must be positive, got {sigma_tilde}")
        aset = AmbiguitySet.uncertain_volatility([sigma_tilde], [sigma_tilde])
        param, label = sigma_tilde, label or f"misspecified sigma={sigma_tilde:g}"
    else:
        if not -1 < rho_tilde < 1:
            raise ValueError(f"misspecified correlation must lie in (-1, 1), got {rho_tilde}")
        aset = AmbiguitySet.ambiguous_correlation(sigma[0], sigma[1], rho_tilde, rho_tilde)
        param, label = rho_tilde, label or f"misspecified rho={rho_tilde:g}"
    strat = RobustStrategy.build(aset, b, lam, x0, T)
    return robust_feedback(strat, label=label, param=param)


def replay_wealth(paths: PathEnsemble, strategy: FeedbackStrategy, x0: float) -> np.ndarray:
    """Terminal wealth per path; controls are evaluated at the left end of each step."""
    if strategy.d != paths.d:
        raise ValueError(f"strategy dimension {strategy.d} does not match market dimension {paths.d}")
    x = np.full(paths.n_paths, float(x0))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(paths.n_steps):
            alloc = strategy(paths.times[k], x)
            x = x + np.sum(alloc * paths.returns[:, k, :], axis=1)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise NonFiniteWealth(paths.path_offset + int(bad[0]))
    return x


def simulate_terminal_wealth(
    model: Model,
    strategies: Sequence[FeedbackStrategy],
    x0: float,
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> Dict[str, np.ndarray]:
    """Replay every strategy on a common set of simulated paths.

    Paths are generated block by block to bound memory; each block writes a
    disjoint slice of the output, so results are identical for any
    ``workers``.
    """
    _check_grid(T, n_steps, n_paths)
    labels = [s.label for s in strategies]
    if len(set(labels)) != len(labels):
        raise ValueError("strategy labels must be unique")
    out = {s.label: np.empty(n_paths) for s in strategies}

    def run_block(start: int):
        stop = min(start + block_size, n_paths)
        paths = simulate_paths(model, T, n_steps, stop - start, seed, path_offset=start)
        for s in strategies:
            out[s.label][start:stop] = replay_wealth(paths, s, x0)

    starts = range(0, n_paths, block_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, starts))
    else:
        for start in starts:
            run_block(start)
    return out


# --------------------------------------------------------------------------
# Sharpe ratio
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SharpeEstimate:
    n_paths: int
    mean_excess: float
    std: float
    sharpe: float
    ci95: tuple
    se: float
    method: str = "delta"


def _sharpe_se_delta(x: np.ndarray, sharpe: float) -> float:
    c = x - x.mean()
    v = np.mean(c**2)
    m3 = np.mean(c**3)
    m4 = np.mean(c**4)
    var = (1.0 + sharpe**2 * (m4 / v**2 - 1.0) / 4.0 - sharpe * m3 / v**1.5) / x.size
    return math.sqrt(max(var, 0.0))


def estimate_sharpe(samples, x0: float, method: str = "delta", n_boot: int = 1000, seed: int = 0) -> SharpeEstimate:
    """Sharpe ratio of terminal wealth samples with a 95% confidence interval.

    ``method="delta"`` propagates the sampling error of (mean, variance)
    using the sample third and fourth central moments.  ``method="bootstrap"``
    uses ``n_boot`` resamples and a normal interval from their spread.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise TooFewSamples("need at least two samples")
    mean_excess = float(x.mean() - x0)
    std = float(x.std(ddof=1))
    if std == 0.0 or std <= 1e-14 * max(1.0, abs(float(x.mean()))):
        raise ZeroVariance("terminal wealth has zero sample variance")
    sharpe = mean_excess / std
    if method == "delta":
        se = _sharpe_se_delta(x, sharpe)
    elif method == "bootstrap":
        rng = np.random.default_rng(seed)
        boots = np.empty(n_boot)
        for i in range(n_boot):
            xb = x[rng.integers(0, x.size, x.size)]
            boots[i] = (xb.mean() - x0) / xb.std(ddof=1)
        se = float(boots.std(ddof=1))
    else:
        raise ValueError(f"unknown CI method {method!r}")
    return SharpeEstimate(x.size, mean_excess, std, sharpe, (sharpe - Z95 * se, sharpe + Z95 * se), se, method)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


def save_samples(path, samples) -> None:
    """Write samples as raw little-endian float64 (``.bin``) or one-column CSV."""
    x = np.asarray(samples, dtype="<f8").ravel()
    path = str(path)
    if path.endswith(".csv"):
        with open(path, "w", newline="") as fh:
            fh.write("terminal_wealth\n")
            for v in x.tolist():
                fh.write(f"{v!r}\n")
    else:
        x.tofile(path)


def load_samples(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".csv"):
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1)
    return np.fromfile(path, dtype="<f8")


def export_paths_csv(paths: PathEnsemble, path) -> None:
    """Time-major long table: one row per (time step, path)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "path", "state"] + [f"ret_{j + 1}" for j in range(paths.d)])
        for k in range(paths.n_steps + 1):
            for i in range(paths.n_paths):
                state = "" if paths.state is None else repr(float(paths.state[i, k]))
                rets = [repr(float(r)) for r in paths.returns[i, k]] if k < paths.n_steps else [""] * paths.d
                w.writerow([repr(float(paths.times[k])), paths.path_offset + i, state] + rets)
