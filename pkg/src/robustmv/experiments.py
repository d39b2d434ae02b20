"""Config-driven runs: worst-case reports, frontier sweeps, Monte Carlo tables."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .ambiguity import AmbiguitySet, WorstCase, worst_case
from .config import (
    AmbiguousCorrelation,
    ConstantMarket,
    ExperimentConfig,
    HestonMarket,
    StochCorrMarket,
    parse_config,
)
from .errors import ConfigError
from .frontier import FrontierContext, frontier_return, lambda_of_vartheta, sharpe_lower_bound
from .hamiltonian import HamiltonianContext, saddle_point_violation
from .simulation import (
    ConstantCovarianceModel,
    FeedbackStrategy,
    HestonBoundedModel,
    SharpeEstimate,
    StochCorrModel,
    estimate_sharpe,
    misspecified_strategy,
    robust_feedback,
    save_samples,
    simulate_terminal_wealth,
)
from .strategy import RobustStrategy, ode_residuals

log = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "label", "param", "analytic_excess", "mc_mean", "mc_std",
    "sharpe", "ci_lo", "ci_hi", "sharpe_lower_bound",
]
FRONTIER_COLUMNS = ["vartheta", "return", "lambda", "sharpe_bound"]
PLOT_COLUMNS = ["param", "sharpe", "ci_lo", "ci_hi", "robust_sharpe"]
QUICK_PATHS = 50_000


# --------------------------------------------------------------------------
# building domain objects from config
# --------------------------------------------------------------------------


def _domain(fn):
    """Turn domain-invariant ValueErrors raised while building objects into ConfigError."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_domain
def build_ambiguity(cfg: ExperimentConfig) -> AmbiguitySet:
    amb = cfg.ambiguity
    if isinstance(amb, AmbiguousCorrelation):
        return AmbiguitySet.ambiguous_correlation(amb.sigma[0], amb.sigma[1], amb.rho_lo, amb.rho_hi)
    return AmbiguitySet.uncertain_volatility(amb.sigma_lo, amb.sigma_hi)


@_domain
def build_market(cfg: ExperimentConfig):
    m = cfg.market
    if m is None:
        raise ConfigError("this command needs a 'market' section")
    if isinstance(m, HestonMarket):
        return HestonBoundedModel(
            b=cfg.b[0], kappa=m.kappa, eta=m.eta, sigma0=m.sigma0, sigma_lo=m.sigma_lo,
            sigma_hi=m.sigma_hi, sigma_inf=m.sigma_inf, rho=m.rho,
        )
    if isinstance(m, StochCorrMarket):
        return StochCorrModel(
            b=tuple(cfg.b), sigma=tuple(m.sigma), kappa=m.kappa, eta=m.eta,
            rho0=m.rho0, rho_inf=m.rho_inf, rho_hi=m.rho_hi,
        )
    assert isinstance(m, ConstantMarket)
    return ConstantCovarianceModel(np.array(cfg.b), np.array(m.cov))


@_domain
def build_robust(cfg: ExperimentConfig) -> RobustStrategy:
    inv = cfg.investor
    return RobustStrategy.build(build_ambiguity(cfg), cfg.b, inv.lam, inv.x0, inv.T)


@_domain
def build_strategies(cfg: ExperimentConfig) -> List[FeedbackStrategy]:
    inv = cfg.investor
    out = []
    if cfg.strategies.robust:
        out.append(robust_feedback(build_robust(cfg)))
    for s in cfg.strategies.misspecified_sigma:
        out.append(misspecified_strategy(cfg.b, inv.lam, inv.x0, inv.T, sigma_tilde=s))
    sigma = cfg.market.sigma if isinstance(cfg.market, StochCorrMarket) else (1.0, 1.0)
    for r in cfg.strategies.misspecified_rho:
        out.append(misspecified_strategy(cfg.b, inv.lam, inv.x0, inv.T, rho_tilde=r, sigma=sigma))
    if not out:
        raise ConfigError("no strategies selected")
    return out


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------


def _fmt(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{v:.{digits}g}"


def _csv_text(columns: List[str], rows: List[dict], digits: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c), digits) for c in columns])
    return buf.getvalue()


def _write_pair(out_dir: Path, stem: str, columns: List[str], rows: List[dict]) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / f"{stem}.csv"
    raw = out_dir / f"{stem}-raw.csv"
    table.write_text(_csv_text(columns, rows, 6))
    raw.write_text(_csv_text(columns, rows, 17))
    return [table, raw]


def describe_worst_case(aset: AmbiguitySet, worst: WorstCase) -> str:
    if worst.degenerate:
        return "degenerate: R* = 0 (zero drift, the optimal strategy never trades)"
    if worst.correlation_case is not None:
        rep = worst.correlation_case
        return (
            f"case {rep.case}, θ* = {rep.theta_star:.4f}, R* = {worst.risk_premium:.4f}"
            f" (rho0+ = {rep.rho0_plus:.4f}, beta = ({rep.beta[0]:.4g}, {rep.beta[1]:.4g}))"
        )
    theta = ", ".join(f"{t:.4f}" for t in worst.theta_star)
    if aset.kind == "uncertain_volatility":
        return f"θ* = σ̄² = {theta}, R* = {worst.risk_premium:.5f}"
    return f"θ* = ({theta}), R* = {worst.risk_premium:.5f}"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def run_worst_case(cfg: ExperimentConfig) -> str:
    aset = build_ambiguity(cfg)
    worst = worst_case(aset, cfg.b)
    lines = [describe_worst_case(aset, worst)]
    lines.append("Σ* = " + np.array2string(np.asarray(worst.sigma_star), precision=6))
    lines.append("(Σ*)⁻¹b = " + np.array2string(np.asarray(worst.variance_risk_ratio), precision=6))
    if not worst.degenerate:
        fc = FrontierContext(cfg.investor.x0, cfg.investor.T, worst.risk_premium)
        lines.append(f"Sharpe lower bound = {sharpe_lower_bound(fc):.4f}")
    return "\n".join(lines)


def frontier_rows(cfg: ExperimentConfig, grid: Optional[List[float]] = None) -> List[dict]:
    worst = worst_case(build_ambiguity(cfg), cfg.b)
    fc = FrontierContext(cfg.investor.x0, cfg.investor.T, worst.risk_premium)
    grid = cfg.frontier.vartheta if grid is None else grid
    bound = sharpe_lower_bound(fc)
    return [
        {"vartheta": v, "return": frontier_return(fc, v), "lambda": lambda_of_vartheta(fc, v), "sharpe_bound": bound}
        for v in grid
    ]


def run_frontier(cfg: ExperimentConfig, out_dir=None, grid=None) -> List[Path]:
    rows = frontier_rows(cfg, grid)
    out = Path(out_dir or cfg.output.dir)
    return _write_pair(out, f"{cfg.output.prefix}-frontier", FRONTIER_COLUMNS, rows)


@dataclass
class ExperimentResult:
    rows: List[dict]
    estimates: Dict[str, SharpeEstimate]
    samples: Dict[str, np.ndarray] = field(repr=False)
    files: List[Path] = field(default_factory=list)


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> ExperimentResult:
    model = build_market(cfg)
    strategies = build_strategies(cfg)
    robust = build_robust(cfg)
    bound = sharpe_lower_bound(FrontierContext(cfg.investor.x0, cfg.investor.T, robust.R)) if not robust.worst.degenerate else 0.0
    sim = cfg.simulation
    log.info("simulating %d paths x %d steps for %d strategies", sim.n_paths, sim.n_steps, len(strategies))
    samples = simulate_terminal_wealth(
        model, strategies, cfg.investor.x0, cfg.investor.T, sim.n_steps, sim.n_paths, sim.seed,
        block_size=sim.block_size, workers=sim.workers,
    )
    rows, estimates = [], {}
    for s in strategies:
        est = estimate_sharpe(samples[s.label], cfg.investor.x0)
        estimates[s.label] = est
        rows.append({
            "label": s.label,
            "param": s.param,
            "analytic_excess": s.analytic_excess,
            "mc_mean": est.mean_excess + cfg.investor.x0,
            "mc_std": est.std,
            "sharpe": est.sharpe,
            "ci_lo": est.ci95[0],
            "ci_hi": est.ci95[1],
            "sharpe_lower_bound": bound,
        })
    result = ExperimentResult(rows, estimates, samples)
    if write:
        out = Path(out_dir or cfg.output.dir)
        result.files += _write_pair(out, cfg.output.prefix, RESULT_COLUMNS, rows)
        robust_sharpe = estimates["robust"].sharpe if "robust" in estimates else None
        plot = [
            {"param": r["param"], "sharpe": r["sharpe"], "ci_lo": r["ci_lo"], "ci_hi": r["ci_hi"], "robust_sharpe": robust_sharpe}
            for r in rows if r["param"] is not None
        ]
        result.files += _write_pair(out, f"{cfg.output.prefix}-plot", PLOT_COLUMNS, plot)
        if cfg.output.save_samples:
            for s in strategies:
                path = out / f"{cfg.output.prefix}-{_slug(s.label)}.bin"
                save_samples(path, samples[s.label])
                result.files.append(path)
    return result


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in ".-" else "_" for c in label)


def diagnostics(cfg: ExperimentConfig, seed: int = 0) -> str:
    aset = build_ambiguity(cfg)
    ctx = HamiltonianContext.build(aset, cfg.b)
    lines = [describe_worst_case(aset, ctx.worst)]
    if ctx.worst.degenerate:
        lines.append("warning: degenerate: R* = 0, saddle-point and ODE checks are trivial")
    lines.append(f"saddle-point max violation: {saddle_point_violation(ctx, n_pm=50, n_a=20, seed=seed):.3e}")
    inv = cfg.investor
    strat = RobustStrategy(inv.lam, inv.x0, inv.T, cfg.b, ctx.worst)
    rk, rc = ode_residuals(strat)
    lines.append(f"ODE residual max: K {rk:.3e} (relative to λ), χ {rc:.3e}")
    lines.append(f"K(0) = {strat.K(0.0):.6g}, χ(0) = {strat.chi(0.0):.6g}, V0 = {strat.optimal_cost():.6g}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# table presets
# --------------------------------------------------------------------------

_HESTON = {"kind": "heston_bounded", "kappa": 2.0, "eta": 1.0, "sigma0": 0.3, "sigma_lo": 0.15,
           "sigma_hi": 0.45, "sigma_inf": 0.3, "rho": -0.7}


def table_config(table: int) -> ExperimentConfig:
    """Preset configuration for Sharpe experiment 2, 3 or 5."""
    investor = {"lam": 5.0, "x0": 0.0, "T": 1.0}
    if table in (2, 3):
        market = dict(_HESTON)
        if table == 3:
            market.update(kappa=5.0, eta=0.25)
        data = {
            "name": f"table{table}",
            "b": [0.2],
            "ambiguity": {"kind": "uncertain_volatility", "sigma_lo": [0.15], "sigma_hi": [0.45]},
            "market": market,
            "investor": investor,
            "strategies": {"robust": True, "misspecified_sigma": [0.15, 0.2, 0.3, 0.45, 0.5]},
        }
    elif table == 5:
        data = {
            "name": "table5",
            "b": [1.5, 0.5],
            "ambiguity": {"kind": "ambiguous_correlation", "sigma": [1.0, 1.0], "rho_lo": 0.0, "rho_hi": 0.95},
            "market": {"kind": "stoch_corr", "sigma": [1.0, 1.0], "kappa": 5.0, "eta": 0.2,
                       "rho0": 0.7, "rho_inf": 0.7, "rho_hi": 0.95},
            "investor": investor,
            "strategies": {"robust": True, "misspecified_rho": [0.1, 1.0 / 3.0, 0.7, 0.8]},
        }
    else:
        raise ConfigError(f"no preset for table {table}; choose 2, 3 or 5")
    data["output"] = {"dir": "results", "prefix": f"table{table}"}
    return parse_config(data)


def with_overrides(cfg: ExperimentConfig, seed=None, paths=None, steps=None, out=None, quick=False) -> ExperimentConfig:
    data = cfg.model_dump()
    sim = data["simulation"]
    if quick:
        sim["n_paths"] = QUICK_PATHS
    if paths is not None:
        sim["n_paths"] = paths
    if steps is not None:
        sim["n_steps"] = steps
    if seed is not None:
        sim["seed"] = seed
    if out is not None:
        data["output"]["dir"] = str(out)
    return parse_config(data)


def format_table(result: ExperimentResult) -> str:
    head = f"{'strategy':<26}{'excess':>10}{'mc std':>10}{'sharpe':>9}  {'95% CI':<20}{'S_lower':>9}"
    lines = [head, "-" * len(head)]
    for r in result.rows:
        ci = f"[{r['ci_lo']:.4f}, {r['ci_hi']:.4f}]"
        lines.append(
            f"{r['label']:<26}{r['analytic_excess']:>10.5f}{r['mc_std']:>10.5f}{r['sharpe']:>9.4f}  {ci:<20}"
            f"{r['sharpe_lower_bound']:>9.4f}"
        )
    return "\n".join(lines)


__all__ = [
    "build_ambiguity", "build_market", "build_robust", "build_strategies", "run_worst_case",
    "frontier_rows", "run_frontier", "run_experiment", "diagnostics", "table_config",
    "with_overrides", "format_table", "ExperimentResult", "describe_worst_case",
]
