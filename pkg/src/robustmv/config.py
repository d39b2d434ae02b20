"""Experiment configuration: YAML on disk, pydantic models in memory."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HestonMarket(_Strict):
    kind: Literal["heston_bounded"] = "heston_bounded"
    kappa: float = Field(ge=0)
    eta: float = Field(ge=0)
    sigma0: float = Field(gt=0)
    sigma_lo: float = Field(gt=0)
    sigma_hi: float = Field(gt=0)
    sigma_inf: float = Field(gt=0)
    rho: float = Field(ge=-1, le=1)

    @property
    def d(self) -> int:
        return 1


class StochCorrMarket(_Strict):
    kind: Literal["stoch_corr"] = "stoch_corr"
    sigma: List[float] = [1.0, 1.0]
    kappa: float = Field(ge=0)
    eta: float = Field(ge=0)
    rho0: float
    rho_inf: float
    rho_hi: float

    @property
    def d(self) -> int:
        return 2


class ConstantMarket(_Strict):
    kind: Literal["constant_sigma"] = "constant_sigma"
    cov: List[List[float]]

    @property
    def d(self) -> int:
        return len(self.cov)


Market = Annotated[Union[HestonMarket, StochCorrMarket, ConstantMarket], Field(discriminator="kind")]


class UncertainVolatility(_Strict):
    kind: Literal["uncertain_volatility"] = "uncertain_volatility"
    sigma_lo: List[float]
    sigma_hi: List[float]

    @property
    def d(self) -> int:
        return len(self.sigma_hi)


class AmbiguousCorrelation(_Strict):
    kind: Literal["ambiguous_correlation"] = "ambiguous_correlation"
    sigma: List[float] = [1.0, 1.0]
    rho_lo: float
    rho_hi: float

    @property
    def d(self) -> int:
        return 2


Ambiguity = Annotated[Union[UncertainVolatility, AmbiguousCorrelation], Field(discriminator="kind")]


class Investor(_Strict):
    lam: float = Field(gt=0)
    x0: float = 0.0
    T: float = Field(default=1.0, gt=0)


class Strategies(_Strict):
    robust: bool = True
    misspecified_sigma: List[float] = []
    misspecified_rho: List[float] = []


class Simulation(_Strict):
    n_paths: int = Field(default=500_000, ge=2)
    n_steps: int = Field(default=252, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)
    block_size: int = Field(default=4096, ge=1)


class Frontier(_Strict):
    vartheta: List[float] = []


class Output(_Strict):
    dir: str = "results"
    prefix: str = "experiment"
    save_samples: bool = False


class ExperimentConfig(_Strict):
    name: str = "experiment"
    b: List[float]
    ambiguity: Ambiguity
    market: Optional[Market] = None
    investor: Investor
    strategies: Strategies = Strategies()
    simulation: Simulation = Simulation()
    frontier: Frontier = Frontier()
    output: Output = Output()

    @model_validator(mode="after")
    def _dimensions(self):
        d = len(self.b)
        if self.ambiguity.d != d:
            raise ValueError(f"ambiguity set has dimension {self.ambiguity.d} but b has {d}")
        if self.market is not None and self.market.d != d:
            raise ValueError(f"market has dimension {self.market.d} but b has {d}")
        if self.strategies.misspecified_sigma and d != 1:
            raise ValueError("misspecified_sigma needs a single-asset market")
        if self.strategies.misspecified_rho and d != 2:
            raise ValueError("misspecified_rho needs a two-asset market")
        return self


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
