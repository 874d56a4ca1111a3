"""
Experiment configuration, read from TOML.

A minimal file may be empty; every key has a default. Example::

    replications = 2000
    master_seed = 20100101
    node_counts = [100, 200]
    target_mean_outdegree = 10

    [model]
    form = "centered"

    [parameters]
    sigma_h = {low = 1.0, high = 2.0, zero_probability = 0.0}
    h = 0.0

    [[schemes]]
    kind = "fractional"
    f = 0.1

Parameters given as a bare number are fixed at that value and never zeroed.
"""

from __future__ import annotations

import sys
from pathlib import Path

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .censoring import CensorScheme, Flexible, Fractional, Hard, NoCensoring
from .errors import ConfigSyntaxError, InvalidConfigError
from .trait_process import CenteredGeneral, ModelSpec
from .util import SEED_LIMIT

if sys.version_info < (3, 11):  # tomllib was introduced in 3.11
    import tomli as tomllib  # pragma: no cover
else:
    import tomllib

RANDOMIZED = ("gamma", "beta", "delta", "sigma_h", "h", "r_in", "r_out")


class ParameterRange(BaseModel):
    """
    Uniform range for one scenario parameter. With probability
    ``zero_probability`` the parameter is set to zero instead; ``None`` defers
    to the experiment-wide value.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    low: float = Field(allow_inf_nan=False)
    high: float = Field(allow_inf_nan=False)
    zero_probability: float | None = Field(default=None, ge=0, le=1)

    @model_validator(mode="before")
    @classmethod
    def fixed_value(cls, data):
        if isinstance(data, int | float) and not isinstance(data, bool):
            return {"low": data, "high": data, "zero_probability": 0.0}
        return data

    @model_validator(mode="after")
    def check_range(self):
        if self.low > self.high:
            raise ValueError(f"empty range: low {self.low} > high {self.high}")
        return self

    def smallest_square(self, zero_probability: float) -> float:
        "Smallest achievable value of x**2 for a draw from this range"
        if zero_probability > 0 or self.low <= 0 <= self.high:
            return 0.0
        return min(self.low**2, self.high**2)


class ParameterRanges(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: ParameterRange = ParameterRange(low=-0.3, high=0.3)
    beta: ParameterRange = ParameterRange(low=-0.3, high=0.3)
    delta: ParameterRange = ParameterRange(low=-0.2, high=0.2)
    sigma_h: ParameterRange = ParameterRange(low=0.0, high=2.0)
    h: ParameterRange = ParameterRange(low=-1.0, high=1.0)
    r_in: ParameterRange = ParameterRange(low=-0.5, high=0.5)
    r_out: ParameterRange = ParameterRange(low=-0.5, high=0.5)

    @field_validator("sigma_h")
    @classmethod
    def non_negative_heterogeneity(cls, value: ParameterRange):
        if value.low < 0:
            raise ValueError("sigma_h cannot be negative")
        return value

    @field_validator("r_in", "r_out")
    @classmethod
    def correlation_bound(cls, value: ParameterRange):
        if value.low <= -1 or value.high >= 1:
            raise ValueError("r_in and r_out must lie strictly between -1 and 1")
        return value


class StrataConfig(BaseModel):
    """
    Heterogeneity bands are zero (sigma_h == 0), low (below ``het_high``) and
    high; homophily bands are h < 0, h == 0 and h > 0.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    het_high: float = Field(default=1.0, gt=0)


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    records: str = "records.csv"
    summary: str = "summary.json"


def _default_schemes() -> list:
    return [NoCensoring(), Hard(k=1), Flexible(k=1), Fractional(f=0.1)]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    replications: int = Field(default=2000, ge=1)
    master_seed: int = Field(default=20100101, ge=0, lt=SEED_LIMIT)
    node_counts: list[int] = Field(default=[100, 200], min_length=1)
    target_mean_outdegree: float = Field(default=10.0, gt=0, allow_inf_nan=False)
    sigma_eps: float = Field(default=1.0, ge=0, allow_inf_nan=False)
    mu: float = Field(default=0.0, allow_inf_nan=False)
    zero_probability: float = Field(default=0.5, ge=0, le=1)
    model: ModelSpec = CenteredGeneral()
    parameters: ParameterRanges = ParameterRanges()
    schemes: list[CensorScheme] = Field(default_factory=_default_schemes, min_length=1)
    strata: StrataConfig = StrataConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("node_counts")
    @classmethod
    def enough_nodes(cls, node_counts: list[int]):
        if any(n < 6 for n in node_counts):
            raise ValueError("every network needs at least 6 nodes")
        return sorted(set(node_counts))

    @model_validator(mode="after")
    def check_constraints(self):
        if self.target_mean_outdegree > min(self.node_counts) - 1:
            raise ValueError(
                f"target_mean_outdegree {self.target_mean_outdegree} exceeds n - 1 "
                f"for n = {min(self.node_counts)}"
            )
        r_in, r_out = self.parameters.r_in, self.parameters.r_out
        floor = r_in.smallest_square(self.zero_chance("r_in")) + r_out.smallest_square(
            self.zero_chance("r_out")
        )
        if floor >= 1:
            raise ValueError(
                "r_in**2 + r_out**2 < 1 cannot be met by the configured ranges"
            )
        return self

    def zero_chance(self, name: str) -> float:
        "Probability that parameter ``name`` is set to zero in a scenario"
        value = getattr(self.parameters, name).zero_probability
        return self.zero_probability if value is None else value


def parse_config(path: str | Path) -> ExperimentConfig:
    """
    Reads and validates an experiment configuration.

    Raises
    ------
    OSError
        The file is missing or unreadable.
    ConfigSyntaxError
        The file is not valid TOML; the message carries line and column.
    InvalidConfigError
        A value violates a constraint or a key is unknown; the message names
        the offending field.
    """
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigSyntaxError(f"{path}: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidConfigError(f"{path}: {e}") from e
