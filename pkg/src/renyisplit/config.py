"""Experiment configuration: schema, defaults and echo round-trip.

Configs are TOML files with nested tables::

    [geometry]
    Lx = 3
    Ly = 2

    [model]
    family = "UniformXZ"
    lambdas = [0.0, 0.01, 0.02]
    region = "star"
    alphas = [0.25, 0.5, 1.0, 2.0]

    [solver]
    seed = 0

Every field has a default; the validated config is echoed into the JSON
report and re-parses to an identical object.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .sweep import DEFAULT_ALPHAS

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "parse_config", "FAMILIES_2D", "CHAIN_FAMILIES"]

FAMILIES_2D = ("None", "CCExp", "HorizontalZ", "UniformZ", "UniformXZ")
CHAIN_FAMILIES = ("TFIM-V1", "TFIM-V2")


class ConfigError(ValueError):
    """Schema violation; ``path`` is the dotted location of the bad field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Geometry(_Section):
    Lx: int = Field(3, ge=1)
    Ly: int = Field(2, ge=1)
    boundary: Literal["torus", "cylinder"] = "torus"


class LambdaRange(_Section):
    start: float = 0.0
    stop: float
    step: float = Field(gt=0)

    def values(self) -> list[float]:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(n)]


class Model(_Section):
    family: str = "None"
    direction: Optional[dict[str, float]] = None
    lambdas: Optional[list[float]] = None
    range: Optional[LambdaRange] = None
    region: Literal["star", "star_plaquette", "half"] = "star"
    star: int = Field(0, ge=0)
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULT_ALPHAS))

    @field_validator("family")
    @classmethod
    def _family(cls, v):
        if v not in FAMILIES_2D + CHAIN_FAMILIES:
            raise ValueError(f"unknown family {v!r}")
        return v

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, v):
        if not v:
            raise ValueError("alpha list is empty")
        if any(not (a >= 0) for a in v):
            raise ValueError("alpha values must be >= 0")
        if len(set(v)) != len(v):
            raise ValueError("alpha values must be distinct")
        return v

    @field_validator("lambdas")
    @classmethod
    def _lambdas(cls, v):
        if v is not None and not v:
            raise ValueError("lambda list is empty")
        return v

    @model_validator(mode="after")
    def _grid(self):
        if self.lambdas is not None and self.range is not None:
            raise ValueError("give either lambdas or range, not both")
        return self

    def lambda_values(self) -> list[float]:
        if self.range is not None:
            return self.range.values()
        if self.lambdas is not None:
            return list(self.lambdas)
        return [0.0]


class Solver(_Section):
    tol: float = Field(1e-10, gt=0)
    seed: int = 0
    max_iter: int = Field(500, ge=1)
    k: Optional[int] = Field(None, ge=1)
    sector_loops: Literal["auto", "zz", "zx"] = "auto"
    sector_window: float = Field(0.5, ge=0)
    rank_tol: float = Field(1e-10, gt=0)


class Chain(_Section):
    N: int = Field(12, ge=2)
    break_symmetry: Optional[bool] = None


class Analysis(_Section):
    eps: float = Field(1e-7, ge=0)


class Output(_Section):
    csv: str = "surface.csv"
    report: str = "report.json"
    units: Literal["nats", "bits"] = "nats"


class ExperimentConfig(_Section):
    geometry: Geometry = Field(default_factory=Geometry)
    model: Model = Field(default_factory=Model)
    solver: Solver = Field(default_factory=Solver)
    chain: Chain = Field(default_factory=Chain)
    analysis: Analysis = Field(default_factory=Analysis)
    output: Output = Field(default_factory=Output)

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _path(loc) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_path(err["loc"]), err["msg"]) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from None
    return parse_config(data)
