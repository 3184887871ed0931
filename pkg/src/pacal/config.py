"""Strict JSON run configuration for the command-line driver."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import UsageError
from .fields import VectorField, expression_scalar, expression_vector
from .gallery import KINDS, GallerySpec
from .limits import LimitConfig
from .space import BoxDomain


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DomainModel(_Strict):
    min: list[float]
    max: list[float]


class SpaceModel(_Strict):
    kind: Literal[KINDS]  # type: ignore[valid-type]
    dim: int = Field(2, ge=1, le=6)
    params: dict[str, Any] = Field(default_factory=dict)
    domain: Optional[DomainModel] = None
    seed: int = 0

    @model_validator(mode="after")
    def _domain_dim(self):
        if self.domain is not None and not (len(self.domain.min) == len(self.domain.max) == self.dim):
            raise ValueError("domain min/max must have one entry per dimension")
        return self


class LimitModel(_Strict):
    h0: float = Field(1e-2, gt=0)
    levels: int = Field(8, ge=2, le=12)
    tol: float = Field(1e-9, gt=0)
    ratio: float = Field(2.0, gt=1)


class OutputModel(_Strict):
    format: Literal["csv", "json", "both"] = "csv"
    path: str = "pacal_out"


FieldDef = Union[str, list[str]]


class RunConfig(_Strict):
    space: SpaceModel
    grid: Optional[list[int]] = None
    limit: LimitModel = LimitModel()
    fields: dict[str, FieldDef] = Field(default_factory=dict)
    seed: int = 0
    output: OutputModel = OutputModel()

    @field_validator("grid")
    @classmethod
    def _grid_positive(cls, v):
        if v is not None and any(c < 1 for c in v):
            raise ValueError("grid counts must be >= 1")
        return v

    @model_validator(mode="after")
    def _grid_dim(self):
        if self.grid is not None and len(self.grid) != self.space.dim:
            raise ValueError(f"grid needs {self.space.dim} counts, got {len(self.grid)}")
        return self

    # conversions ------------------------------------------------------------

    def gallery_spec(self) -> GallerySpec:
        dom = None
        if self.space.domain is not None:
            dom = BoxDomain(self.space.domain.min, self.space.domain.max)
        return GallerySpec(self.space.kind, self.space.dim, dict(self.space.params), dom,
                           self.space.seed)

    def limit_config(self) -> LimitConfig:
        return LimitConfig(**self.limit.model_dump())

    def grid_counts(self) -> list[int]:
        return list(self.grid) if self.grid is not None else [4] * self.space.dim

    def field(self, name: str):
        """Compile the named field: a string is scalar, a list is a vector field."""
        if name not in self.fields:
            raise UsageError(f"field {name!r} is not defined in the config")
        text = self.fields[name]
        if isinstance(text, str):
            return expression_scalar(text, self.space.dim)
        return expression_vector(text, self.space.dim)

    def vector_fields(self) -> list[VectorField]:
        return [self.field(k) for k, v in self.fields.items() if not isinstance(v, str)]


def load_config(path) -> RunConfig:
    """Read and validate a config file; every problem becomes a :class:`UsageError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise UsageError(f"invalid config {path}:\n{exc}") from exc
    for name in cfg.fields:
        cfg.field(name)  # compile once so bad expressions fail early
    return cfg
