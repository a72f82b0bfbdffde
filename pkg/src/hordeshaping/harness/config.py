"""Experiment configuration (JSON documents, unknown keys rejected)."""

from __future__ import annotations

import fnmatch
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..envs import ENV_IDS
from ..shaping import KIND_ENV, KINDS, PotentialSpec


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds ``(key path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PotentialGroup(_Strict):
    kind: str
    scales: list[float] = Field(min_length=1)

    @field_validator("kind")
    @classmethod
    def _known(cls, v):
        if v not in KINDS or v == "custom_tabular":
            raise ValueError(f"unknown potential kind {v!r}")
        return v

    @field_validator("scales")
    @classmethod
    def _non_negative(cls, v):
        if any(not (c >= 0) for c in v):
            raise ValueError("scales must be non-negative")
        return v


class EnsembleConfig(_Strict):
    name: str
    members: list[str] = Field(min_length=1)
    voting: Literal["majority", "rank"] = "rank"
    # "shared": tied Q-values get equal votes; "index": lower action index wins ties
    ties: Literal["shared", "index"] = "shared"


class TilingConfig(_Strict):
    bins: int = Field(10, ge=1)
    tilings: int = Field(10, ge=1)
    low: Optional[list[float]] = None
    high: Optional[list[float]] = None


class ExperimentConfig(_Strict):
    environment: Literal["mountain_car", "cart_pole"]
    gamma: float = Field(0.99, ge=0, le=1)
    alpha: float = Field(0.1, gt=0)
    beta: float = Field(0.0001, ge=0)
    lambda_: float = Field(0.4, ge=0, le=1, alias="lambda")
    runs: int = Field(ge=1)
    episodes: int = Field(ge=1)
    eval_interval: int = Field(ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    potentials: list[PotentialGroup] = []
    ensembles: list[EnsembleConfig] = []
    include_base: bool = True
    seed: int = 0
    output_dir: Optional[str] = None
    tiling: TilingConfig = TilingConfig()
    # divide alpha and beta by the number of tilings (one active feature per tiling)
    step_size_normalization: Literal["tilings", "none"] = "tilings"
    bootstrap_timeout: bool = True
    xi_dot_max: float = Field(4.0, gt=0)
    comparisons: list[tuple[str, str]] = []
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _resolve(self):
        env_id = ENV_IDS[self.environment]
        for i, g in enumerate(self.potentials):
            if KIND_ENV[KINDS[g.kind]] != env_id:
                raise ValueError(f"potentials.{i}.kind: {g.kind} is not defined "
                                 f"for {self.environment}")
        labels = self.demon_labels()
        if not labels:
            raise ValueError("potentials: no demons (empty potentials and include_base=false)")
        names = set()
        for i, e in enumerate(self.ensembles):
            if e.name in labels or e.name in names:
                raise ValueError(f"ensembles.{i}.name: {e.name!r} clashes with another policy")
            names.add(e.name)
            for pat in e.members:
                if not fnmatch.filter(labels, pat):
                    raise ValueError(f"ensembles.{i}.members: {pat!r} matches no demon")
        policies = set(labels) | names
        for i, (a, b) in enumerate(self.comparisons):
            for p in (a, b):
                if p not in policies:
                    raise ValueError(f"comparisons.{i}: unknown policy {p!r}")
        return self

    def shapings(self) -> list[Optional[PotentialSpec]]:
        """Demon shapings in canonical order: base first, then kinds and scales as listed."""
        out: list[Optional[PotentialSpec]] = [None] if self.include_base else []
        seen = set()
        for g in self.potentials:
            for c in g.scales:
                spec = PotentialSpec(g.kind, float(c), xi_dot_max=self.xi_dot_max)
                if spec.label not in seen:
                    seen.add(spec.label)
                    out.append(spec)
        return out

    def demon_labels(self) -> list[str]:
        return ["base" if s is None else s.label for s in self.shapings()]

    def ensemble_members(self, e: EnsembleConfig) -> list[int]:
        labels = self.demon_labels()
        picked = []
        for pat in e.members:
            for j, lab in enumerate(labels):
                if fnmatch.fnmatchcase(lab, pat) and j not in picked:
                    picked.append(j)
        return picked

    def policy_ids(self) -> list[str]:
        return self.demon_labels() + [e.name for e in self.ensembles]

    def step_scale(self) -> float:
        return float(self.tiling.tilings) if self.step_size_normalization == "tilings" else 1.0

    def to_json(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def _format_errors(err: ValidationError):
    out = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        # model-level messages already carry their own key path
        if not e["loc"] and msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
            if ":" in msg:
                path, msg = msg.split(":", 1)
                msg = msg.strip()
        out.append((path, msg))
    return out


def parse_config(doc: dict, **overrides) -> ExperimentConfig:
    doc = dict(doc)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError([(str(path), f"invalid JSON: {err}")]) from None
    if not isinstance(doc, dict):
        raise ConfigError([(str(path), "top level must be an object")])
    return parse_config(doc, **overrides)


def bundled_config(name: str, **overrides) -> ExperimentConfig:
    """Load one of the configs shipped in ``hordeshaping/configs``."""
    return load_config(Path(__file__).resolve().parent.parent / "configs" / f"{name}.json",
                       **overrides)
