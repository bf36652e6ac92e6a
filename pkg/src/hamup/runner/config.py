"""Experiment configuration: YAML text validated against a versioned schema.

Unknown keys are errors.  Validation failures name the offending field and,
when the config came from text, its line number.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..ensembles import EnsembleSpec
from ..errors import ConfigurationError
from ..measurement import MeasurementOracle, NoiseBudget, NoiseChannel
from ..updates import RunConfig

SCHEMA_VERSION = 1
SCENARIOS = ("fig2_noise", "fig3_locality", "fig5_few_bases", "custom")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EnsembleModel(_Strict):
    family: Literal["haar", "clifford", "local_circuit", "mub"] = "haar"
    n_qudits: int = Field(6, ge=1)
    qudit_dim: int = Field(2, ge=2)
    locality: Optional[int] = None
    circuit_depth: Optional[int] = None
    depth_constant: float = 1.0


class ChannelModel(_Strict):
    kind: Literal["amplitude_damping", "white_noise"]
    strength: float = Field(ge=0)


class OracleModel(_Strict):
    mode: Literal["exact", "shots", "shots+noise"] = "exact"
    shots: Optional[int] = Field(None, ge=1)
    channels: list[ChannelModel] = Field(default_factory=list)


class BudgetModel(_Strict):
    eps_state: float = Field(0.0, ge=0)
    eps_measurement: float = Field(0.0, ge=0)
    eps_statistical: float = Field(0.0, ge=0)


class RunModel(_Strict):
    eps: float = 0.05
    delta: float = 0.05
    rank_bound: int = 1
    alpha: Optional[float] = None
    r_eff: Optional[float] = None
    accuracy_mode: Literal["theory", "direct"] = "theory"
    eps_prime: Optional[float] = None
    recycling: Literal["none", "last_step", "complete"] = "last_step"
    step_policy: Literal["adaptive", "fixed"] = "adaptive"
    max_updates: Optional[int] = None
    control_loop: Optional[int] = None
    max_bases: Optional[int] = None
    max_sweeps: int = 100
    stats_path: Literal["auto", "dense", "fast"] = "auto"
    shots: Optional[int] = None
    stats_eps: Optional[float] = None
    calibrate: bool = False
    ensemble: EnsembleModel = Field(default_factory=EnsembleModel)
    oracle: OracleModel = Field(default_factory=OracleModel)
    noise_budget: BudgetModel = Field(default_factory=BudgetModel)

    def to_run_config(self, params_override=None) -> RunConfig:
        ens = EnsembleSpec(**self.ensemble.model_dump())
        oracle = MeasurementOracle(
            mode=self.oracle.mode,
            shots=self.oracle.shots,
            channels=tuple(NoiseChannel(c.kind, c.strength) for c in self.oracle.channels),
        )
        fields = self.model_dump(exclude={"ensemble", "oracle", "noise_budget", "calibrate"})
        return RunConfig(
            ensemble=ens,
            oracle=oracle,
            noise_budget=NoiseBudget(**self.noise_budget.model_dump()),
            params_override=params_override,
            **fields,
        )


class TargetModel(_Strict):
    kind: Literal["haar_pure", "mixed", "ghz", "bell_pairs", "basis", "maximally_mixed"] = "haar_pure"
    rank: int = Field(1, ge=1)


class VariantModel(_Strict):
    name: str
    run: dict = Field(default_factory=dict)
    target: dict = Field(default_factory=dict)


class ExperimentModel(_Strict):
    schema_version: int = SCHEMA_VERSION
    scenario: Literal["fig2_noise", "fig3_locality", "fig5_few_bases", "custom"] = "custom"
    repetitions: int = Field(1, ge=1)
    master_seed: int = 0
    output_dir: str = "results"
    distance_rows: Literal["all", "fresh"] = "all"
    target: TargetModel = Field(default_factory=TargetModel)
    run: RunModel = Field(default_factory=RunModel)
    variants: list[VariantModel] = Field(default_factory=list)

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}")
        return v

    def resolved_variants(self) -> list[tuple[str, TargetModel, RunModel]]:
        """``(name, target, run)`` per arm; a config without variants has one arm ``main``."""
        if not self.variants:
            return [("main", self.target, self.run)]
        out = []
        base_run = self.run.model_dump()
        base_target = self.target.model_dump()
        for v in self.variants:
            try:
                run = RunModel.model_validate(_deep_merge(base_run, v.run))
                target = TargetModel.model_validate(_deep_merge(base_target, v.target))
            except ValidationError as exc:
                raise ConfigurationError(f"variant {v.name!r}: {_describe(exc, None, prefix=('variants',))}") from None
            out.append((v.name, target, run))
        return out


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _line_of(node, loc) -> int | None:
    """Line (1-based) of the YAML node addressed by a pydantic error location."""
    best = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = v
                    best = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            best = node.start_mark.line + 1
        else:
            break
        if node is None:
            break
    return best


def _describe(exc: ValidationError, root, prefix=()) -> str:
    parts = []
    for err in exc.errors():
        loc = tuple(prefix) + tuple(err["loc"])
        field = ".".join(str(x) for x in loc)
        line = _line_of(root, err["loc"]) if root is not None else None
        where = f"line {line}, " if line else ""
        parts.append(f"{where}field '{field}': {err['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> ExperimentModel:
    """Parse YAML text into a validated experiment model."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigurationError(f"{where}invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping at top level")
    try:
        model = ExperimentModel.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_describe(exc, root)) from None
    # surface invalid variants and semantic errors (e.g. RunConfig invariants) at load time
    for name, _, run in model.resolved_variants():
        try:
            run.to_run_config()
        except ConfigurationError as exc:
            raise ConfigurationError(f"variant {name!r}: {exc}") from None
    return model


def load_config(path: str | Path) -> ExperimentModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(model: ExperimentModel) -> str:
    return yaml.safe_dump(model.model_dump(), sort_keys=False)
