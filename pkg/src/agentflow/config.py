"""Experiment configuration: engine settings, instances, strategies."""

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from agentflow.exceptions import ConfigError
from agentflow.models.common import DispatcherKind, SchedulerKind
from agentflow.workload.spec import WorkloadConfig


class EngineSettings(BaseSettings):
    """Engine constants, overridable through AGENTFLOW_* environment variables.

    Values given explicitly (in the experiment file or as keyword arguments)
    win over the environment, which wins over the defaults.
    """

    model_config = SettingsConfigDict(env_prefix="AGENTFLOW_", extra="ignore", frozen=True)

    slot_len: float = Field(0.5, gt=0)
    resume_watermark: float = Field(0.85, gt=0, le=1)
    static_threshold: float = Field(0.90, gt=0, le=1)
    dispatch_tick: float = Field(0.1, gt=0)
    recompute_fraction: float = Field(1.0, ge=0, le=1)
    max_loop: int = Field(3, ge=1)
    convergence_threshold: float = Field(0.05, gt=0)
    min_samples: int = Field(16, ge=2)
    remaining_window: int = Field(4096, ge=16)
    priority_refresh_instances: int = Field(256, ge=1)
    cold_start_exec_time: float = Field(2.0, gt=0)
    accuracy_sample_every: int = Field(1, ge=1)
    accuracy_max_queue: int = Field(64, ge=2)
    max_sim_time: float | None = Field(None, gt=0)


class InstanceProfile(BaseModel):
    """One serving instance: KV capacity and throughput."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int = Field(ge=0)
    capacity: int = Field(gt=0)
    decode_rate: float = Field(gt=0)
    prefill_rate: float = Field(gt=0)
    max_batch: int = Field(gt=0)


class StrategyConfig(BaseModel):
    """A scheduler paired with a dispatcher."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scheduler: SchedulerKind = SchedulerKind.WORKFLOW_AWARE
    dispatcher: DispatcherKind = DispatcherKind.TIME_SLOT

    @property
    def label(self) -> str:
        return f"{self.scheduler.value}+{self.dispatcher.value}"

    @property
    def requires_ground_truth(self) -> bool:
        return self.scheduler is SchedulerKind.ORACLE

    @classmethod
    def parse(cls, label: str) -> "StrategyConfig":
        """Build from a `scheduler+dispatcher` label."""
        scheduler, sep, dispatcher = label.partition("+")
        if not sep:
            raise ConfigError(f"strategy label must look like scheduler+dispatcher: {label!r}")
        try:
            return cls(scheduler=SchedulerKind(scheduler), dispatcher=DispatcherKind(dispatcher))
        except ValueError as e:
            raise ConfigError(f"unknown strategy {label!r}: {e}") from e


class ExperimentConfig(BaseModel):
    """Everything one `run` needs.

    Attributes:
        name: Free-form name echoed in the summary.
        workload: Applications, arrivals and duration.
        instances: Serving instances; ids must be unique.
        strategies: Strategies compared on identical arrivals.
        seeds: One paired run per seed and strategy.
        engine: Engine constants.
        warmup: Workflows arriving earlier are left out of the metrics.
        perfect_prediction: Give the dispatcher each request's true execution time.
        token_latency: `workflow` divides a workflow's latency by all its tokens;
            `request` averages per-request latency per token instead.
        accuracy_all_pairs: Score same-agent pairs in sorting accuracy too.
        reference: Strategy label every other strategy is compared against;
            defaults to the first strategy.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "experiment"
    workload: WorkloadConfig
    instances: list[InstanceProfile] = Field(min_length=1)
    strategies: list[StrategyConfig] = Field(min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    engine: EngineSettings = Field(default_factory=EngineSettings)
    warmup: float = Field(0.0, ge=0)
    perfect_prediction: bool = False
    token_latency: Literal["workflow", "request"] = "workflow"
    accuracy_all_pairs: bool = False
    reference: str | None = None

    @field_validator("engine", mode="before")
    @classmethod
    def _engine_from_environment(cls, value: Any) -> Any:
        # Nested validation skips BaseSettings.__init__, so build it explicitly
        if isinstance(value, dict):
            return EngineSettings(**value)
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        ids = [p.id for p in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError(f"instance ids must be unique: {ids}")
        peak = self.workload.max_peak
        small = [p.id for p in self.instances if p.capacity < peak]
        if small:
            raise ValueError(
                f"instances {small} cannot hold the largest request ({peak} tokens)"
            )
        labels = [s.label for s in self.strategies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate strategies: {labels}")
        if self.reference is not None and self.reference not in labels:
            raise ValueError(f"reference {self.reference} is not one of the strategies")
        if self.warmup >= self.workload.duration:
            raise ValueError("warmup must be shorter than the workload duration")
        return self

    @property
    def reference_label(self) -> str:
        return self.reference or self.strategies[0].label

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Load and validate a JSON experiment file.

        Raises:
            ConfigError: If the file is missing, not JSON, or fails validation.
        """
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        return cls.from_dict(data, source=str(path))

    @classmethod
    def from_dict(cls, data: dict, source: str = "config") -> "ExperimentConfig":
        try:
            config = cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid {source}:\n{e}") from e
        arrival = config.workload.arrival
        if arrival.path is not None and not arrival.path.is_absolute() and source != "config":
            resolved = (Path(source).parent / arrival.path).resolve()
            workload = config.workload.model_copy(
                update={"arrival": arrival.model_copy(update={"path": resolved})}
            )
            config = config.model_copy(update={"workload": workload})
        return config

    def with_rate(self, rate: float) -> "ExperimentConfig":
        """Copy with Poisson arrivals at `rate` workflows per second."""
        return self.model_copy(update={"workload": self.workload.with_rate(rate)})

    def with_strategies(self, strategies: list[StrategyConfig]) -> "ExperimentConfig":
        return self.model_copy(update={"strategies": strategies, "reference": None})
