"""Workload schema: agents, applications, arrivals."""

import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class LengthDistribution(BaseModel):
    """Token-length generator for prompts or outputs.

    `lognormal` draws median * exp(sigma * N(0, 1)); every draw is rounded and
    clamped to [minimum, maximum].
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lognormal", "constant", "uniform"] = "lognormal"
    median: float | None = Field(None, gt=0)
    sigma: float = Field(0.5, ge=0)
    value: int | None = Field(None, ge=1)
    low: int | None = Field(None, ge=1)
    high: int | None = Field(None, ge=1)
    minimum: int = Field(1, ge=1)
    maximum: int = Field(4096, ge=1)

    @model_validator(mode="after")
    def _check_parameters(self) -> "LengthDistribution":
        if self.minimum > self.maximum:
            raise ValueError("minimum must not exceed maximum")
        if self.kind == "lognormal" and self.median is None:
            raise ValueError("lognormal lengths need a median")
        if self.kind == "constant" and self.value is None:
            raise ValueError("constant lengths need a value")
        bad_range = self.low is None or self.high is None or self.low > self.high
        if self.kind == "uniform" and bad_range:
            raise ValueError("uniform lengths need low <= high")
        return self

    @classmethod
    def lognormal(cls, median: float, sigma: float, maximum: int = 4096) -> "LengthDistribution":
        return cls(kind="lognormal", median=median, sigma=sigma, maximum=maximum)

    @classmethod
    def constant(cls, value: int) -> "LengthDistribution":
        return cls(kind="constant", value=value, maximum=max(value, 1))

    @property
    def upper(self) -> int:
        """Largest length a draw can produce."""
        if self.kind == "constant":
            return max(self.minimum, min(self.maximum, self.value or 1))
        if self.kind == "uniform":
            return max(self.minimum, min(self.maximum, self.high or 1))
        return self.maximum

    def sample(self, rng: np.random.Generator) -> int:
        if self.kind == "constant":
            raw = float(self.value or 1)
        elif self.kind == "uniform":
            raw = float(rng.integers(self.low or 1, (self.high or 1) + 1))
        else:
            raw = (self.median or 1.0) * math.exp(self.sigma * rng.standard_normal())
        return int(min(self.maximum, max(self.minimum, round(raw))))


class DownstreamChoice(BaseModel):
    """One branch of a probabilistic routing decision."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    agent: str = Field(min_length=1)
    probability: float = Field(gt=0, le=1)


class FeedbackSpec(BaseModel):
    """Retry edge: after this agent, call `target` again with `probability`."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    target: str = Field(min_length=1)
    probability: float = Field(ge=0, le=1)
    max_iterations: int = Field(3, ge=1)


class AgentSpec(BaseModel):
    """An agent and what it calls next.

    At most one of `downstream` (pick one branch), `parallel` (call all at
    once) or `sequential` (call each in turn) may be set; none means the agent
    ends its branch.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    prompt_len: LengthDistribution
    output_len: LengthDistribution
    downstream: list[DownstreamChoice] = Field(default_factory=list)
    parallel: list[str] = Field(default_factory=list)
    sequential: list[str] = Field(default_factory=list)
    feedback: FeedbackSpec | None = None

    @model_validator(mode="after")
    def _check_calls(self) -> "AgentSpec":
        used = sum(bool(x) for x in (self.downstream, self.parallel, self.sequential))
        if used > 1:
            raise ValueError(f"agent {self.name}: choose one of downstream, parallel, sequential")
        if self.downstream:
            total = math.fsum(c.probability for c in self.downstream)
            if abs(total - 1.0) > 1e-6:
                raise ValueError(
                    f"agent {self.name}: downstream probabilities sum to {total}, not 1"
                )
        return self

    @property
    def callees(self) -> list[str]:
        """Agents this agent can call, excluding its feedback target."""
        return [c.agent for c in self.downstream] + list(self.parallel) + list(self.sequential)

    @property
    def peak(self) -> int:
        """Largest KV footprint a single request of this agent can reach."""
        return self.prompt_len.upper + self.output_len.upper


class ApplicationSpec(BaseModel):
    """One multi-agent application (a workflow template)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    entry: str = Field(min_length=1)
    agents: list[AgentSpec] = Field(min_length=1)
    weight: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_topology(self) -> "ApplicationSpec":
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise ValueError(f"application {self.name}: duplicate agent names")
        known = set(names)
        if self.entry not in known:
            raise ValueError(f"application {self.name}: entry {self.entry} is not an agent")
        for agent in self.agents:
            targets = agent.callees + ([agent.feedback.target] if agent.feedback else [])
            missing = [t for t in targets if t not in known]
            if missing:
                raise ValueError(f"agent {agent.name} references unknown agents {missing}")
        if _has_cycle({a.name: a.callees for a in self.agents}):
            raise ValueError(
                f"application {self.name}: calls form a cycle; declare retries as feedback"
            )
        return self

    def agent(self, name: str) -> AgentSpec:
        for agent in self.agents:
            if agent.name == name:
                return agent
        raise KeyError(name)


class ArrivalSpec(BaseModel):
    """Workflow arrival process: Poisson at `rate`, or a timestamp file scaled by `scale`."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["poisson", "trace"] = "poisson"
    rate: float | None = Field(None, gt=0)
    path: Path | None = None
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_source(self) -> "ArrivalSpec":
        if self.kind == "poisson" and self.rate is None:
            raise ValueError("poisson arrivals need a rate")
        if self.kind == "trace" and self.path is None:
            raise ValueError("trace arrivals need a path")
        return self


class WorkloadConfig(BaseModel):
    """Applications sharing one deployment, their arrivals and the run length."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    applications: list[ApplicationSpec] = Field(min_length=1)
    arrival: ArrivalSpec
    duration: float = Field(gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_unique_agents(self) -> "WorkloadConfig":
        names = [a.name for app in self.applications for a in app.agents]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"agent names must be unique across applications: {duplicates}")
        return self

    @property
    def max_peak(self) -> int:
        return max(a.peak for app in self.applications for a in app.agents)

    def with_rate(self, rate: float) -> "WorkloadConfig":
        """Copy with Poisson arrivals at `rate`."""
        arrival = ArrivalSpec(kind="poisson", rate=rate)
        return self.model_copy(update={"arrival": arrival})


def _has_cycle(calls: dict[str, list[str]]) -> bool:
    state: dict[str, int] = {}

    def visit(node: str) -> bool:
        state[node] = 1
        for nxt in calls.get(node, []):
            if state.get(nxt) == 1 or (nxt not in state and visit(nxt)):
                return True
        state[node] = 2
        return False

    return any(node not in state and visit(node) for node in sorted(calls))
