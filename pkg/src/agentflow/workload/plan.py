"""Concrete agent calls of one workflow instance, sampled before it runs."""

from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from agentflow.models.common import AgentId, MessageId
from agentflow.workload.spec import ApplicationSpec


@dataclass(frozen=True)
class PlannedCall:
    """One agent call with its sampled lengths.

    Attributes:
        call_id: `<msg_id>/<index>`, unique within the run.
        agent: Calling agent.
        upstream: Agent whose call triggered this one, None for the entry.
        prompt_tokens: Sampled prompt length.
        output_tokens: Sampled (true) output length, hidden from schedulers.
        after: Calls that must complete before this one becomes ready.
    """

    call_id: str
    agent: AgentId
    upstream: AgentId | None
    prompt_tokens: int
    output_tokens: int
    after: tuple[str, ...] = ()


@dataclass(frozen=True)
class WorkflowPlan:
    """Every call one user request will trigger, in dependency order."""

    msg_id: MessageId
    application: str
    app_start: float
    calls: tuple[PlannedCall, ...]

    @cached_property
    def by_id(self) -> Mapping[str, PlannedCall]:
        return {c.call_id: c for c in self.calls}

    @cached_property
    def dependents(self) -> Mapping[str, tuple[str, ...]]:
        """Calls waiting on each call."""
        waiting: dict[str, list[str]] = {c.call_id: [] for c in self.calls}
        for call in self.calls:
            for dep in call.after:
                waiting[dep].append(call.call_id)
        return {k: tuple(v) for k, v in waiting.items()}

    @property
    def roots(self) -> list[PlannedCall]:
        return [c for c in self.calls if not c.after]

    @property
    def total_output_tokens(self) -> int:
        return sum(c.output_tokens for c in self.calls)

    def agents(self) -> list[AgentId]:
        return [c.agent for c in self.calls]


def instantiate_workflow(
    app: ApplicationSpec,
    msg_id: MessageId,
    rng: np.random.Generator,
    app_start: float = 0.0,
) -> WorkflowPlan:
    """Sample the calls one request to `app` makes.

    Branch choices, lengths and feedback loops are drawn depth first in
    declaration order, so a given generator state always yields the same
    plan. A feedback edge is taken with its probability after each pass
    through its source agent, at most `max_iterations` times per instance.
    """
    calls: list[PlannedCall] = []
    loops: dict[tuple[str, str], int] = {}

    def expand(name: str, upstream: str | None, after: tuple[str, ...]) -> tuple[str, ...]:
        spec = app.agent(name)
        call_id = f"{msg_id}/{len(calls)}"
        calls.append(
            PlannedCall(
                call_id=call_id,
                agent=AgentId(name),
                upstream=AgentId(upstream) if upstream is not None else None,
                prompt_tokens=spec.prompt_len.sample(rng),
                output_tokens=spec.output_len.sample(rng),
                after=after,
            )
        )
        leaves: tuple[str, ...] = (call_id,)
        if spec.downstream:
            probabilities = np.array([c.probability for c in spec.downstream])
            choice = int(rng.choice(len(spec.downstream), p=probabilities / probabilities.sum()))
            leaves = expand(spec.downstream[choice].agent, name, (call_id,))
        elif spec.parallel:
            leaves = tuple(
                leaf for child in spec.parallel for leaf in expand(child, name, (call_id,))
            )
        elif spec.sequential:
            previous: tuple[str, ...] = (call_id,)
            for child in spec.sequential:
                previous = expand(child, name, previous)
            leaves = previous

        if spec.feedback is not None:
            edge = (name, spec.feedback.target)
            taken = loops.get(edge, 0)
            if taken < spec.feedback.max_iterations and rng.random() < spec.feedback.probability:
                loops[edge] = taken + 1
                leaves = expand(spec.feedback.target, name, leaves)
        return leaves

    expand(app.entry, None, ())
    return WorkflowPlan(
        msg_id=msg_id, application=app.name, app_start=app_start, calls=tuple(calls)
    )


def execution_time(call: PlannedCall, prefill_rate: float, decode_rate: float) -> float:
    """Engine time of `call` when it runs without interruption."""
    return call.prompt_tokens / prefill_rate + call.output_tokens / decode_rate


def remaining_execution(
    plan: WorkflowPlan, prefill_rate: float, decode_rate: float
) -> dict[str, float]:
    """True remaining execution time per call, assuming no queueing.

    Every call starts as soon as its dependencies finish; a call's remaining
    time runs from its start to the end of the whole instance.
    """
    start: dict[str, float] = {}
    finish: dict[str, float] = {}
    for call in plan.calls:
        start[call.call_id] = max((finish[d] for d in call.after), default=0.0)
        finish[call.call_id] = start[call.call_id] + execution_time(
            call, prefill_rate, decode_rate
        )
    end = max(finish.values(), default=0.0)
    return {call_id: end - t for call_id, t in start.items()}
