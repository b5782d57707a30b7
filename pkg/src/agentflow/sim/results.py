"""What a finished simulation hands to the metrics layer."""

from dataclasses import dataclass, field

from agentflow.models.common import AgentId, InstanceId, MessageId
from agentflow.models.request import RequestRecord
from agentflow.models.status import StatusSnapshot


@dataclass(frozen=True)
class RequestOutcome:
    """One agent call after it completed.

    Attributes:
        request_id: Call id.
        msg_id: Workflow instance.
        application: Application name.
        agent: Calling agent.
        upstream: Triggering agent.
        app_start: Workflow arrival.
        queue_enter: First time the call was queued.
        exec_start: Start of the successful attempt.
        exec_end: Completion.
        prompt_tokens: Original prompt length.
        output_tokens: Tokens in the final answer.
        queue_time: Time spent in the ready queue over all attempts.
        prefill_time: Engine time spent in prefill over all attempts.
        decode_time: Engine time spent decoding over all attempts.
        preemptions: Times the call was evicted.
        wasted_tokens: Generated tokens thrown away by evictions.
        instance: Instance that completed the call.
    """

    request_id: str
    msg_id: MessageId
    application: str
    agent: AgentId
    upstream: AgentId | None
    app_start: float
    queue_enter: float
    exec_start: float
    exec_end: float
    prompt_tokens: int
    output_tokens: int
    queue_time: float
    prefill_time: float
    decode_time: float
    preemptions: int
    wasted_tokens: int
    instance: InstanceId

    @property
    def latency(self) -> float:
        """End-to-end time of this call, from first queueing to completion."""
        return self.exec_end - self.queue_enter

    @property
    def engine_time(self) -> float:
        return self.prefill_time + self.decode_time

    def to_record(self) -> RequestRecord:
        return RequestRecord(
            msg_id=self.msg_id,
            agent=self.agent,
            upstream=self.upstream,
            exec_start=self.exec_start,
            exec_end=self.exec_end,
            prompt_tokens=self.prompt_tokens,
            output_tokens=self.output_tokens,
            app_start=self.app_start,
            queue_enter=self.queue_enter,
        )


@dataclass(frozen=True)
class WorkflowOutcome:
    """A finished workflow instance."""

    msg_id: MessageId
    application: str
    app_start: float
    end: float
    requests: tuple[str, ...]
    output_tokens: int

    @property
    def latency(self) -> float:
        return self.end - self.app_start


@dataclass(frozen=True)
class OverheadSample:
    """Wall-clock cost of one scheduling decision.

    Attributes:
        queue_len: Queue length when the decision was made.
        instances: Instances evaluated.
        sort_seconds: Time spent bringing the queue into order.
        dispatch_seconds: Time spent choosing an instance.
    """

    queue_len: int
    instances: int
    sort_seconds: float
    dispatch_seconds: float


@dataclass
class SimulationResult:
    """Everything recorded by one simulation run."""

    label: str
    seed: int
    requests: list[RequestOutcome] = field(default_factory=list)
    workflows: list[WorkflowOutcome] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    accuracy_times: list[float] = field(default_factory=list)
    overhead: list[OverheadSample] = field(default_factory=list)
    decisions: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    final_status: StatusSnapshot | None = None
    end_time: float = 0.0
    stopped_early: bool = False
    unfinished: int = 0
    priority_versions: int = 0

    @property
    def preempted_total(self) -> int:
        return sum(r.preemptions for r in self.requests)

    def records(self) -> list[RequestRecord]:
        """Completed calls as trace records, in completion order."""
        ordered = sorted(self.requests, key=lambda r: (r.exec_end, r.request_id))
        return [r.to_record() for r in ordered]
