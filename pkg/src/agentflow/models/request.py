"""Request-level records: traced executions and queued requests."""

from dataclasses import dataclass
from typing import Any

from agentflow.exceptions import TraceError
from agentflow.models.common import AgentId, MessageId


@dataclass
class MessageIdIssuer:
    """Monotone message id counter for deterministic replay.

    Attributes:
        prefix: Text placed before the counter value.
        issued: Number of ids handed out so far.
    """

    prefix: str = "m"
    issued: int = 0

    def issue(self) -> MessageId:
        """Return the next id and advance the counter."""
        msg_id = MessageId(f"{self.prefix}-{self.issued}")
        self.issued += 1
        return msg_id


def new_message_id(issuer: MessageIdIssuer) -> MessageId:
    """Issue a message id that was never issued before by `issuer`."""
    return issuer.issue()


@dataclass(frozen=True)
class RequestRecord:
    """One agent-level LLM call, as written to and read from trace files.

    Attributes:
        msg_id: Workflow instance the call belongs to.
        agent: Agent that issued the call.
        upstream: Agent that triggered this call, None for the workflow entry.
        exec_start: Engine start of the (final, successful) execution, seconds.
        exec_end: Completion time, seconds.
        prompt_tokens: Prompt length in tokens.
        output_tokens: Generated tokens.
        app_start: Frontend arrival time of the owning workflow instance.
        queue_enter: First time the request entered the ready queue, if recorded.
    """

    msg_id: MessageId
    agent: AgentId
    upstream: AgentId | None
    exec_start: float
    exec_end: float
    prompt_tokens: int
    output_tokens: int
    app_start: float
    queue_enter: float | None = None

    def __post_init__(self) -> None:
        if not self.agent:
            raise TraceError("agent name must be non-empty")
        if not self.msg_id:
            raise TraceError("msg_id must be non-empty")
        if self.upstream == "":
            raise TraceError("upstream must be absent or non-empty")
        if not (self.exec_end >= self.exec_start >= self.app_start >= 0):
            raise TraceError(
                f"timestamps out of order for {self.agent} in {self.msg_id}: "
                f"app_start={self.app_start} exec_start={self.exec_start} exec_end={self.exec_end}"
            )
        if self.prompt_tokens < 1 or self.output_tokens < 1:
            raise TraceError(f"token counts must be positive for {self.agent} in {self.msg_id}")
        if self.queue_enter is not None and not (
            self.app_start <= self.queue_enter <= self.exec_start
        ):
            raise TraceError(f"queue_enter outside [app_start, exec_start] in {self.msg_id}")

    @property
    def latency(self) -> float:
        """Single-request execution latency (exec_end - exec_start)."""
        return self.exec_end - self.exec_start

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RequestRecord":
        """Create a RequestRecord from a decoded trace line.

        Raises:
            TraceError: If a required field is missing or has the wrong type.
        """
        try:
            upstream = data.get("upstream")
            queue_enter = data.get("queue_enter")
            return cls(
                msg_id=MessageId(str(data["msg_id"])),
                agent=AgentId(str(data["agent"])),
                upstream=AgentId(str(upstream)) if upstream is not None else None,
                exec_start=float(data["exec_start"]),
                exec_end=float(data["exec_end"]),
                prompt_tokens=int(data["prompt_tokens"]),
                output_tokens=int(data["output_tokens"]),
                app_start=float(data["app_start"]),
                queue_enter=float(queue_enter) if queue_enter is not None else None,
            )
        except KeyError as e:
            raise TraceError(f"missing field {e.args[0]!r}") from e
        except (TypeError, ValueError) as e:
            raise TraceError(f"bad field value: {e}") from e

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "msg_id": self.msg_id,
            "agent": self.agent,
            "upstream": self.upstream,
            "exec_start": self.exec_start,
            "exec_end": self.exec_end,
            "prompt_tokens": self.prompt_tokens,
            "output_tokens": self.output_tokens,
            "app_start": self.app_start,
            "queue_enter": self.queue_enter,
        }


@dataclass(frozen=True)
class PendingRequest:
    """Queue-side view of an agent call before (or between) executions.

    Attributes:
        request_id: Unique id of this agent call within the run.
        msg_id: Owning workflow instance.
        agent: Agent issuing the call.
        prompt_tokens: Prompt length in tokens.
        app_start: Frontend arrival of the owning workflow instance.
        queue_enter: First time the call entered the ready queue. Kept across
            re-queues so a request keeps its place among equals.
        upstream: Triggering agent, None for the workflow entry.
    """

    request_id: str
    msg_id: MessageId
    agent: AgentId
    prompt_tokens: int
    app_start: float
    queue_enter: float
    upstream: AgentId | None = None

    def __post_init__(self) -> None:
        if self.queue_enter < self.app_start:
            raise ValueError(
                f"queue_enter {self.queue_enter} precedes app_start {self.app_start}"
            )
        if self.prompt_tokens < 1:
            raise ValueError("prompt_tokens must be positive")
