"""One serving instance: running batch, KV-cache usage and preemption."""

import math
from collections.abc import Callable
from dataclasses import dataclass, field

from agentflow.config import InstanceProfile
from agentflow.exceptions import UnknownRequestError
from agentflow.models.common import TIME_EPS, InstanceId, Phase
from agentflow.models.request import PendingRequest
from agentflow.models.status import InstanceStatus


@dataclass
class RunningRequest:
    """A request in an instance's running batch.

    Token generation is not stepped; the count at time t follows from the
    decode start and the instance's decode rate.

    Attributes:
        request: Queue-side request; its prompt includes any tokens kept from
            an earlier, partially recomputed attempt.
        target_tokens: Tokens still to generate in this attempt.
        decode_rate: Tokens per second.
        admitted_at: Start of this attempt.
        attempt: Attempt counter of the request.
        phase: Prefill until the prompt is processed, then decode.
        decode_start: When decoding began.
    """

    request: PendingRequest
    target_tokens: int
    decode_rate: float
    admitted_at: float
    attempt: int
    phase: Phase = Phase.PREFILL
    decode_start: float | None = None

    @property
    def request_id(self) -> str:
        return self.request.request_id

    def tokens_generated(self, now: float) -> int:
        if self.phase is Phase.PREFILL or self.decode_start is None:
            return 0
        produced = math.floor(self.decode_rate * (now - self.decode_start) + TIME_EPS)
        return max(0, min(self.target_tokens, produced))

    def kv_tokens(self, now: float) -> int:
        """Prompt plus generated tokens held in the KV cache."""
        return self.request.prompt_tokens + self.tokens_generated(now)

    def done_at(self) -> float:
        """Time the last token is produced (decode phase only)."""
        if self.decode_start is None:
            raise ValueError(f"request {self.request_id} has not started decoding")
        return self.decode_start + self.target_tokens / self.decode_rate


@dataclass
class InstanceState:
    """Continuous-batching instance with a fixed KV capacity.

    Every running request decodes at the profile's rate regardless of batch
    size.
    """

    profile: InstanceProfile
    running: dict[str, RunningRequest] = field(default_factory=dict)
    preempted_total: int = 0
    tick_pending: bool = False

    @property
    def id(self) -> InstanceId:
        return InstanceId(self.profile.id)

    @property
    def capacity(self) -> int:
        return self.profile.capacity

    def kv_usage(self, now: float) -> int:
        return sum(r.kv_tokens(now) for r in self.running.values())

    def decoding(self) -> bool:
        return any(r.phase is Phase.DECODE for r in self.running.values())

    def can_admit(self, prompt_tokens: int, now: float) -> bool:
        return (
            len(self.running) < self.profile.max_batch
            and self.kv_usage(now) + prompt_tokens <= self.capacity
        )

    def admit(
        self, request: PendingRequest, target_tokens: int, now: float, attempt: int
    ) -> RunningRequest:
        """Add `request` to the batch in its prefill phase.

        Raises:
            ValueError: If the request is already running or does not fit.
        """
        if request.request_id in self.running:
            raise ValueError(f"request {request.request_id} already runs on instance {self.id}")
        if not self.can_admit(request.prompt_tokens, now):
            raise ValueError(f"instance {self.id} cannot admit {request.request_id}")
        running = RunningRequest(
            request=request,
            target_tokens=target_tokens,
            decode_rate=self.profile.decode_rate,
            admitted_at=now,
            attempt=attempt,
        )
        self.running[request.request_id] = running
        return running

    def prefill_time(self, request: PendingRequest) -> float:
        return request.prompt_tokens / self.profile.prefill_rate

    def start_decode(self, request_id: str, now: float) -> RunningRequest:
        running = self._get(request_id)
        running.phase = Phase.DECODE
        running.decode_start = now
        return running

    def finish(self, request_id: str) -> RunningRequest:
        return self.running.pop(self._get(request_id).request_id)

    def evict(self, request_id: str) -> RunningRequest:
        running = self.running.pop(self._get(request_id).request_id)
        self.preempted_total += 1
        return running

    def select_victims(
        self, now: float, priority: Callable[[PendingRequest], float]
    ) -> list[RunningRequest]:
        """Requests to evict until usage fits the capacity again.

        The lowest-priority request (largest `priority` value) goes first,
        the latest-started one among equals.
        """
        usage = self.kv_usage(now)
        if usage <= self.capacity:
            return []
        order = sorted(
            self.running.values(),
            key=lambda r: (priority(r.request), r.admitted_at, r.request_id),
            reverse=True,
        )
        victims = []
        for candidate in order:
            if usage <= self.capacity:
                break
            victims.append(candidate)
            usage -= candidate.kv_tokens(now)
        return victims

    def status(self, now: float) -> InstanceStatus:
        return InstanceStatus(
            instance=self.id,
            capacity=self.capacity,
            live_usage=self.kv_usage(now),
            running=len(self.running),
            waiting=sum(1 for r in self.running.values() if r.phase is Phase.PREFILL),
            preempted_total=self.preempted_total,
        )

    def _get(self, request_id: str) -> RunningRequest:
        running = self.running.get(request_id)
        if running is None:
            raise UnknownRequestError(request_id)
        return running
