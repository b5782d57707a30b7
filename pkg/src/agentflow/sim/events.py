"""Simulation events and the time-ordered event queue."""

import heapq
from dataclasses import dataclass, field

from agentflow.models.common import EventKind, InstanceId


@dataclass(frozen=True, order=True)
class SimEvent:
    """A scheduled state transition.

    Events compare by (time, kind rank, sequence number), which makes the
    processing order total and independent of payload contents.

    Attributes:
        time: Simulation time in seconds.
        rank: `kind.rank`, the same-time tie breaker.
        seq: Insertion counter, the final tie breaker.
        kind: What happens.
        instance: Instance the event concerns, if any.
        request_id: Request the event concerns, if any.
        attempt: Execution attempt the event belongs to; events of an older
            attempt (before a preemption) are stale.
        msg_id: Workflow instance, for arrivals.
    """

    time: float
    rank: int
    seq: int
    kind: EventKind = field(compare=False)
    instance: InstanceId | None = field(default=None, compare=False)
    request_id: str | None = field(default=None, compare=False)
    attempt: int = field(default=0, compare=False)
    msg_id: str | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        """Convert to dictionary for the event log."""
        return {
            "time": round(self.time, 9),
            "seq": self.seq,
            "kind": self.kind.value,
            "instance": self.instance,
            "request_id": self.request_id,
            "attempt": self.attempt,
            "msg_id": self.msg_id,
        }


class EventQueue:
    """Min-heap of SimEvents."""

    def __init__(self) -> None:
        self._heap: list[SimEvent] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

    def push(self, time: float, kind: EventKind, **payload) -> SimEvent:
        event = SimEvent(time, kind.rank, self._seq, kind, **payload)
        self._seq += 1
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> SimEvent:
        """Remove and return the earliest event.

        Raises:
            IndexError: If the queue is empty.
        """
        return heapq.heappop(self._heap)

    def peek_time(self) -> float | None:
        return self._heap[0].time if self._heap else None
