"""Status monitor snapshot of the LLM instances."""

from dataclasses import dataclass

from agentflow.models.common import InstanceId


@dataclass(frozen=True)
class InstanceStatus:
    """Live view of one instance.

    Attributes:
        instance: Instance id.
        capacity: KV capacity in tokens.
        live_usage: KV tokens held by running requests right now.
        running: Requests in the running batch (prefill or decode).
        waiting: Committed requests still in prefill.
        preempted_total: Preemptions on this instance since the run started.
    """

    instance: InstanceId
    capacity: int
    live_usage: int = 0
    running: int = 0
    waiting: int = 0
    preempted_total: int = 0

    @property
    def utilization(self) -> float:
        """Live usage as a fraction of capacity."""
        return self.live_usage / self.capacity if self.capacity else 0.0

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "instance": self.instance,
            "capacity": self.capacity,
            "live_usage": self.live_usage,
            "running": self.running,
            "waiting": self.waiting,
            "preempted_total": self.preempted_total,
        }


@dataclass(frozen=True)
class StatusSnapshot:
    """Consistent view of every instance at one simulation time."""

    time: float
    instances: tuple[InstanceStatus, ...] = ()
    queued: int = 0

    def get(self, instance: int) -> InstanceStatus:
        for status in self.instances:
            if status.instance == instance:
                return status
        raise KeyError(instance)

    @property
    def preempted_total(self) -> int:
        return sum(s.preempted_total for s in self.instances)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "time": self.time,
            "queued": self.queued,
            "instances": [s.to_dict() for s in self.instances],
        }
