"""Common identifiers and enums used across models."""

from enum import Enum
from typing import NewType

AgentId = NewType("AgentId", str)
MessageId = NewType("MessageId", str)
InstanceId = NewType("InstanceId", int)

# Tolerance for comparing simulation timestamps.
TIME_EPS = 1e-9


class FanoutKind(str, Enum):
    """How an agent's downstream calls relate to each other in time."""

    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"
    SINGLE = "single"


class Phase(str, Enum):
    """Execution phase of a request running on an instance."""

    PREFILL = "prefill"
    DECODE = "decode"


class EventKind(str, Enum):
    """Simulation event kinds.

    Same-time events are processed in `rank` order: completions free memory
    before arrivals and dispatch rounds look at the queue.
    """

    REQUEST_DONE = "request_done"
    PREFILL_DONE = "prefill_done"
    TOKEN_TICK = "token_tick"
    PREEMPT_CHECK = "preempt_check"
    ARRIVAL = "arrival"
    DISPATCH_ROUND = "dispatch_round"

    @property
    def rank(self) -> int:
        return _EVENT_RANK[self]


_EVENT_RANK = {kind: i for i, kind in enumerate(EventKind)}


class SchedulerKind(str, Enum):
    """Global ready-queue ordering policies."""

    WORKFLOW_AWARE = "workflow_aware"
    FCFS = "fcfs"
    TOPO_DEPTH = "topo_depth"
    ORACLE = "oracle"
    WO_PRIORITY = "wo_priority"


class DispatcherKind(str, Enum):
    """Instance selection policies."""

    TIME_SLOT = "time_slot"
    ROUND_ROBIN = "round_robin"
    STATIC_THRESHOLD = "static_threshold"
    WO_PACKING = "wo_packing"
