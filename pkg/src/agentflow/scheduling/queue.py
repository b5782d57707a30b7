"""Global ready queue and its ordering policies."""

import bisect
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterator, Mapping

import numpy as np

from agentflow.models.common import AgentId, SchedulerKind
from agentflow.models.request import PendingRequest
from agentflow.scheduling.baselines import topo_depth_priority
from agentflow.scheduling.priority import PriorityTable
from agentflow.workflow.graph import WorkflowGraph

SortKey = tuple


class OrderingPolicy(ABC):
    """Maps a queued request to a sort key; smaller keys dequeue first.

    Every key ends with (queue_enter, msg_id, request_id) so orderings are
    total. `version` changes whenever previously computed keys may be stale.
    """

    kind: SchedulerKind

    @property
    def version(self) -> int:
        return 0

    @abstractmethod
    def key(self, request: PendingRequest) -> SortKey: ...


class FCFSPolicy(OrderingPolicy):
    """First come, first served on queue entry time."""

    kind = SchedulerKind.FCFS

    def key(self, request: PendingRequest) -> SortKey:
        return (request.queue_enter, request.msg_id, request.request_id)


class AppStartPolicy(OrderingPolicy):
    """Earliest workflow arrival first, without agent-level priority."""

    kind = SchedulerKind.WO_PRIORITY

    def key(self, request: PendingRequest) -> SortKey:
        return (request.app_start, request.queue_enter, request.msg_id, request.request_id)


class WorkflowAwarePolicy(OrderingPolicy):
    """Agent anchor distance, then workflow arrival, then queue entry.

    With no table (or an empty one) this degenerates to FCFS on queue entry.

    Args:
        table_source: Returns the latest PriorityTable, or None before the
            first build.
    """

    kind = SchedulerKind.WORKFLOW_AWARE

    def __init__(self, table_source: Callable[[], PriorityTable | None]):
        self._table_source = table_source

    @property
    def version(self) -> int:
        table = self._table_source()
        return -1 if table is None else table.version

    def key(self, request: PendingRequest) -> SortKey:
        table = self._table_source()
        if table is None or not len(table):
            return (0.0, 0.0, request.queue_enter, request.msg_id, request.request_id)
        return (
            table.priority_of(request.agent),
            request.app_start,
            request.queue_enter,
            request.msg_id,
            request.request_id,
        )


class TopoDepthPolicy(OrderingPolicy):
    """Fewest remaining workflow stages first, FCFS among equal depths.

    Agents not yet in the graph get the median depth of known agents.
    """

    kind = SchedulerKind.TOPO_DEPTH

    def __init__(self, graph_source: Callable[[], WorkflowGraph]):
        self._graph_source = graph_source
        self._cached_for = -1
        self._depths: dict[AgentId, int] = {}
        self._fallback = 0.0

    @property
    def version(self) -> int:
        return self._graph_source().instances

    def depth(self, agent: str) -> float:
        graph = self._graph_source()
        if graph.instances != self._cached_for:
            self._depths = {a: topo_depth_priority(graph, a) for a in sorted(graph.nodes)}
            self._fallback = float(np.median(list(self._depths.values()))) if self._depths else 0.0
            self._cached_for = graph.instances
        return self._depths.get(AgentId(agent), self._fallback)

    def key(self, request: PendingRequest) -> SortKey:
        return (self.depth(request.agent), request.queue_enter, request.msg_id, request.request_id)


class OraclePolicy(OrderingPolicy):
    """Shortest true remaining execution time first (simulation only)."""

    kind = SchedulerKind.ORACLE

    def __init__(self, remaining: Mapping[str, float]):
        self._remaining = remaining

    def key(self, request: PendingRequest) -> SortKey:
        return (
            self._remaining[request.request_id],
            request.queue_enter,
            request.msg_id,
            request.request_id,
        )


class ReadyQueue:
    """Requests waiting for dispatch, kept sorted by an OrderingPolicy.

    Inserts go straight into place while the policy version is unchanged.
    When the version moves (a new priority table, a grown graph) the whole
    queue is re-keyed and re-sorted lazily, on the next read.
    """

    def __init__(self, policy: OrderingPolicy):
        self.policy = policy
        self._entries: list[tuple[SortKey, PendingRequest]] = []
        self._ids: set[str] = set()
        self._keyed_at = policy.version
        self.resorts = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __contains__(self, request_id: object) -> bool:
        return request_id in self._ids

    def __iter__(self) -> Iterator[PendingRequest]:
        return iter(self.ordered())

    def _refresh(self) -> None:
        version = self.policy.version
        if version == self._keyed_at:
            return
        self._entries = sorted(
            ((self.policy.key(r), r) for _, r in self._entries), key=lambda e: e[0]
        )
        self._keyed_at = version
        self.resorts += 1

    def enqueue(self, request: PendingRequest) -> None:
        """Insert `request` at its place in the current order."""
        if request.request_id in self._ids:
            raise ValueError(f"request {request.request_id} is already queued")
        self._refresh()
        bisect.insort(self._entries, (self.policy.key(request), request), key=lambda e: e[0])
        self._ids.add(request.request_id)

    def peek(self) -> PendingRequest | None:
        self._refresh()
        return self._entries[0][1] if self._entries else None

    def dequeue(self) -> PendingRequest:
        """Remove and return the highest-priority request.

        Raises:
            IndexError: If the queue is empty.
        """
        self._refresh()
        if not self._entries:
            raise IndexError("dequeue from an empty ready queue")
        _, request = self._entries.pop(0)
        self._ids.discard(request.request_id)
        return request

    def ordered(self) -> list[PendingRequest]:
        """Snapshot of queued requests in dequeue order."""
        self._refresh()
        return [r for _, r in self._entries]
