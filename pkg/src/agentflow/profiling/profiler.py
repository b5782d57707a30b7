"""Per-agent execution and remaining-latency profiling."""

from collections import Counter, defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType

from loguru import logger

from agentflow.models.common import TIME_EPS, AgentId, MessageId
from agentflow.models.request import RequestRecord
from agentflow.profiling.distribution import (
    DEFAULT_MIN_SAMPLES,
    DEFAULT_THRESHOLD,
    DistributionSummary,
    EmpiricalDistribution,
    RemainingLatencyDistribution,
    mode_estimate,
)
from agentflow.workflow.graph import WorkflowGraph

DEFAULT_REMAINING_WINDOW = 4096


@dataclass(frozen=True)
class ProfileSnapshot:
    """Read-only copy of the profiler state, safe to share across threads.

    Attributes:
        execution: Sorted single-request latencies per agent.
        remaining: Sorted remaining-latency samples per agent.
        converged: Agents whose remaining-latency distribution converged.
    """

    execution: Mapping[AgentId, tuple[float, ...]]
    remaining: Mapping[AgentId, tuple[float, ...]]
    converged: frozenset[AgentId]


class LatencyProfiler:
    """Owns every per-agent latency distribution.

    Two distributions are kept per agent: single-request execution latency
    (used for expected execution time) and remaining end-to-end latency (used
    for agent priorities). Remaining samples are kept in a sliding window.

    Args:
        min_samples: First convergence checkpoint.
        threshold: Relative convergence threshold.
        remaining_window: Most recent remaining samples kept per agent.
    """

    def __init__(
        self,
        min_samples: int = DEFAULT_MIN_SAMPLES,
        threshold: float = DEFAULT_THRESHOLD,
        remaining_window: int | None = DEFAULT_REMAINING_WINDOW,
    ):
        self.min_samples = min_samples
        self.threshold = threshold
        self.remaining_window = remaining_window
        self.execution: dict[AgentId, EmpiricalDistribution] = {}
        self.remaining: dict[AgentId, RemainingLatencyDistribution] = {}
        self._branches: dict[AgentId, Counter[AgentId | None]] = defaultdict(Counter)
        self._deferred: dict[MessageId, list[RequestRecord]] = {}
        self._mode_cache: dict[AgentId, tuple[int, float]] = {}

    def _new_distribution(self, window: int | None = None) -> EmpiricalDistribution:
        return EmpiricalDistribution(self.min_samples, self.threshold, window)

    def record_execution(self, agent: AgentId, latency: float) -> bool:
        """Add a single-request execution latency sample.

        Returns:
            True if the agent's execution distribution just converged.

        Raises:
            DistributionError: If `latency` is negative.
        """
        dist = self.execution.get(agent)
        if dist is None:
            dist = self.execution[agent] = self._new_distribution()
        return dist.add(latency)

    def record_remaining(
        self, records: Sequence[RequestRecord], graph: WorkflowGraph | None = None
    ) -> list[AgentId] | None:
        """Add remaining-latency samples for one completed workflow instance.

        Each record contributes (instance finish - record.exec_start) to its
        agent. Samples of an agent reached through different downstream paths
        land in the same distribution; the first hop taken is counted per agent
        so path proportions can be inspected with `branch_mix`.

        An instance that does not look complete (a record's upstream agent has
        no record of its own, or there is no entry record) is deferred and
        retried when more records of the same message arrive.

        Args:
            records: Records of one workflow instance.
            graph: Current graph snapshot; records of agents missing from it
                are logged.

        Returns:
            Agents whose remaining distribution just converged, or None if the
            instance was deferred.
        """
        if not records:
            return None
        msg_id = records[0].msg_id
        merged = self._deferred.pop(msg_id, []) + list(records)
        if not _looks_complete(merged):
            self._deferred[msg_id] = merged
            logger.debug("Deferring incomplete instance {} ({} records)", msg_id, len(merged))
            return None

        if graph is not None and graph.nodes:
            unknown = sorted({r.agent for r in merged if not graph.has_node(r.agent)})
            if unknown:
                logger.debug("Instance {} has agents not in the graph: {}", msg_id, unknown)

        finish = max(r.exec_end for r in merged)
        newly: list[AgentId] = []
        for record in merged:
            holder = self.remaining.get(record.agent)
            if holder is None:
                holder = RemainingLatencyDistribution(
                    record.agent, self._new_distribution(self.remaining_window)
                )
                self.remaining[record.agent] = holder
            if holder.dist.add(finish - record.exec_start):
                newly.append(record.agent)
            self._branches[record.agent][_first_hop(record, merged)] += 1
        return newly

    def branch_mix(self, agent: AgentId) -> dict[AgentId | None, int]:
        """How often each immediate downstream agent followed `agent` (None = none)."""
        return dict(self._branches.get(agent, {}))

    def expected_execution_time(self, agent: AgentId, default: float) -> float:
        """Expected execution time of `agent`'s next request.

        Uses the mode of the execution distribution, the median while fewer
        than `min_samples` samples exist, and `default` for an unseen agent.
        """
        dist = self.execution.get(agent)
        if dist is None or len(dist) == 0:
            return default
        if len(dist) < self.min_samples:
            return dist.median
        cached = self._mode_cache.get(agent)
        if cached is not None and cached[0] == dist.version:
            return cached[1]
        mode = mode_estimate(dist)
        self._mode_cache[agent] = (dist.version, mode)
        return mode

    def converged_remaining(self) -> dict[AgentId, EmpiricalDistribution]:
        """Converged remaining-latency distributions keyed by agent."""
        return {a: r.dist for a, r in sorted(self.remaining.items()) if r.dist.converged}

    def snapshot(self) -> ProfileSnapshot:
        return ProfileSnapshot(
            execution=MappingProxyType(
                {a: tuple(d.samples) for a, d in sorted(self.execution.items())}
            ),
            remaining=MappingProxyType(
                {a: tuple(r.dist.samples) for a, r in sorted(self.remaining.items())}
            ),
            converged=frozenset(self.converged_remaining()),
        )

    def summaries(self) -> list[DistributionSummary]:
        """Summary rows for every non-empty distribution, execution first."""
        rows = [
            DistributionSummary.from_distribution(agent, "execution", dist)
            for agent, dist in sorted(self.execution.items())
            if len(dist)
        ]
        rows.extend(
            DistributionSummary.from_distribution(agent, "remaining", holder.dist)
            for agent, holder in sorted(self.remaining.items())
            if len(holder.dist)
        )
        return rows


def _looks_complete(records: Sequence[RequestRecord]) -> bool:
    agents = {r.agent for r in records}
    has_entry = any(r.upstream is None for r in records)
    return has_entry and all(r.upstream is None or r.upstream in agents for r in records)


def _first_hop(record: RequestRecord, records: Sequence[RequestRecord]) -> AgentId | None:
    """Earliest call triggered by `record`'s agent after `record` finished."""
    following = [
        r
        for r in records
        if r.upstream == record.agent and r.exec_start >= record.exec_end - TIME_EPS
    ]
    if not following:
        return None
    return min(following, key=lambda r: (r.exec_start, r.agent)).agent
