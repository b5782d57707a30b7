"""Workflow orchestrator: analyzer, profiler and agent priorities behind one object."""

from collections.abc import Iterable, Iterator

from loguru import logger

from agentflow.config import EngineSettings
from agentflow.exceptions import NoConvergedDistributionsError
from agentflow.models.common import AgentId, MessageId
from agentflow.models.request import RequestRecord
from agentflow.profiling.profiler import LatencyProfiler
from agentflow.scheduling.priority import (
    DistanceCache,
    PriorityTable,
    build_distance_matrix,
    mds_embed_1d,
)
from agentflow.trace import completion_order, group_by_message
from agentflow.workflow.analyzer import WorkflowAnalyzer
from agentflow.workflow.graph import WorkflowGraph


class WorkflowOrchestrator:
    """Learns workflows and agent priorities from completed agent calls.

    Feed it every finished call with `observe_request` and every finished
    workflow instance with `complete_workflow`. The priority table is rebuilt
    when an agent's remaining-latency distribution converges for the first
    time, and after every `priority_refresh_instances` completed instances
    once a table exists.

    Example:
        ```python
        orchestrator = WorkflowOrchestrator()
        for table in orchestrator.replay(read_trace(path)):
            print(table.version, table.ranking())
        ```
    """

    def __init__(self, settings: EngineSettings | None = None):
        self.settings = settings or EngineSettings()
        self._analyzer: WorkflowAnalyzer | None = None
        self._profiler: LatencyProfiler | None = None
        self._cache = DistanceCache()
        self._table: PriorityTable | None = None
        self._version = 0
        self._since_rebuild = 0
        self.history: list[PriorityTable] = []

    @property
    def analyzer(self) -> WorkflowAnalyzer:
        """Workflow analyzer (lazy initialization)."""
        if self._analyzer is None:
            self._analyzer = WorkflowAnalyzer()
        return self._analyzer

    @property
    def profiler(self) -> LatencyProfiler:
        """Latency profiler (lazy initialization)."""
        if self._profiler is None:
            self._profiler = LatencyProfiler(
                min_samples=self.settings.min_samples,
                threshold=self.settings.convergence_threshold,
                remaining_window=self.settings.remaining_window,
            )
        return self._profiler

    @property
    def graph(self) -> WorkflowGraph:
        return self.analyzer.graph

    @property
    def priority_table(self) -> PriorityTable | None:
        """Latest table, None until some agent's distribution has converged."""
        return self._table

    @property
    def distance_cache(self) -> DistanceCache:
        return self._cache

    def expected_execution_time(self, agent: str) -> float:
        return self.profiler.expected_execution_time(
            AgentId(agent), self.settings.cold_start_exec_time
        )

    def observe_request(self, record: RequestRecord) -> None:
        """Record one finished agent call."""
        self.analyzer.ingest(record)
        self.profiler.record_execution(record.agent, record.latency)

    def complete_workflow(self, msg_id: MessageId) -> PriorityTable | None:
        """Fold a finished workflow instance into the graph and the profiles.

        Returns:
            The new priority table if this instance triggered a rebuild.
        """
        records = self.analyzer.pending_records(msg_id)
        graph = self.analyzer.complete_instance(msg_id)
        newly = self.profiler.record_remaining(records, graph)
        self._since_rebuild += 1
        if newly:
            logger.debug("Remaining-latency distributions converged: {}", newly)
            return self.rebuild()
        refresh = self.settings.priority_refresh_instances
        if self._table is not None and self._since_rebuild >= refresh:
            return self.rebuild()
        return None

    def rebuild(self) -> PriorityTable | None:
        """Recompute the priority table from the converged distributions now."""
        self._since_rebuild = 0
        try:
            matrix = build_distance_matrix(self.profiler.converged_remaining(), self._cache)
        except NoConvergedDistributionsError:
            logger.debug("No converged distributions yet; keeping the current order")
            return None
        self._version += 1
        self._table = mds_embed_1d(matrix, version=self._version)
        self.history.append(self._table)
        return self._table

    def replay(self, records: Iterable[RequestRecord]) -> Iterator[PriorityTable]:
        """Feed a finished trace in workflow completion order.

        Yields:
            Each priority table as it is built.
        """
        groups = group_by_message(records)
        for msg_id in completion_order(groups):
            for record in sorted(groups[msg_id], key=lambda r: (r.exec_end, r.agent)):
                self.observe_request(record)
            table = self.complete_workflow(msg_id)
            if table is not None:
                yield table
