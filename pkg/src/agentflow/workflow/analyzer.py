"""Online workflow reconstruction from traced agent calls."""

from collections import Counter, defaultdict
from collections.abc import Iterable
from types import MappingProxyType

from loguru import logger

from agentflow.models.common import TIME_EPS, AgentId, FanoutKind, MessageId
from agentflow.models.request import RequestRecord
from agentflow.workflow.fanout import classify_fanout
from agentflow.workflow.graph import FanoutPattern, WorkflowEdge, WorkflowGraph


class WorkflowAnalyzer:
    """Builds the agent call graph one completed workflow instance at a time.

    Records are buffered per message id by `ingest` and folded into the graph
    by `complete_instance`, once every call of that instance is known. The
    analyzer is the single writer; `graph` hands out immutable snapshots.

    Example:
        ```python
        analyzer = WorkflowAnalyzer()
        for record in records:
            analyzer.ingest(record)
        graph = analyzer.flush()
        print(graph.to_report())
        ```
    """

    def __init__(self) -> None:
        self._pending: dict[MessageId, list[RequestRecord]] = defaultdict(list)
        self._nodes: set[AgentId] = set()
        self._edges: Counter[tuple[AgentId, AgentId]] = Counter()
        self._downstreams: dict[AgentId, set[AgentId]] = defaultdict(set)
        self._votes: dict[AgentId, Counter[FanoutKind]] = defaultdict(Counter)
        self._entries: set[AgentId] = set()
        self._sinks: set[AgentId] = set()
        self._instances = 0
        self._graph = WorkflowGraph()
        self.diagnostics: list[str] = []

    @property
    def graph(self) -> WorkflowGraph:
        """Latest immutable graph snapshot."""
        return self._graph

    @property
    def pending_instances(self) -> int:
        return len(self._pending)

    def ingest(self, record: RequestRecord) -> None:
        """Buffer a record until its workflow instance completes."""
        self._pending[record.msg_id].append(record)

    def pending_records(self, msg_id: MessageId) -> list[RequestRecord]:
        return list(self._pending.get(msg_id, ()))

    def complete_instance(self, msg_id: MessageId) -> WorkflowGraph:
        """Fold every buffered record of `msg_id` into the graph.

        Returns:
            The new graph snapshot (unchanged if nothing was buffered).
        """
        records = self._pending.pop(msg_id, None)
        if not records:
            return self._graph
        records.sort(key=lambda r: (r.exec_start, r.exec_end, r.agent, r.upstream or ""))

        roots = sorted({r.agent for r in records if r.upstream is None})
        if len(roots) > 1:
            message = f"{msg_id}: conflicting entry agents {', '.join(roots)}"
            self.diagnostics.append(message)
            logger.warning("Malformed trace: {}", message)
        self._entries.update(roots)

        by_upstream: dict[AgentId, list[RequestRecord]] = defaultdict(list)
        for r in records:
            self._nodes.add(r.agent)
            if r.upstream is not None:
                self._nodes.add(r.upstream)
                self._edges[(r.upstream, r.agent)] += 1
                self._downstreams[r.upstream].add(r.agent)
                by_upstream[r.upstream].append(r)

        for upstream, calls in by_upstream.items():
            if len({c.agent for c in calls}) < 2:
                continue
            spans = [(c.agent, c.exec_start, c.exec_end) for c in calls]
            self._votes[upstream][classify_fanout(spans)] += 1

        finish = max(r.exec_end for r in records)
        self._sinks.update(r.agent for r in records if r.exec_end >= finish - TIME_EPS)

        self._instances += 1
        self._graph = self._build()
        logger.debug(
            "Folded {} ({} records): {} nodes, {} edges",
            msg_id,
            len(records),
            len(self._graph.nodes),
            len(self._graph.edges),
        )
        return self._graph

    def flush(self) -> WorkflowGraph:
        """Complete every buffered instance, in message id order."""
        for msg_id in sorted(self._pending):
            self.complete_instance(msg_id)
        return self._graph

    def ingest_all(self, records: Iterable[RequestRecord]) -> WorkflowGraph:
        """Ingest a finished trace and return the resulting graph."""
        for record in records:
            self.ingest(record)
        return self.flush()

    def _build(self) -> WorkflowGraph:
        successors: dict[AgentId, list[AgentId]] = defaultdict(list)
        for source, target in sorted(self._edges):
            successors[source].append(target)
        back = _back_edges(self._nodes, successors, self._entries)

        edges = tuple(
            WorkflowEdge(source, target, count, (source, target) in back)
            for (source, target), count in sorted(self._edges.items())
        )
        fanouts = {
            node: FanoutPattern(node, frozenset(targets), self._fanout_kind(node, targets))
            for node, targets in sorted(self._downstreams.items())
        }
        return WorkflowGraph(
            nodes=frozenset(self._nodes),
            edges=edges,
            fanouts=MappingProxyType(fanouts),
            entries=frozenset(self._entries),
            sinks=frozenset(self._sinks),
            instances=self._instances,
        )

    def _fanout_kind(self, node: AgentId, targets: set[AgentId]) -> FanoutKind:
        if len(targets) == 1:
            return FanoutKind.SINGLE
        votes = self._votes.get(node)
        if not votes:
            # Alternatives that never ran together in one instance.
            return FanoutKind.SEQUENTIAL
        if votes[FanoutKind.SEQUENTIAL] > votes[FanoutKind.PARALLEL]:
            return FanoutKind.SEQUENTIAL
        return FanoutKind.PARALLEL


def _back_edges(
    nodes: set[AgentId],
    successors: dict[AgentId, list[AgentId]],
    entries: set[AgentId],
) -> set[tuple[AgentId, AgentId]]:
    """Edges closing a cycle, found by a DFS rooted at the entries first."""
    on_stack: set[AgentId] = set()
    done: set[AgentId] = set()
    back: set[tuple[AgentId, AgentId]] = set()

    for root in sorted(entries) + sorted(nodes - entries):
        if root in done:
            continue
        stack = [(root, iter(successors.get(root, ())))]
        on_stack.add(root)
        while stack:
            node, children = stack[-1]
            child = next(children, None)
            if child is None:
                stack.pop()
                on_stack.discard(node)
                done.add(node)
            elif child in on_stack:
                back.add((node, child))
            elif child not in done:
                on_stack.add(child)
                stack.append((child, iter(successors.get(child, ()))))
    return back
