"""Reconstructed agent call graph and path enumeration."""

from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from agentflow.exceptions import UnknownAgentError
from agentflow.models.common import AgentId, FanoutKind

Edge = tuple[AgentId, AgentId]
Path = tuple[Edge, ...]

DEFAULT_MAX_LOOP = 3


@dataclass(frozen=True, order=True)
class WorkflowEdge:
    """Observed upstream -> downstream call relationship.

    Attributes:
        source: Calling (upstream) agent.
        target: Called (downstream) agent.
        observations: Number of calls seen along this edge.
        feedback: True when the edge closes a cycle (e.g. a retry loop).
    """

    source: AgentId
    target: AgentId
    observations: int = 1
    feedback: bool = False

    def __post_init__(self) -> None:
        if self.observations < 1:
            raise ValueError("edge observations must be at least 1")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "source": self.source,
            "target": self.target,
            "observations": self.observations,
            "feedback": self.feedback,
        }


@dataclass(frozen=True)
class FanoutPattern:
    """Classification of an agent's downstream calls.

    Attributes:
        node: The upstream agent.
        downstreams: Every agent it was observed calling.
        kind: SINGLE for one downstream, PARALLEL or SEQUENTIAL otherwise.
    """

    node: AgentId
    downstreams: frozenset[AgentId]
    kind: FanoutKind

    def __post_init__(self) -> None:
        single = len(self.downstreams) == 1
        if single != (self.kind == FanoutKind.SINGLE):
            raise ValueError(
                f"fan-out of {self.node}: kind {self.kind.value} "
                f"with {len(self.downstreams)} downstream agents"
            )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "node": self.node,
            "downstreams": sorted(self.downstreams),
            "kind": self.kind.value,
        }


@dataclass(frozen=True)
class WorkflowGraph:
    """Immutable snapshot of the reconstructed call graph.

    A deployment can host several applications, so the graph keeps every
    observed entry agent; `entry` is only defined when there is exactly one.

    Attributes:
        nodes: All agents seen as caller or callee.
        edges: Edges sorted by (source, target).
        fanouts: Fan-out pattern per agent with at least one downstream.
        entries: Agents observed without an upstream.
        sinks: Agents observed finishing last in some workflow instance.
        instances: Completed workflow instances folded in (not part of equality).
    """

    nodes: frozenset[AgentId] = frozenset()
    edges: tuple[WorkflowEdge, ...] = ()
    fanouts: Mapping[AgentId, FanoutPattern] = field(
        default_factory=lambda: MappingProxyType({})
    )
    entries: frozenset[AgentId] = frozenset()
    sinks: frozenset[AgentId] = frozenset()
    instances: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        for edge in self.edges:
            if edge.source not in self.nodes or edge.target not in self.nodes:
                raise ValueError(f"edge {edge.source}->{edge.target} has an unknown endpoint")

    @property
    def entry(self) -> AgentId | None:
        """The single entry agent, or None when zero or several were observed."""
        if len(self.entries) == 1:
            return next(iter(self.entries))
        return None

    def has_node(self, agent: str) -> bool:
        return agent in self.nodes

    def require(self, agent: str) -> None:
        """Raise UnknownAgentError if `agent` is not a node."""
        if agent not in self.nodes:
            raise UnknownAgentError(agent)

    def successors(self, agent: str) -> list[AgentId]:
        return [e.target for e in self.edges if e.source == agent]

    def edge(self, source: str, target: str) -> WorkflowEdge | None:
        for e in self.edges:
            if e.source == source and e.target == target:
                return e
        return None

    @property
    def feedback_edges(self) -> list[WorkflowEdge]:
        return [e for e in self.edges if e.feedback]

    def is_terminal(self, agent: str) -> bool:
        """An agent can end a workflow if it has no callees or was seen finishing last."""
        return agent in self.sinks or not self.successors(agent)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "instances": self.instances,
            "entries": sorted(self.entries),
            "sinks": sorted(self.sinks),
            "nodes": sorted(self.nodes),
            "edges": [e.to_dict() for e in self.edges],
            "fanouts": [self.fanouts[a].to_dict() for a in sorted(self.fanouts)],
        }

    def to_report(self) -> str:
        """Plain-text report of nodes, edges with counts, and fan-out kinds."""
        lines = [f"Workflow graph ({self.instances} instances)"]
        lines.append(f"Entries: {', '.join(sorted(self.entries)) or '-'}")
        lines.append(f"Nodes:   {', '.join(sorted(self.nodes)) or '-'}")
        lines.append("Edges:")
        for e in self.edges:
            mark = "  [feedback]" if e.feedback else ""
            lines.append(f"  {e.source} -> {e.target}  x{e.observations}{mark}")
        lines.append("Fan-out:")
        for agent in sorted(self.fanouts):
            pattern = self.fanouts[agent]
            targets = ", ".join(sorted(pattern.downstreams))
            lines.append(f"  {agent}: {pattern.kind.value} {{{targets}}}")
        return "\n".join(lines)


def downstream_paths(
    graph: WorkflowGraph, agent: str, max_loop: int = DEFAULT_MAX_LOOP
) -> list[Path]:
    """Enumerate call paths from `agent` to every agent that can end the workflow.

    A path is a tuple of edges; a terminal agent yields one empty path. Each
    feedback edge is traversed at most `max_loop` times per path.

    Raises:
        UnknownAgentError: If `agent` is not a node of the graph.
    """
    graph.require(agent)
    feedback = {(e.source, e.target) for e in graph.feedback_edges}
    successors = {node: graph.successors(node) for node in graph.nodes}
    paths: list[Path] = []
    loops: Counter[Edge] = Counter()

    def walk(node: AgentId, path: list[Edge]) -> None:
        if graph.is_terminal(node):
            paths.append(tuple(path))
        for nxt in successors[node]:
            edge = (node, nxt)
            if edge in feedback:
                if loops[edge] >= max_loop:
                    continue
                loops[edge] += 1
                walk(nxt, [*path, edge])
                loops[edge] -= 1
            else:
                walk(nxt, [*path, edge])

    walk(AgentId(agent), [])
    return paths
