"""Baseline orderings: stage depth, shortest remaining time, single-server queueing."""

from collections.abc import Callable, Mapping, Sequence

from agentflow.models.request import PendingRequest
from agentflow.workflow.graph import WorkflowGraph, downstream_paths


def topo_depth_priority(graph: WorkflowGraph, agent: str) -> int:
    """Longest remaining path in stages, counting `agent` itself.

    Feedback edges are unrolled once. Smaller values run first.

    Raises:
        UnknownAgentError: If `agent` is not in the graph.
    """
    paths = downstream_paths(graph, agent, max_loop=1)
    return 1 + max((len(p) for p in paths), default=0)


def oracle_schedule(
    queue: Sequence[PendingRequest], ground_truth_remaining: Mapping[str, float]
) -> list[PendingRequest]:
    """Shortest true remaining execution time first; stable for equal times.

    Args:
        queue: Requests in arrival order.
        ground_truth_remaining: True remaining execution time per request id.
    """
    return sorted(queue, key=lambda r: ground_truth_remaining[r.request_id])


def single_server_queueing(
    order: Sequence[str], service_time: Mapping[str, float] | Callable[[str], float]
) -> float:
    """Total queueing delay when `order` runs back to back on one server.

    All jobs are present at time zero; each waits for the service of every
    job ahead of it.
    """
    lookup = service_time if callable(service_time) else service_time.__getitem__
    clock = 0.0
    total = 0.0
    for job in order:
        total += clock
        clock += lookup(job)
    return total
