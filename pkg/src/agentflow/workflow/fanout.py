"""Sweep-line classification of sibling call spans."""

from collections.abc import Sequence

from agentflow.exceptions import TraceError
from agentflow.models.common import TIME_EPS, FanoutKind

Span = tuple[str, float, float]


def classify_fanout(spans: Sequence[Span]) -> FanoutKind:
    """Decide whether sibling calls ran concurrently.

    Spans are swept in start order while tracking the furthest end seen so
    far. A span overlaps some earlier span exactly when it overlaps the one
    reaching furthest, so a single pass suffices. Overlaps of `TIME_EPS` or
    less (touching endpoints) do not count.

    Args:
        spans: (agent, exec_start, exec_end) of calls sharing one upstream
            within one workflow instance.

    Returns:
        FanoutKind.PARALLEL if any two spans overlap, else FanoutKind.SEQUENTIAL.

    Raises:
        ValueError: If fewer than two spans are given.
        TraceError: If a span ends before it starts.
    """
    if len(spans) < 2:
        raise ValueError("fan-out classification needs at least two spans")
    for agent, start, end in spans:
        if end < start:
            raise TraceError(f"span of {agent} ends before it starts ({start} > {end})")

    ordered = sorted(spans, key=lambda s: (s[1], s[2]))
    reach = ordered[0][2]
    for _, start, end in ordered[1:]:
        if min(end, reach) - start > TIME_EPS:
            return FanoutKind.PARALLEL
        reach = max(reach, end)
    return FanoutKind.SEQUENTIAL
