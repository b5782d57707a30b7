"""Pairwise sorting accuracy of a schedule against true remaining latency."""

from collections.abc import Mapping, Sequence

import numpy as np

from agentflow.models.request import PendingRequest


def pairwise_sorting_accuracy(
    schedule_order: Sequence[PendingRequest],
    true_remaining: Mapping[str, float],
    *,
    cross_agent_only: bool = True,
) -> float | None:
    """Fraction of request pairs scheduled in true remaining-latency order.

    A pair scores 1 when the earlier-scheduled request has strictly smaller
    true remaining latency, 0.5 on a tie and 0 otherwise.

    Args:
        schedule_order: Requests in the order they would be served.
        true_remaining: Ground-truth remaining latency per request id.
        cross_agent_only: Only score pairs of requests from different agents.

    Returns:
        The accuracy, or None when there is no scorable pair.
    """
    n = len(schedule_order)
    if n < 2:
        return None
    remaining = np.array([true_remaining[r.request_id] for r in schedule_order], dtype=float)
    _, agent_codes = np.unique([r.agent for r in schedule_order], return_inverse=True)

    i, j = np.triu_indices(n, k=1)
    if cross_agent_only:
        keep = agent_codes[i] != agent_codes[j]
        i, j = i[keep], j[keep]
    if i.size == 0:
        return None
    earlier, later = remaining[i], remaining[j]
    score = np.count_nonzero(earlier < later) + 0.5 * np.count_nonzero(earlier == later)
    return float(score / i.size)
