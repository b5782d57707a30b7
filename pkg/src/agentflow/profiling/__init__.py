"""Latency profiling: empirical distributions, W1 distance, convergence."""

from agentflow.profiling.distribution import (
    DistributionSummary,
    EmpiricalDistribution,
    RemainingLatencyDistribution,
    mode_estimate,
    wasserstein_1d,
)
from agentflow.profiling.profiler import LatencyProfiler, ProfileSnapshot

__all__ = [
    "DistributionSummary",
    "EmpiricalDistribution",
    "LatencyProfiler",
    "ProfileSnapshot",
    "RemainingLatencyDistribution",
    "mode_estimate",
    "wasserstein_1d",
]
