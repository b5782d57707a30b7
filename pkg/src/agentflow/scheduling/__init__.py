"""Agent priorities, ready-queue ordering, and schedule quality metrics."""

from agentflow.scheduling.accuracy import pairwise_sorting_accuracy
from agentflow.scheduling.baselines import (
    oracle_schedule,
    single_server_queueing,
    topo_depth_priority,
)
from agentflow.scheduling.priority import (
    ANCHOR,
    DistanceCache,
    DistanceMatrix,
    PriorityRow,
    PriorityTable,
    build_distance_matrix,
    mds_embed_1d,
)
from agentflow.scheduling.queue import (
    AppStartPolicy,
    FCFSPolicy,
    OraclePolicy,
    OrderingPolicy,
    ReadyQueue,
    TopoDepthPolicy,
    WorkflowAwarePolicy,
)

__all__ = [
    "ANCHOR",
    "AppStartPolicy",
    "DistanceCache",
    "DistanceMatrix",
    "FCFSPolicy",
    "OraclePolicy",
    "OrderingPolicy",
    "PriorityRow",
    "PriorityTable",
    "ReadyQueue",
    "TopoDepthPolicy",
    "WorkflowAwarePolicy",
    "build_distance_matrix",
    "mds_embed_1d",
    "oracle_schedule",
    "pairwise_sorting_accuracy",
    "single_server_queueing",
    "topo_depth_priority",
]
