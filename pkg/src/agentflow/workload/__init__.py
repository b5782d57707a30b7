"""Workload description, sampling and arrival processes.

Metrics, experiment runs and report writing live in the `metrics`,
`experiment` and `reporting` submodules; import them directly.
"""

from agentflow.workload.arrivals import (
    arrival_times,
    generate_workload,
    ingest_arrival_trace,
    poisson_arrivals,
    scale_arrivals,
)
from agentflow.workload.plan import (
    PlannedCall,
    WorkflowPlan,
    execution_time,
    instantiate_workflow,
    remaining_execution,
)
from agentflow.workload.spec import (
    AgentSpec,
    ApplicationSpec,
    ArrivalSpec,
    DownstreamChoice,
    FeedbackSpec,
    LengthDistribution,
    WorkloadConfig,
)
from agentflow.workload.templates import (
    TEMPLATES,
    cg_application,
    colocated_workload,
    heavy_light_workload,
    parallel_fanout_application,
    qa_application,
    rg_application,
    sequential_fanout_application,
)

__all__ = [
    "TEMPLATES",
    "AgentSpec",
    "ApplicationSpec",
    "ArrivalSpec",
    "DownstreamChoice",
    "FeedbackSpec",
    "LengthDistribution",
    "PlannedCall",
    "WorkflowPlan",
    "WorkloadConfig",
    "arrival_times",
    "cg_application",
    "colocated_workload",
    "execution_time",
    "generate_workload",
    "heavy_light_workload",
    "ingest_arrival_trace",
    "instantiate_workflow",
    "parallel_fanout_application",
    "poisson_arrivals",
    "qa_application",
    "remaining_execution",
    "rg_application",
    "scale_arrivals",
    "sequential_fanout_application",
]
