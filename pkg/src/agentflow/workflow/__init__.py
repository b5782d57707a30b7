"""Workflow reconstruction: call graph, fan-out classification, path enumeration."""

from agentflow.workflow.analyzer import WorkflowAnalyzer
from agentflow.workflow.fanout import classify_fanout
from agentflow.workflow.graph import (
    DEFAULT_MAX_LOOP,
    FanoutPattern,
    WorkflowEdge,
    WorkflowGraph,
    downstream_paths,
)

__all__ = [
    "DEFAULT_MAX_LOOP",
    "FanoutPattern",
    "WorkflowAnalyzer",
    "WorkflowEdge",
    "WorkflowGraph",
    "classify_fanout",
    "downstream_paths",
]
