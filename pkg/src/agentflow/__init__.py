"""Workflow-aware scheduling and memory-aware dispatch for multi-agent LLM serving."""

from agentflow.config import EngineSettings, ExperimentConfig, InstanceProfile, StrategyConfig
from agentflow.exceptions import (
    AgentflowError,
    ConfigError,
    DistributionError,
    NoConvergedDistributionsError,
    NotFoundError,
    PlacementError,
    TraceError,
    UnknownAgentError,
    UnknownRequestError,
)
from agentflow.orchestrator import WorkflowOrchestrator
from agentflow.sim import Simulation, SimulationResult

__all__ = [
    "AgentflowError",
    "ConfigError",
    "DistributionError",
    "EngineSettings",
    "ExperimentConfig",
    "InstanceProfile",
    "NoConvergedDistributionsError",
    "NotFoundError",
    "PlacementError",
    "Simulation",
    "SimulationResult",
    "StrategyConfig",
    "TraceError",
    "UnknownAgentError",
    "UnknownRequestError",
    "WorkflowOrchestrator",
]
