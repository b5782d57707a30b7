"""Discrete-event simulation of LLM instances serving agent workflows."""

from agentflow.sim.engine import Simulation
from agentflow.sim.events import EventQueue, SimEvent
from agentflow.sim.instance import InstanceState, RunningRequest
from agentflow.sim.results import (
    OverheadSample,
    RequestOutcome,
    SimulationResult,
    WorkflowOutcome,
)

__all__ = [
    "EventQueue",
    "InstanceState",
    "OverheadSample",
    "RequestOutcome",
    "RunningRequest",
    "SimEvent",
    "Simulation",
    "SimulationResult",
    "WorkflowOutcome",
]
