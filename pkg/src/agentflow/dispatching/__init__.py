"""Memory-aware request dispatch across serving instances."""

from agentflow.dispatching.dispatcher import (
    DispatchDecision,
    Dispatcher,
    LeastLoadedDispatcher,
    RoundRobinDispatcher,
    StaticThresholdDispatcher,
    TimeSlotDispatcher,
    make_dispatcher,
    select_instance,
)
from agentflow.dispatching.ledger import Exceeds, Fits, Placement, SlotLedger
from agentflow.dispatching.memory import (
    DEFAULT_SLOT_LEN,
    MemoryModel,
    footprint,
    memory_at,
    slot_contribution,
    slot_of,
    span_slots,
)

__all__ = [
    "DEFAULT_SLOT_LEN",
    "DispatchDecision",
    "Dispatcher",
    "Exceeds",
    "Fits",
    "LeastLoadedDispatcher",
    "MemoryModel",
    "Placement",
    "RoundRobinDispatcher",
    "SlotLedger",
    "StaticThresholdDispatcher",
    "TimeSlotDispatcher",
    "footprint",
    "make_dispatcher",
    "memory_at",
    "select_instance",
    "slot_contribution",
    "slot_of",
    "span_slots",
]
