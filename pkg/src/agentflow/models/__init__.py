"""Shared domain types: identifiers, request records, status snapshots."""

from agentflow.models.common import (
    TIME_EPS,
    AgentId,
    DispatcherKind,
    EventKind,
    FanoutKind,
    InstanceId,
    MessageId,
    Phase,
    SchedulerKind,
)
from agentflow.models.request import (
    MessageIdIssuer,
    PendingRequest,
    RequestRecord,
    new_message_id,
)
from agentflow.models.status import InstanceStatus, StatusSnapshot

__all__ = [
    "AgentId",
    "DispatcherKind",
    "EventKind",
    "FanoutKind",
    "InstanceId",
    "InstanceStatus",
    "MessageId",
    "MessageIdIssuer",
    "PendingRequest",
    "Phase",
    "RequestRecord",
    "SchedulerKind",
    "StatusSnapshot",
    "TIME_EPS",
    "new_message_id",
]
