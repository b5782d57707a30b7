"""Exception hierarchy for agentflow."""


class AgentflowError(Exception):
    """Base exception for all agentflow errors.

    All exceptions raised by this library inherit from this class,
    so callers can catch `AgentflowError` for blanket handling.
    """


class ConfigError(AgentflowError):
    """Raised when an experiment or workload config fails validation.

    Raised before any simulation runs. Common causes:
        - Unknown agent referenced by a downstream or feedback edge.
        - Downstream choice probabilities that do not sum to 1.
        - Instance capacity below the largest possible single-request peak.
    """


class TraceError(AgentflowError):
    """Raised when a trace or arrival file cannot be interpreted.

    Attributes:
        path: File the offending input came from, if any.
        line: 1-based line number of the offending record, if known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class NotFoundError(AgentflowError):
    """Raised when a named resource is not known.

    Attributes:
        resource_type: The kind of resource (e.g. "Agent", "Request").
        resource_id: The identifier that was looked up.
    """

    def __init__(self, resource_type: str, resource_id: str):
        self.resource_type = resource_type
        self.resource_id = resource_id
        super().__init__(f"{resource_type} '{resource_id}' not found")


class UnknownAgentError(NotFoundError):
    """Raised when an agent is not a node of the workflow graph."""

    def __init__(self, agent: str):
        super().__init__("Agent", agent)


class UnknownRequestError(NotFoundError):
    """Raised when a slot ledger has no assignment for a request."""

    def __init__(self, request_id: str):
        super().__init__("Request", request_id)


class DistributionError(AgentflowError):
    """Raised for invalid latency samples or empty distributions."""


class NoConvergedDistributionsError(DistributionError):
    """Raised when a distance matrix is requested before any agent has converged."""


class PlacementError(AgentflowError):
    """Raised when committing a request to a ledger slot range that does not fit.

    Attributes:
        instance: Instance whose ledger rejected the request.
        slot: First slot index whose capacity would be exceeded.
    """

    def __init__(self, instance: int, slot: int):
        self.instance = instance
        self.slot = slot
        super().__init__(f"Instance {instance} cannot hold the request: slot {slot} over capacity")
