"""Agent-level priorities from remaining-latency distributions.

Pairwise 1-Wasserstein distances between agents (plus a synthetic point mass
at zero latency) are embedded on a line with classical MDS. An agent's
priority is its distance from the zero-latency anchor on that line: agents
whose requests usually finish their workflow soon come first.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import numpy as np
from loguru import logger

from agentflow.exceptions import DistributionError, NoConvergedDistributionsError
from agentflow.models.common import AgentId
from agentflow.profiling.distribution import EmpiricalDistribution, wasserstein_1d

ANCHOR = AgentId("<anchor>")

_DEGENERATE_EIGENVALUE = 1e-12  # relative to the largest squared distance


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric W1 distance matrix; the anchor is always the last label.

    Attributes:
        labels: Agent ids followed by ANCHOR.
        d: Read-only square matrix of distances in seconds.
    """

    labels: tuple[AgentId, ...]
    d: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.labels)
        if self.d.shape != (n, n):
            raise ValueError(f"matrix shape {self.d.shape} does not match {n} labels")
        if not np.allclose(self.d, self.d.T, rtol=0.0, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(self.d) != 0) or np.any(self.d < 0):
            raise ValueError("distance matrix needs a zero diagonal and non-negative entries")
        self.d.setflags(write=False)

    @property
    def agents(self) -> tuple[AgentId, ...]:
        return self.labels[:-1]

    def distance(self, a: str, b: str) -> float:
        return float(self.d[self.labels.index(a), self.labels.index(b)])


@dataclass
class DistanceCache:
    """Pairwise W1 values keyed by (agent, distribution version) pairs.

    A rebuild only recomputes pairs involving agents whose samples changed.
    """

    _pairs: dict[tuple[AgentId, int, AgentId, int], float] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def get(
        self, a: AgentId, da: EmpiricalDistribution, b: AgentId, db: EmpiricalDistribution
    ) -> float:
        key = (a, da.version, b, db.version)
        value = self._pairs.get(key)
        if value is None:
            self.misses += 1
            value = wasserstein_1d(da.values(), db.values())
            self._pairs[key] = value
        else:
            self.hits += 1
        return value

    def prune(self, live: Mapping[AgentId, EmpiricalDistribution]) -> None:
        """Drop entries for distribution versions that are no longer current."""
        versions = {a: d.version for a, d in live.items()}
        self._pairs = {
            k: v
            for k, v in self._pairs.items()
            if versions.get(k[0]) == k[1] and versions.get(k[2]) == k[3]
        }


def build_distance_matrix(
    dists: Mapping[AgentId, EmpiricalDistribution], cache: DistanceCache | None = None
) -> DistanceMatrix:
    """W1 distances between converged agents plus the zero-latency anchor.

    Agents whose distribution has not converged are left out. The anchor's
    distance to an agent is that agent's sample mean.

    Raises:
        NoConvergedDistributionsError: If no distribution has converged.
    """
    converged = {a: d for a, d in sorted(dists.items()) if d.converged and len(d)}
    skipped = sorted(set(dists) - set(converged))
    if skipped:
        logger.debug("Distance matrix skips unconverged agents: {}", skipped)
    if not converged:
        raise NoConvergedDistributionsError("no agent has a converged latency distribution")

    agents = list(converged)
    n = len(agents)
    d = np.zeros((n + 1, n + 1))
    for i, a in enumerate(agents):
        for j in range(i + 1, n):
            b = agents[j]
            if cache is not None:
                value = cache.get(a, converged[a], b, converged[b])
            else:
                value = wasserstein_1d(converged[a].values(), converged[b].values())
            d[i, j] = d[j, i] = value
        d[i, n] = d[n, i] = converged[a].mean
    if cache is not None:
        cache.prune(converged)
    return DistanceMatrix(labels=(*agents, ANCHOR), d=d)


@dataclass(frozen=True)
class PriorityRow:
    """One agent's entry in a priority table dump."""

    version: int
    agent: AgentId
    coordinate: float
    anchor_distance: float
    rank: int

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "version": self.version,
            "agent": self.agent,
            "coordinate": self.coordinate,
            "anchor_distance": self.anchor_distance,
            "rank": self.rank,
        }


@dataclass(frozen=True)
class PriorityTable:
    """1D agent coordinates and the anchor they are measured from.

    Attributes:
        coord: Coordinate per agent.
        anchor_coord: Coordinate of the zero-latency anchor.
        version: Monotone build counter.
    """

    coord: Mapping[AgentId, float] = field(default_factory=lambda: MappingProxyType({}))
    anchor_coord: float = 0.0
    version: int = 0

    @classmethod
    def from_coordinates(
        cls, coord: Mapping[str, float], anchor_coord: float, version: int = 0
    ) -> "PriorityTable":
        return cls(
            coord=MappingProxyType({AgentId(a): float(c) for a, c in sorted(coord.items())}),
            anchor_coord=float(anchor_coord),
            version=version,
        )

    def __len__(self) -> int:
        return len(self.coord)

    def __contains__(self, agent: object) -> bool:
        return agent in self.coord

    def anchor_distance(self, agent: str) -> float | None:
        """|coord - anchor_coord|, or None for an agent without an entry."""
        c = self.coord.get(AgentId(agent))
        return None if c is None else abs(c - self.anchor_coord)

    @cached_property
    def cold_start_distance(self) -> float:
        """Median anchor distance, assigned to agents without an entry."""
        if not self.coord:
            return 0.0
        return float(np.median([abs(c - self.anchor_coord) for c in self.coord.values()]))

    def priority_of(self, agent: str) -> float:
        """Anchor distance used for queue ordering (smaller runs first)."""
        distance = self.anchor_distance(agent)
        return self.cold_start_distance if distance is None else distance

    def ranking(self) -> list[AgentId]:
        """Agents from highest to lowest priority, ties by name."""
        return sorted(self.coord, key=lambda a: (abs(self.coord[a] - self.anchor_coord), a))

    def rank(self, agent: str) -> int:
        """1-based position in `ranking`."""
        return self.ranking().index(AgentId(agent)) + 1

    def rows(self) -> list[PriorityRow]:
        return [
            PriorityRow(
                version=self.version,
                agent=agent,
                coordinate=self.coord[agent],
                anchor_distance=abs(self.coord[agent] - self.anchor_coord),
                rank=i,
            )
            for i, agent in enumerate(self.ranking(), start=1)
        ]


def mds_embed_1d(matrix: DistanceMatrix, version: int = 0) -> PriorityTable:
    """Classical (Torgerson) MDS of the distance matrix onto one axis.

    The squared distances are double-centred and the top eigenvector is scaled
    by the square root of its eigenvalue. Coordinates are flipped so the
    anchor is never on the positive side, which keeps output reproducible;
    priorities only depend on distances to the anchor either way.

    Raises:
        DistributionError: If the matrix has fewer than two labels.
    """
    n = len(matrix.labels)
    if n < 2:
        raise DistributionError("MDS needs at least one agent besides the anchor")

    centering = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * centering @ (matrix.d**2) @ centering
    eigenvalues, eigenvectors = np.linalg.eigh(b)
    top = int(np.argmax(eigenvalues))
    scale = float(eigenvalues[top])
    if scale <= _DEGENERATE_EIGENVALUE * float(np.max(matrix.d**2)):
        logger.debug("Degenerate distance matrix; all agents share one priority class")
        coords = np.zeros(n)
    else:
        coords = eigenvectors[:, top] * np.sqrt(scale)
        if coords[-1] > 0:
            coords = -coords

    anchor = float(coords[-1])
    table = PriorityTable.from_coordinates(
        {a: float(c) for a, c in zip(matrix.agents, coords[:-1])}, anchor, version
    )
    logger.debug("Priority table v{}: {}", version, table.ranking())
    return table
