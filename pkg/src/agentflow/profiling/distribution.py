"""Empirical latency distributions, 1-Wasserstein distance and mode estimation."""

import math
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from sortedcontainers import SortedList

from agentflow.exceptions import DistributionError

DEFAULT_MIN_SAMPLES = 16
DEFAULT_THRESHOLD = 0.05
FALLBACK_BINS = 64
MAX_BINS = 4096


def wasserstein_1d(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """1-Wasserstein distance between two empirical distributions.

    Equal-size inputs pair sorted samples directly. Otherwise the distance is
    the integral of |F_a - F_b| over the merged sample grid, which equals the
    integral of the quantile-function difference.

    Raises:
        DistributionError: If either input is empty.
    """
    u = np.sort(np.asarray(a, dtype=float))
    v = np.sort(np.asarray(b, dtype=float))
    if u.size == 0 or v.size == 0:
        raise DistributionError("Wasserstein distance of an empty sample set")

    if u.size == v.size:
        return float(np.mean(np.abs(u - v)))

    grid = np.concatenate([u, v])
    grid.sort(kind="mergesort")
    widths = np.diff(grid)
    cdf_u = np.searchsorted(u, grid[:-1], side="right") / u.size
    cdf_v = np.searchsorted(v, grid[:-1], side="right") / v.size
    return float(np.sum(np.abs(cdf_u - cdf_v) * widths))


class EmpiricalDistribution:
    """Sorted latency samples with doubling-checkpoint convergence.

    Every time the number of recorded samples reaches a checkpoint
    (min_samples, 2*min_samples, 4*min_samples, ...) the current samples are
    snapshotted and compared with the previous snapshot. The distribution is
    converged once that distance falls below `threshold` times the sample mean,
    and stays converged afterwards.

    Args:
        min_samples: First checkpoint; no convergence below it.
        threshold: Relative convergence threshold.
        window: Keep only the most recent `window` samples (None keeps all).
    """

    def __init__(
        self,
        min_samples: int = DEFAULT_MIN_SAMPLES,
        threshold: float = DEFAULT_THRESHOLD,
        window: int | None = None,
    ):
        if min_samples < 1:
            raise ValueError("min_samples must be at least 1")
        if window is not None and window < min_samples:
            raise ValueError("window must hold at least min_samples samples")
        self.min_samples = min_samples
        self.threshold = threshold
        self.window = window
        self._samples: SortedList = SortedList()
        self._arrivals: deque[float] = deque()
        self._next_checkpoint = min_samples
        self.total = 0
        self.version = 0
        self.converged = False
        self.last_snapshot: tuple[float, ...] = ()
        self.last_distance: float | None = None

    @classmethod
    def from_samples(
        cls, samples: Iterable[float], *, converged: bool | None = None, **kwargs
    ) -> "EmpiricalDistribution":
        """Build a distribution by recording `samples` in order.

        Args:
            samples: Latency values.
            converged: Force the convergence flag instead of the checkpoint result.
        """
        dist = cls(**kwargs)
        for value in samples:
            dist.add(value)
        if converged is not None:
            dist.converged = converged
        return dist

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def samples(self) -> list[float]:
        """Samples in ascending order."""
        return list(self._samples)

    def values(self) -> np.ndarray:
        return np.fromiter(self._samples, dtype=float, count=len(self._samples))

    def add(self, latency: float) -> bool:
        """Record one sample.

        Returns:
            True if this sample made the distribution converge.

        Raises:
            DistributionError: If `latency` is negative or not finite.
        """
        if not math.isfinite(latency) or latency < 0:
            raise DistributionError(f"latency must be a non-negative number, got {latency}")
        self._samples.add(latency)
        self._arrivals.append(latency)
        if self.window is not None and len(self._arrivals) > self.window:
            self._samples.remove(self._arrivals.popleft())
        self.total += 1
        self.version += 1

        if self.total < self._next_checkpoint:
            return False
        self._next_checkpoint *= 2
        return self._checkpoint()

    def _checkpoint(self) -> bool:
        snapshot = tuple(self._samples)
        previous, self.last_snapshot = self.last_snapshot, snapshot
        if not previous:
            return False
        self.last_distance = wasserstein_1d(previous, snapshot)
        tolerance = self.threshold * self.mean
        logger.debug(
            "Checkpoint at {} samples: W1={:.6g} tolerance={:.6g}",
            self.total,
            self.last_distance,
            tolerance,
        )
        if self.converged:
            return False
        if self.last_distance < tolerance or (tolerance == 0 and self.last_distance == 0):
            self.converged = True
            return True
        return False

    @property
    def mean(self) -> float:
        if not self._samples:
            raise DistributionError("mean of an empty distribution")
        return math.fsum(self._samples) / len(self._samples)

    @property
    def median(self) -> float:
        if not self._samples:
            raise DistributionError("median of an empty distribution")
        return float(np.median(self.values()))

    def quantile(self, q: float) -> float:
        if not self._samples:
            raise DistributionError("quantile of an empty distribution")
        return float(np.quantile(self.values(), q))


@dataclass(frozen=True)
class RemainingLatencyDistribution:
    """Remaining end-to-end latency samples of one agent's requests."""

    agent: str
    dist: EmpiricalDistribution


def mode_estimate(dist: EmpiricalDistribution, min_samples: int | None = None) -> float:
    """Most likely latency of a distribution.

    The highest-count histogram bin is found with Freedman-Diaconis bin widths
    (64 fixed bins when the interquartile range is zero). The result is the
    median of the samples inside that bin, not the bin centre, so tight
    clusters map onto their actual value. Below `min_samples` the plain median is returned with a
    warning.

    Raises:
        DistributionError: If the distribution is empty.
    """
    values = dist.values()
    if values.size == 0:
        raise DistributionError("mode of an empty distribution")
    required = dist.min_samples if min_samples is None else min_samples
    if values.size < required:
        logger.warning(
            "Mode estimate from {} samples (< {}), using the median", values.size, required
        )
        return float(np.median(values))

    low, high = float(values[0]), float(values[-1])
    if high - low <= 0:
        return low

    q25, q75 = np.quantile(values, [0.25, 0.75])
    iqr = float(q75 - q25)
    if iqr > 0:
        width = 2.0 * iqr / values.size ** (1.0 / 3.0)
        bins = min(MAX_BINS, max(1, math.ceil((high - low) / width)))
    else:
        bins = FALLBACK_BINS
    counts, edges = np.histogram(values, bins=bins, range=(low, high))
    best = int(np.argmax(counts))
    left = np.searchsorted(values, edges[best], side="left")
    if best == bins - 1:
        right = values.size
    else:
        right = np.searchsorted(values, edges[best + 1], side="left")
    members = values[left:right]
    if members.size == 0:
        return float((edges[best] + edges[best + 1]) / 2)
    return float(np.median(members))


@dataclass(frozen=True)
class DistributionSummary:
    """Per-agent summary row for CSV or table output."""

    agent: str
    kind: str
    count: int
    min: float
    median: float
    mode: float
    p90: float
    max: float
    converged: bool

    @classmethod
    def from_distribution(
        cls, agent: str, kind: str, dist: EmpiricalDistribution
    ) -> "DistributionSummary":
        values = dist.values()
        mode = mode_estimate(dist) if len(values) >= dist.min_samples else float(np.median(values))
        return cls(
            agent=agent,
            kind=kind,
            count=len(values),
            min=float(values[0]),
            median=float(np.median(values)),
            mode=mode,
            p90=float(np.quantile(values, 0.9)),
            max=float(values[-1]),
            converged=dist.converged,
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "agent": self.agent,
            "kind": self.kind,
            "count": self.count,
            "min": self.min,
            "median": self.median,
            "mode": self.mode,
            "p90": self.p90,
            "max": self.max,
            "converged": self.converged,
        }
