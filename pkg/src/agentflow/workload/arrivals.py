"""Workflow arrival processes and seeded workload generation."""

from pathlib import Path

import numpy as np
from loguru import logger

from agentflow.exceptions import TraceError
from agentflow.models.request import MessageIdIssuer
from agentflow.workload.plan import WorkflowPlan, instantiate_workflow
from agentflow.workload.spec import WorkloadConfig


def poisson_arrivals(rate: float, duration: float, rng: np.random.Generator) -> list[float]:
    """Arrival times of a Poisson process on [0, duration)."""
    if rate <= 0:
        raise ValueError("arrival rate must be positive")
    times: list[float] = []
    t = float(rng.exponential(1.0 / rate))
    while t < duration:
        times.append(t)
        t += float(rng.exponential(1.0 / rate))
    return times


def scale_arrivals(timestamps: list[float], scale: float) -> list[float]:
    """Shift to start at zero and multiply every inter-arrival gap by `scale`."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not timestamps:
        return []
    origin = timestamps[0]
    return [(t - origin) * scale for t in timestamps]


def ingest_arrival_trace(path: Path, scale: float = 1.0) -> list[float]:
    """Read one timestamp per line (first comma/whitespace field) and rescale it.

    Blank lines and lines starting with `#` are skipped.

    Raises:
        TraceError: On unreadable files, non-numeric fields or timestamps
            that go backwards.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise TraceError(f"cannot read arrival trace: {e}", path=str(path)) from e

    timestamps: list[float] = []
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        field = text.replace(",", " ").split()[0]
        try:
            value = float(field)
        except ValueError as e:
            raise TraceError(f"not a timestamp: {field!r}", path=str(path), line=number) from e
        if not np.isfinite(value):
            raise TraceError(f"not a finite timestamp: {field!r}", path=str(path), line=number)
        if timestamps and value < timestamps[-1]:
            raise TraceError(
                f"timestamp {value} precedes {timestamps[-1]}", path=str(path), line=number
            )
        timestamps.append(value)
    logger.debug("Read {} arrival timestamps from {}", len(timestamps), path)
    return scale_arrivals(timestamps, scale)


def arrival_times(config: WorkloadConfig, rng: np.random.Generator) -> list[float]:
    arrival = config.arrival
    if arrival.kind == "trace":
        times = ingest_arrival_trace(arrival.path, arrival.scale)
        kept = [t for t in times if t < config.duration]
        if len(kept) < len(times):
            logger.debug("Dropped {} arrivals past the duration", len(times) - len(kept))
        return kept
    return poisson_arrivals(arrival.rate, config.duration, rng)


def generate_workload(config: WorkloadConfig, seed: int | None = None) -> list[WorkflowPlan]:
    """Every workflow instance of one run, fully sampled up front.

    The same config and seed always produce the same plans, so strategies
    compared on one seed see identical arrivals, prompts and output lengths.
    Arrivals and plan contents draw from independent streams; changing the
    arrival rate does not change which plans come first.

    Args:
        config: Workload description.
        seed: Overrides `config.seed`.
    """
    arrival_seq, choice_seq, length_seq = np.random.SeedSequence(
        config.seed if seed is None else seed
    ).spawn(3)
    times = arrival_times(config, np.random.default_rng(arrival_seq))
    choice_rng = np.random.default_rng(choice_seq)
    length_rng = np.random.default_rng(length_seq)

    weights = np.array([app.weight for app in config.applications], dtype=float)
    weights /= weights.sum()
    issuer = MessageIdIssuer()
    plans = []
    for t in times:
        app = config.applications[int(choice_rng.choice(len(weights), p=weights))]
        plans.append(instantiate_workflow(app, issuer.issue(), length_rng, app_start=t))
    logger.debug("Generated {} workflow instances", len(plans))
    return plans
