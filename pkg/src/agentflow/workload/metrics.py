"""Per-run and per-strategy metrics."""

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from agentflow.sim.results import OverheadSample, RequestOutcome, SimulationResult

TokenLatencyMode = Literal["workflow", "request"]


def _fmt(value: float | None) -> str:
    return "" if value is None or math.isnan(value) else f"{value:.6f}"


@dataclass(frozen=True)
class AgentBreakdown:
    """Per-agent view of one run."""

    agent: str
    requests: int
    mean_queue_time: float
    mean_exec_time: float
    preemptions: int

    def to_row(self, label: str, seed: int) -> dict:
        return {
            "strategy": label,
            "seed": seed,
            "agent": self.agent,
            "requests": self.requests,
            "mean_queue_time": _fmt(self.mean_queue_time),
            "mean_exec_time": _fmt(self.mean_exec_time),
            "preemptions": self.preemptions,
        }


@dataclass(frozen=True)
class RunMetrics:
    """Metrics of one (strategy, seed) run.

    Token latency is seconds per generated token. Queueing ratio is total
    queue time over total request end-to-end time. Preemption rate is the
    share of requests evicted at least once; wasted fraction is the share
    of all generated tokens that were thrown away.
    """

    label: str
    seed: int
    workflows: int
    requests: int
    mean_token_latency: float
    p90_token_latency: float
    p95_token_latency: float
    p99_token_latency: float
    mean_workflow_latency: float
    queueing_ratio: float
    preemption_rate: float
    preempted_requests: int
    wasted_fraction: float
    decode_share: float
    sorting_accuracy: float | None
    unfinished: int
    agents: tuple[AgentBreakdown, ...] = ()

    def to_row(self) -> dict:
        return {
            "strategy": self.label,
            "seed": self.seed,
            "workflows": self.workflows,
            "requests": self.requests,
            "mean_token_latency": _fmt(self.mean_token_latency),
            "p90_token_latency": _fmt(self.p90_token_latency),
            "p95_token_latency": _fmt(self.p95_token_latency),
            "p99_token_latency": _fmt(self.p99_token_latency),
            "mean_workflow_latency": _fmt(self.mean_workflow_latency),
            "queueing_ratio": _fmt(self.queueing_ratio),
            "preemption_rate": _fmt(self.preemption_rate),
            "preempted_requests": self.preempted_requests,
            "wasted_fraction": _fmt(self.wasted_fraction),
            "decode_share": _fmt(self.decode_share),
            "sorting_accuracy": _fmt(self.sorting_accuracy),
            "unfinished": self.unfinished,
        }


def queueing_ratio(requests: Iterable[RequestOutcome]) -> float:
    """Sum of queue time over sum of end-to-end request time (0 when empty)."""
    queued = 0.0
    total = 0.0
    for r in requests:
        queued += r.queue_time
        total += r.latency
    return queued / total if total > 0 else 0.0


def token_latencies(
    result: SimulationResult, mode: TokenLatencyMode = "workflow", warmup: float = 0.0
) -> np.ndarray:
    """Seconds per generated token, one value per workflow (or per request)."""
    if mode == "request":
        return np.array(
            [r.latency / r.output_tokens for r in result.requests if r.app_start >= warmup],
            dtype=float,
        )
    return np.array(
        [w.latency / w.output_tokens for w in result.workflows if w.app_start >= warmup],
        dtype=float,
    )


def agent_breakdown(requests: Sequence[RequestOutcome]) -> tuple[AgentBreakdown, ...]:
    by_agent: dict[str, list[RequestOutcome]] = defaultdict(list)
    for r in requests:
        by_agent[r.agent].append(r)
    return tuple(
        AgentBreakdown(
            agent=agent,
            requests=len(rows),
            mean_queue_time=float(np.mean([r.queue_time for r in rows])),
            mean_exec_time=float(np.mean([r.exec_end - r.exec_start for r in rows])),
            preemptions=sum(r.preemptions for r in rows),
        )
        for agent, rows in sorted(by_agent.items())
    )


def _warm_accuracy(result: SimulationResult, warmup: float) -> float | None:
    values = np.asarray(result.accuracy, dtype=float)
    if len(result.accuracy_times) == values.size:
        values = values[np.asarray(result.accuracy_times, dtype=float) >= warmup]
    return float(values.mean()) if values.size else None


def compute_metrics(
    result: SimulationResult,
    *,
    warmup: float = 0.0,
    token_latency: TokenLatencyMode = "workflow",
) -> RunMetrics:
    """Summarize one run, leaving out workflows that arrived during warm-up."""
    requests = [r for r in result.requests if r.app_start >= warmup]
    workflows = [w for w in result.workflows if w.app_start >= warmup]
    latencies = token_latencies(result, token_latency, warmup)

    def pct(q: float) -> float:
        return float(np.percentile(latencies, q)) if latencies.size else math.nan

    generated = sum(r.output_tokens for r in requests)
    wasted = sum(r.wasted_tokens for r in requests)
    engine = sum(r.engine_time for r in requests)
    preempted = sum(1 for r in requests if r.preemptions)
    return RunMetrics(
        label=result.label,
        seed=result.seed,
        workflows=len(workflows),
        requests=len(requests),
        mean_token_latency=float(latencies.mean()) if latencies.size else math.nan,
        p90_token_latency=pct(90),
        p95_token_latency=pct(95),
        p99_token_latency=pct(99),
        mean_workflow_latency=(
            float(np.mean([w.latency for w in workflows])) if workflows else math.nan
        ),
        queueing_ratio=queueing_ratio(requests),
        preemption_rate=preempted / len(requests) if requests else 0.0,
        preempted_requests=preempted,
        wasted_fraction=wasted / (generated + wasted) if generated + wasted else 0.0,
        decode_share=sum(r.decode_time for r in requests) / engine if engine > 0 else 0.0,
        sorting_accuracy=_warm_accuracy(result, warmup),
        unfinished=result.unfinished,
        agents=agent_breakdown(requests),
    )


@dataclass(frozen=True)
class StrategySummary:
    """Per-strategy means over seeds."""

    label: str
    seeds: int
    mean_token_latency: float
    p90_token_latency: float
    p95_token_latency: float
    p99_token_latency: float
    queueing_ratio: float
    preemption_rate: float
    wasted_fraction: float
    decode_share: float
    sorting_accuracy: float | None

    def to_row(self) -> dict:
        return {
            "strategy": self.label,
            "seeds": self.seeds,
            "mean_token_latency": _fmt(self.mean_token_latency),
            "p90_token_latency": _fmt(self.p90_token_latency),
            "p95_token_latency": _fmt(self.p95_token_latency),
            "p99_token_latency": _fmt(self.p99_token_latency),
            "queueing_ratio": _fmt(self.queueing_ratio),
            "preemption_rate": _fmt(self.preemption_rate),
            "wasted_fraction": _fmt(self.wasted_fraction),
            "decode_share": _fmt(self.decode_share),
            "sorting_accuracy": _fmt(self.sorting_accuracy),
        }


def summarize(runs: Sequence[RunMetrics]) -> list[StrategySummary]:
    """Average each strategy's runs over seeds, in first-seen strategy order."""
    grouped: dict[str, list[RunMetrics]] = defaultdict(list)
    for run in runs:
        grouped[run.label].append(run)

    def mean(values: Iterable[float]) -> float:
        kept = [v for v in values if not math.isnan(v)]
        return float(np.mean(kept)) if kept else math.nan

    summaries = []
    for label, rows in grouped.items():
        accuracies = [r.sorting_accuracy for r in rows if r.sorting_accuracy is not None]
        summaries.append(
            StrategySummary(
                label=label,
                seeds=len(rows),
                mean_token_latency=mean(r.mean_token_latency for r in rows),
                p90_token_latency=mean(r.p90_token_latency for r in rows),
                p95_token_latency=mean(r.p95_token_latency for r in rows),
                p99_token_latency=mean(r.p99_token_latency for r in rows),
                queueing_ratio=mean(r.queueing_ratio for r in rows),
                preemption_rate=mean(r.preemption_rate for r in rows),
                wasted_fraction=mean(r.wasted_fraction for r in rows),
                decode_share=mean(r.decode_share for r in rows),
                sorting_accuracy=float(np.mean(accuracies)) if accuracies else None,
            )
        )
    return summaries


@dataclass(frozen=True)
class Comparison:
    """Paired comparison of a reference strategy against another one.

    Attributes:
        reference: Label expected to be better.
        other: Label compared against.
        wins: Seeds where the reference had the lower mean token latency.
        losses: Seeds where it had the higher one.
        ties: Seeds with equal values.
        improvement: Mean relative latency reduction of the reference.
        p_value: One-sided sign-test p-value (ties dropped).
    """

    reference: str
    other: str
    wins: int
    losses: int
    ties: int
    improvement: float
    p_value: float

    def to_row(self) -> dict:
        return {
            "reference": self.reference,
            "other": self.other,
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "improvement": _fmt(self.improvement),
            "p_value": _fmt(self.p_value),
        }


def paired_sign_test(
    reference: dict[int, float], other: dict[int, float], labels: tuple[str, str] = ("a", "b")
) -> Comparison:
    """One-sided sign test that `reference` values are lower than `other` on paired seeds."""
    seeds = sorted(set(reference) & set(other))
    wins = sum(1 for s in seeds if reference[s] < other[s])
    losses = sum(1 for s in seeds if reference[s] > other[s])
    ties = len(seeds) - wins - losses
    decided = wins + losses
    p_value = (
        float(stats.binomtest(wins, decided, 0.5, alternative="greater").pvalue)
        if decided
        else 1.0
    )
    gains = [1.0 - reference[s] / other[s] for s in seeds if other[s] > 0]
    return Comparison(
        reference=labels[0],
        other=labels[1],
        wins=wins,
        losses=losses,
        ties=ties,
        improvement=float(np.mean(gains)) if gains else math.nan,
        p_value=p_value,
    )


def compare_strategies(runs: Sequence[RunMetrics], reference: str) -> list[Comparison]:
    """Sign tests of `reference` against every other strategy on mean token latency."""
    by_label: dict[str, dict[int, float]] = defaultdict(dict)
    for run in runs:
        by_label[run.label][run.seed] = run.mean_token_latency
    if reference not in by_label:
        return []
    return [
        paired_sign_test(by_label[reference], values, (reference, label))
        for label, values in by_label.items()
        if label != reference
    ]


@dataclass(frozen=True)
class OverheadReport:
    """Wall-clock decision cost of one run (microseconds)."""

    label: str
    seed: int
    decisions: int
    mean_sort_us: float
    p99_sort_us: float
    mean_dispatch_us: float
    p99_dispatch_us: float
    max_queue_len: int

    def to_row(self) -> dict:
        return {
            "strategy": self.label,
            "seed": self.seed,
            "decisions": self.decisions,
            "mean_sort_us": _fmt(self.mean_sort_us),
            "p99_sort_us": _fmt(self.p99_sort_us),
            "mean_dispatch_us": _fmt(self.mean_dispatch_us),
            "p99_dispatch_us": _fmt(self.p99_dispatch_us),
            "max_queue_len": self.max_queue_len,
        }


def measure_overhead(result: SimulationResult) -> OverheadReport:
    """Queue-ordering and instance-selection cost per dispatch decision."""
    samples: list[OverheadSample] = result.overhead
    if not samples:
        return OverheadReport(result.label, result.seed, 0, 0.0, 0.0, 0.0, 0.0, 0)
    sort_us = np.array([s.sort_seconds for s in samples]) * 1e6
    dispatch_us = np.array([s.dispatch_seconds for s in samples]) * 1e6
    return OverheadReport(
        label=result.label,
        seed=result.seed,
        decisions=len(samples),
        mean_sort_us=float(sort_us.mean()),
        p99_sort_us=float(np.percentile(sort_us, 99)),
        mean_dispatch_us=float(dispatch_us.mean()),
        p99_dispatch_us=float(np.percentile(dispatch_us, 99)),
        max_queue_len=max(s.queue_len for s in samples),
    )
