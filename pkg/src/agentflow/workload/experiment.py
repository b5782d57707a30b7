"""Strategy-by-seed experiment runs, load calibration and paired comparisons."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from loguru import logger

from agentflow.config import ExperimentConfig, StrategyConfig
from agentflow.sim.engine import Simulation
from agentflow.sim.results import SimulationResult
from agentflow.workload.arrivals import generate_workload
from agentflow.workload.metrics import (
    Comparison,
    OverheadReport,
    RunMetrics,
    StrategySummary,
    compare_strategies,
    compute_metrics,
    measure_overhead,
    summarize,
)
from agentflow.workload.plan import WorkflowPlan


@dataclass(frozen=True)
class CellOptions:
    """What a run keeps besides its metrics."""

    decisions: bool = False
    events: bool = False
    keep_result: bool = False


@dataclass
class CellOutput:
    metrics: RunMetrics
    overhead: OverheadReport
    result: SimulationResult | None = None


@dataclass
class ExperimentReport:
    """All runs of one experiment, plus per-strategy summaries and sign tests."""

    config: ExperimentConfig
    runs: list[RunMetrics] = field(default_factory=list)
    summaries: list[StrategySummary] = field(default_factory=list)
    comparisons: list[Comparison] = field(default_factory=list)
    overhead: list[OverheadReport] = field(default_factory=list)
    results: dict[tuple[str, int], SimulationResult] = field(default_factory=dict)

    def summary(self, label: str) -> StrategySummary:
        for summary in self.summaries:
            if summary.label == label:
                return summary
        raise KeyError(label)

    def run(self, label: str, seed: int) -> RunMetrics:
        for run in self.runs:
            if run.label == label and run.seed == seed:
                return run
        raise KeyError((label, seed))


def run_cell(
    config: ExperimentConfig,
    strategy: StrategyConfig,
    seed: int,
    *,
    plans: list[WorkflowPlan] | None = None,
    options: CellOptions = CellOptions(),
) -> SimulationResult:
    """Simulate one strategy on the workload sampled from `seed`."""
    if plans is None:
        plans = generate_workload(config.workload, seed)
    simulation = Simulation(
        plans,
        config.instances,
        strategy,
        config.engine,
        seed=seed,
        perfect_prediction=config.perfect_prediction,
        accuracy_all_pairs=config.accuracy_all_pairs,
        log_decisions=options.decisions,
        log_events=options.events,
    )
    result = simulation.run()
    logger.debug(
        "{} seed {}: {} workflows, {} requests, {} preemptions, t_end={:.1f}",
        strategy.label,
        seed,
        len(result.workflows),
        len(result.requests),
        result.preempted_total,
        result.end_time,
    )
    return result


def _run_job(job: tuple[ExperimentConfig, StrategyConfig, int, CellOptions]) -> CellOutput:
    config, strategy, seed, options = job
    result = run_cell(config, strategy, seed, options=options)
    return CellOutput(
        metrics=compute_metrics(result, warmup=config.warmup, token_latency=config.token_latency),
        overhead=measure_overhead(result),
        result=result if options.keep_result else None,
    )


def run_experiment(
    config: ExperimentConfig,
    *,
    workers: int = 1,
    options: CellOptions = CellOptions(),
) -> ExperimentReport:
    """Run every strategy on every seed.

    Every strategy replays the same sampled workload for a given seed, so
    comparisons are paired. Cells are independent and may run in worker
    processes; results are collected in (strategy, seed) order either way.

    Args:
        config: Validated experiment config.
        workers: Worker processes; 1 runs everything in this process.
        options: What to keep from each run besides its metrics.
    """
    jobs = [
        (config, strategy, seed, options)
        for strategy in config.strategies
        for seed in config.seeds
    ]
    logger.info("Running {} cells with {} worker(s)", len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_job, jobs))
    else:
        outputs = [_run_job(job) for job in jobs]

    report = ExperimentReport(config=config)
    for (_, strategy, seed, _), output in zip(jobs, outputs):
        report.runs.append(output.metrics)
        report.overhead.append(output.overhead)
        if output.result is not None:
            report.results[(strategy.label, seed)] = output.result
    report.summaries = summarize(report.runs)
    report.comparisons = compare_strategies(report.runs, config.reference_label)
    return report


@dataclass(frozen=True)
class Calibration:
    """Arrival rate reaching a target queueing ratio."""

    rate: float
    queueing_ratio: float
    target: float
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "rate": round(self.rate, 6),
            "queueing_ratio": round(self.queueing_ratio, 6),
            "target": self.target,
            "evaluations": self.evaluations,
        }


def calibrate_load(
    config: ExperimentConfig,
    target: float,
    strategy: StrategyConfig | None = None,
    seed: int | None = None,
    *,
    tolerance: float = 0.02,
    max_evaluations: int = 24,
) -> Calibration:
    """Bisect the Poisson arrival rate until the queueing ratio is near `target`.

    The ratio grows with the rate, so the search first brackets the target
    by halving and doubling a starting rate, then bisects.

    Args:
        config: Experiment whose workload and instances are used.
        target: Queueing ratio to reach, in [0, 0.95].
        strategy: Strategy to calibrate with; the config's first by default.
        seed: Seed to calibrate with; the config's first by default.
        tolerance: Accept a ratio within this distance of the target.
        max_evaluations: Simulation budget.
    """
    if not 0.0 <= target <= 0.95:
        raise ValueError("target queueing ratio must be within [0, 0.95]")
    strategy = strategy or config.strategies[0]
    seed = config.seeds[0] if seed is None else seed
    evaluations = 0

    def ratio_at(rate: float) -> float:
        nonlocal evaluations
        evaluations += 1
        result = run_cell(config.with_rate(rate), strategy, seed)
        value = compute_metrics(result, warmup=config.warmup).queueing_ratio
        logger.info("rate {:.4f}/s -> queueing ratio {:.3f}", rate, value)
        return value

    rate = config.workload.arrival.rate or 1.0
    value = ratio_at(rate)
    best = (abs(value - target), rate, value)
    low, high = (None, rate) if value > target else (rate, None)
    while evaluations < max_evaluations and abs(value - target) > tolerance:
        if high is None:
            rate = rate * 2
        elif low is None:
            rate = rate / 2
        else:
            rate = (low + high) / 2
        value = ratio_at(rate)
        best = min(best, (abs(value - target), rate, value))
        if value > target:
            high = rate if high is None else min(high, rate)
        else:
            low = rate if low is None else max(low, rate)
    _, rate, value = best
    return Calibration(rate=rate, queueing_ratio=value, target=target, evaluations=evaluations)
