"""Ready-made experiments matching the bundled config files."""

from agentflow.config import EngineSettings, ExperimentConfig, InstanceProfile, StrategyConfig
from agentflow.models.common import DispatcherKind, SchedulerKind
from agentflow.workload.templates import colocated_workload, heavy_light_workload

COLOCATED_ENGINE = {
    "convergence_threshold": 0.1,
    "min_samples": 8,
    "priority_refresh_instances": 64,
    "accuracy_sample_every": 10,
}


def _strategies(*labels: str) -> list[StrategyConfig]:
    return [StrategyConfig.parse(label) for label in labels]


def colocated_experiment(
    rate: float = 0.85, duration: float = 1200.0, seeds: list[int] | None = None
) -> ExperimentConfig:
    """QA, RG and CG sharing four identical instances.

    The first strategy is the reference for the sign tests. Agent profiles
    converge at a looser threshold than the engine default and the priority
    table is refreshed more often. The first quarter of the run is warm-up.
    """
    instances = [
        InstanceProfile(
            id=i, capacity=8000, decode_rate=25.0, prefill_rate=20000.0, max_batch=48
        )
        for i in range(4)
    ]
    return ExperimentConfig(
        name="colocated",
        workload=colocated_workload(rate=rate, duration=duration),
        instances=instances,
        strategies=_strategies(
            "workflow_aware+time_slot",
            "fcfs+round_robin",
            "topo_depth+round_robin",
            "fcfs+time_slot",
            "topo_depth+time_slot",
            "oracle+time_slot",
            "wo_priority+time_slot",
            "workflow_aware+wo_packing",
        ),
        seeds=seeds if seeds is not None else list(range(10)),
        engine=EngineSettings(**COLOCATED_ENGINE),
        warmup=duration / 4,
    )


def preemption_experiment(
    rate: float = 0.5, duration: float = 300.0, seeds: list[int] | None = None
) -> ExperimentConfig:
    """Heavy and light requests on two instances, comparing the dispatchers."""
    instances = [
        InstanceProfile(
            id=i, capacity=4096, decode_rate=25.0, prefill_rate=20000.0, max_batch=32
        )
        for i in range(2)
    ]
    strategies = [
        StrategyConfig(scheduler=SchedulerKind.FCFS, dispatcher=kind)
        for kind in (
            DispatcherKind.TIME_SLOT,
            DispatcherKind.ROUND_ROBIN,
            DispatcherKind.STATIC_THRESHOLD,
            DispatcherKind.WO_PACKING,
        )
    ]
    return ExperimentConfig(
        name="preemption",
        workload=heavy_light_workload(rate=rate, duration=duration),
        instances=instances,
        strategies=strategies,
        seeds=seeds if seeds is not None else [0, 1, 2],
    )
