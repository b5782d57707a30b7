"""Calibrate command: find the arrival rate giving a target queueing ratio."""

from pathlib import Path

import typer
from rich.console import Console

from agentflow.config import StrategyConfig
from agentflow.exceptions import AgentflowError
from agentflow.models.common import DispatcherKind, SchedulerKind
from agentflow.workload.experiment import calibrate_load
from agentflow_cli.commands import load_config
from agentflow_cli.formatting import fmt_float, output
from agentflow_cli.state import common_options

console = Console(stderr=True)

CALIBRATION_COLUMNS = {
    "rate": lambda c: fmt_float(c.rate, 4),
    "queueing_ratio": lambda c: fmt_float(c.queueing_ratio, 4),
    "target": lambda c: c.target,
    "evaluations": lambda c: c.evaluations,
}


@common_options
def calibrate(
    config_path: Path = typer.Argument(..., help="Experiment config (JSON)"),
    target: float = typer.Option(..., "--target", "-t", min=0.0, max=0.95, help="Queueing ratio"),
    scheduler: SchedulerKind = typer.Option(None, "--scheduler", help="Scheduler to use"),
    dispatcher: DispatcherKind = typer.Option(None, "--dispatcher", help="Dispatcher to use"),
    seed: int = typer.Option(None, "--seed", help="Seed (default: first of the config)"),
    tolerance: float = typer.Option(0.02, "--tolerance", min=0.0, help="Accepted distance"),
) -> None:
    """Bisect the Poisson arrival rate of CONFIG_PATH until queueing reaches TARGET."""
    try:
        config = load_config(config_path)
        base = config.strategies[0]
        strategy = StrategyConfig(
            scheduler=scheduler or base.scheduler,
            dispatcher=dispatcher or base.dispatcher,
        )
        result = calibrate_load(config, target, strategy, seed, tolerance=tolerance)
    except AgentflowError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)

    if abs(result.queueing_ratio - target) > tolerance:
        console.print(
            f"[yellow]Closest ratio {result.queueing_ratio:.3f} is outside the tolerance[/yellow]"
        )
    output([result], CALIBRATION_COLUMNS, title=f"Calibration ({strategy.label})")
