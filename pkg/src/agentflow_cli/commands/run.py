"""Run command: simulate every strategy of an experiment and write the results."""

from pathlib import Path

import typer
from rich.console import Console

from agentflow.exceptions import AgentflowError
from agentflow.workload.experiment import CellOptions, run_experiment
from agentflow.workload.reporting import write_report
from agentflow_cli.commands import load_config
from agentflow_cli.formatting import fmt_float, output
from agentflow_cli.state import common_options

console = Console(stderr=True)

SUMMARY_COLUMNS = {
    "Strategy": lambda s: s.label,
    "Seeds": lambda s: s.seeds,
    "Mean s/token": lambda s: fmt_float(s.mean_token_latency),
    "P90 s/token": lambda s: fmt_float(s.p90_token_latency),
    "P99 s/token": lambda s: fmt_float(s.p99_token_latency),
    "Queueing": lambda s: fmt_float(s.queueing_ratio, 3),
    "Preempted": lambda s: fmt_float(s.preemption_rate, 3),
    "Accuracy": lambda s: fmt_float(s.sorting_accuracy, 3),
}


@common_options
def run(
    config_path: Path = typer.Argument(..., help="Experiment config (JSON)"),
    out: Path = typer.Option(..., "--out", "-o", help="Directory for result files"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Worker processes"),
    decision_log: bool = typer.Option(False, "--decision-log", help="Write decisions.csv"),
    event_log: bool = typer.Option(False, "--event-log", help="Write events.jsonl"),
    trace: bool = typer.Option(False, "--trace", help="Write one request trace per run"),
    overhead: bool = typer.Option(False, "--overhead", help="Write decision timings"),
) -> None:
    """Simulate every strategy on every seed of CONFIG_PATH."""
    try:
        config = load_config(config_path)
        options = CellOptions(
            decisions=decision_log,
            events=event_log,
            keep_result=decision_log or event_log or trace,
        )
        report = run_experiment(config, workers=workers, options=options)
        written = write_report(
            report,
            out,
            decisions=decision_log,
            events=event_log,
            traces=trace,
            overhead=overhead,
        )
    except AgentflowError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)

    output(report.summaries, SUMMARY_COLUMNS, title=config.name)
    console.print(f"[green]Wrote {len(written)} files to {out}[/green]")
