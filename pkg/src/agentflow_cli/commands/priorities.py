"""Priorities command: replay a trace and dump every agent priority table."""

from pathlib import Path

import typer
from rich.console import Console

from agentflow.exceptions import AgentflowError
from agentflow.orchestrator import WorkflowOrchestrator
from agentflow_cli.commands import load_records
from agentflow_cli.formatting import fmt_float, output
from agentflow_cli.state import common_options

console = Console(stderr=True)

PRIORITY_COLUMNS = {
    "version": lambda r: r.version,
    "agent": lambda r: r.agent,
    "coordinate": lambda r: fmt_float(r.coordinate, 6),
    "anchor_distance": lambda r: fmt_float(r.anchor_distance, 6),
    "rank": lambda r: r.rank,
}


@common_options
def priorities(
    trace_path: Path = typer.Argument(..., help="Request trace (NDJSON)"),
    latest: bool = typer.Option(False, "--latest", help="Only print the last table"),
) -> None:
    """Replay TRACE_PATH in completion order and print each priority table built."""
    try:
        orchestrator = WorkflowOrchestrator()
        tables = list(orchestrator.replay(load_records(trace_path)))
    except AgentflowError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)

    if not tables:
        console.print("[yellow]No agent distribution converged; no priorities built.[/yellow]")
        return
    if latest:
        tables = tables[-1:]
    rows = [row for table in tables for row in table.rows()]
    output(rows, PRIORITY_COLUMNS, title="Agent priorities")
