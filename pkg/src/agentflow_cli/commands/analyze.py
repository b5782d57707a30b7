"""Analyze-trace command: rebuild the workflow graph from a request trace."""

from pathlib import Path

import typer
from rich.console import Console

from agentflow.exceptions import AgentflowError
from agentflow.orchestrator import WorkflowOrchestrator
from agentflow.workflow.graph import WorkflowGraph, downstream_paths
from agentflow_cli.commands import load_records
from agentflow_cli.formatting import fmt_float, output, output_text
from agentflow_cli.state import OutputFormat, common_options, config

console = Console(stderr=True)

EDGE_COLUMNS = {
    "source": lambda e: e.source,
    "target": lambda e: e.target,
    "observations": lambda e: e.observations,
    "feedback": lambda e: e.feedback,
}

DISTRIBUTION_COLUMNS = {
    "agent": lambda d: d.agent,
    "kind": lambda d: d.kind,
    "count": lambda d: d.count,
    "min": lambda d: fmt_float(d.min, 3),
    "median": lambda d: fmt_float(d.median, 3),
    "mode": lambda d: fmt_float(d.mode, 3),
    "p90": lambda d: fmt_float(d.p90, 3),
    "max": lambda d: fmt_float(d.max, 3),
    "converged": lambda d: d.converged,
}


def path_counts(graph: WorkflowGraph, max_loop: int) -> dict[str, int]:
    """Number of downstream paths from each agent, feedback loops bounded."""
    return {agent: len(downstream_paths(graph, agent, max_loop)) for agent in sorted(graph.nodes)}


@common_options
def analyze_trace(
    trace_path: Path = typer.Argument(..., help="Request trace (NDJSON)"),
    max_loop: int = typer.Option(
        None, "--max-loop", min=1, help="Feedback iterations per path when counting paths"
    ),
    distributions: bool = typer.Option(
        False, "--distributions", help="Print per-agent latency distributions instead"
    ),
) -> None:
    """Reconstruct the workflow graph of TRACE_PATH."""
    try:
        records = load_records(trace_path)
        orchestrator = WorkflowOrchestrator()
        for _ in orchestrator.replay(records):
            pass
        graph = orchestrator.graph
        loops = max_loop or orchestrator.settings.max_loop
        paths = path_counts(graph, loops)
    except AgentflowError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)

    if distributions:
        output(orchestrator.profiler.summaries(), DISTRIBUTION_COLUMNS, title="Distributions")
        return
    if config.format == OutputFormat.csv:
        output(list(graph.edges), EDGE_COLUMNS)
        return
    lines = [graph.to_report(), f"Paths (feedback at most {loops}x):"]
    lines.extend(f"  {agent}: {count}" for agent, count in paths.items())
    output_text("\n".join(lines), {**graph.to_dict(), "paths": paths})
