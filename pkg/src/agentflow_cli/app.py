"""Main Typer application and command registration."""

# Load .env file before any other imports
from dotenv import load_dotenv

load_dotenv()

# Replace loguru's default handler before any other imports trigger it
from agentflow_cli.state import configure_logging

configure_logging()

import typer

from agentflow_cli.commands import analyze, calibrate, priorities, run

app = typer.Typer(
    name="agentflow",
    help="Simulate workflow-aware scheduling of multi-agent LLM serving.",
    no_args_is_help=True,
)

app.command(name="run")(run.run)
app.command(name="analyze-trace")(analyze.analyze_trace)
app.command(name="priorities")(priorities.priorities)
app.command(name="calibrate")(calibrate.calibrate)


if __name__ == "__main__":
    app()
