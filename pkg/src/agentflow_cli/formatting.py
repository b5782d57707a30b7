"""Table, JSON and CSV output for CLI commands."""

import csv
import json
import sys
from collections.abc import Callable, Sequence
from typing import Any

from rich.console import Console
from rich.table import Table

from agentflow_cli.state import OutputFormat, config

console = Console()

Columns = dict[str, Callable[[Any], str]]


def fmt_float(value: float | None, digits: int = 4) -> str:
    if value is None or value != value:
        return "-"
    return f"{value:.{digits}f}"


def _json_rows(items: Sequence, columns: Columns) -> list[dict]:
    if items and hasattr(items[0], "to_dict"):
        return [item.to_dict() for item in items]
    return [{name: get(item) for name, get in columns.items()} for item in items]


def output(items: Sequence, columns: Columns, title: str = "") -> None:
    """Print `items` in the format chosen with --format.

    JSON uses each item's `to_dict()` when it has one; table and CSV use
    `columns`, which map a header to an accessor returning a string.
    """
    if config.format is OutputFormat.json:
        print(json.dumps(_json_rows(items, columns), indent=2))
        return
    if config.machine_readable:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([get(item) for get in columns.values()] for item in items)
        return

    table = Table(title=title or None)
    for name in columns:
        table.add_column(name, overflow="fold")
    for item in items:
        table.add_row(*(str(get(item)) for get in columns.values()))
    console.print(table)


def output_text(text: str, data: dict | list) -> None:
    """Print a plain-text report, or `data` as JSON when --format json is set."""
    if config.format is OutputFormat.json:
        print(json.dumps(data, indent=2))
    else:
        print(text)
