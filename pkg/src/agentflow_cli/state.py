"""Per-invocation CLI state: output format and log verbosity."""

import inspect
import sys
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from functools import wraps
from typing import TypeVar

import typer
from loguru import logger

F = TypeVar("F", bound=Callable)

VERBOSE_FORMAT = "<dim>{time:HH:mm:ss}</dim> | <level>{message}</level>"
QUIET_FORMAT = "<level>{message}</level>"


class OutputFormat(str, Enum):
    table = "table"
    json = "json"
    csv = "csv"


@dataclass
class CliState:
    format: OutputFormat = OutputFormat.table
    verbose: bool = False

    @property
    def machine_readable(self) -> bool:
        return self.format is not OutputFormat.table


config = CliState()


def configure_logging(verbose: bool = False) -> None:
    """Install the single stderr handler: WARNING by default, DEBUG when verbose."""
    logger.remove()
    if verbose:
        logger.add(sys.stderr, level="DEBUG", format=VERBOSE_FORMAT)
    else:
        logger.add(sys.stderr, level="WARNING", format=QUIET_FORMAT)


_VERBOSE = inspect.Parameter(
    "verbose",
    inspect.Parameter.KEYWORD_ONLY,
    default=typer.Option(False, "--verbose", "-v", help="Debug logs on stderr"),
    annotation=bool,
)
_FORMAT = inspect.Parameter(
    "format",
    inspect.Parameter.KEYWORD_ONLY,
    default=typer.Option(OutputFormat.table, "--format", help="Output format: table, json, csv"),
    annotation=OutputFormat,
)


def common_options(f: F) -> F:
    """Add --format and --verbose to a command.

    Typer reads the extended signature; the command itself never receives the
    two options, it reads them from `config`.
    """
    signature = inspect.signature(f)

    @wraps(f)
    def wrapper(*args, verbose: bool = False, format: OutputFormat = OutputFormat.table, **kw):
        config.format = format
        config.verbose = verbose
        configure_logging(verbose)
        return f(*args, **kw)

    wrapper.__signature__ = signature.replace(  # type: ignore[attr-defined]
        parameters=[*signature.parameters.values(), _VERBOSE, _FORMAT]
    )
    return wrapper  # type: ignore[return-value]
