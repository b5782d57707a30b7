"""CLI commands."""

from pathlib import Path

from loguru import logger

from agentflow.config import ExperimentConfig
from agentflow.models.request import RequestRecord
from agentflow.trace import read_trace


def load_config(path: Path) -> ExperimentConfig:
    """Read and validate an experiment file."""
    config = ExperimentConfig.from_file(path)
    logger.debug(
        "Loaded {}: {} strategies x {} seeds on {} instances",
        path,
        len(config.strategies),
        len(config.seeds),
        len(config.instances),
    )
    return config


def load_records(path: Path) -> list[RequestRecord]:
    records = read_trace(path)
    if not records:
        logger.warning("{} contains no records", path)
    return records
