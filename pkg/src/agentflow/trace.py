"""Newline-delimited JSON trace files, one RequestRecord per line."""

import json
from collections import defaultdict
from collections.abc import Iterable
from pathlib import Path

from loguru import logger

from agentflow.exceptions import TraceError
from agentflow.models.common import MessageId
from agentflow.models.request import RequestRecord


def read_trace(path: Path) -> list[RequestRecord]:
    """Load every record of a trace file.

    Blank lines are skipped.

    Raises:
        TraceError: If the file is missing or a line is not a valid record.
    """
    if not path.exists():
        raise TraceError("trace file not found", path=str(path))

    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceError(f"invalid JSON: {e.msg}", path=str(path), line=lineno) from e
            if not isinstance(data, dict):
                raise TraceError("record must be a JSON object", path=str(path), line=lineno)
            try:
                records.append(RequestRecord.from_dict(data))
            except TraceError as e:
                raise TraceError(str(e), path=str(path), line=lineno) from e

    logger.debug("Read {} records from {}", len(records), path)
    return records


def write_trace(path: Path, records: Iterable[RequestRecord]) -> int:
    """Write records as one JSON object per line. Returns the record count."""
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def group_by_message(records: Iterable[RequestRecord]) -> dict[MessageId, list[RequestRecord]]:
    """Group records by workflow instance, preserving first-seen message order."""
    groups: dict[MessageId, list[RequestRecord]] = defaultdict(list)
    for record in records:
        groups[record.msg_id].append(record)
    return dict(groups)


def completion_order(groups: dict[MessageId, list[RequestRecord]]) -> list[MessageId]:
    """Message ids ordered by workflow finish time, then id."""
    return sorted(groups, key=lambda m: (max(r.exec_end for r in groups[m]), m))
