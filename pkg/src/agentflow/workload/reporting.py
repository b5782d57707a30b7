"""CSV and text outputs of an experiment."""

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path

from loguru import logger

from agentflow.trace import write_trace
from agentflow.workload.experiment import ExperimentReport


def write_csv(path: Path, rows: Iterable[dict], columns: Sequence[str] | None = None) -> int:
    """Write dict rows with a header; returns the number of rows.

    Column order is `columns`, or the keys of the first row. Lines end with
    `\\n` on every platform so reruns are byte-identical.
    """
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with Path(path).open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return len(rows)


def format_summary(report: ExperimentReport) -> str:
    """Plain-text digest of the per-strategy means and sign tests."""
    config = report.config
    lines = [
        f"Experiment: {config.name}",
        f"Seeds: {', '.join(str(s) for s in config.seeds)}",
        f"Instances: {len(config.instances)}",
        f"Token latency: per {config.token_latency}",
        "",
        f"{'strategy':<34} {'mean s/tok':>11} {'p90 s/tok':>11} {'queue ratio':>11} "
        f"{'preempt':>8} {'accuracy':>9}",
    ]
    for s in report.summaries:
        accuracy = "-" if s.sorting_accuracy is None else f"{s.sorting_accuracy:.3f}"
        lines.append(
            f"{s.label:<34} {s.mean_token_latency:>11.4f} {s.p90_token_latency:>11.4f} "
            f"{s.queueing_ratio:>11.3f} {s.preemption_rate:>8.3f} {accuracy:>9}"
        )
    if report.comparisons:
        lines.extend(["", f"Paired sign tests ({config.reference_label} lower is better):"])
        for c in report.comparisons:
            lines.append(
                f"  vs {c.other}: {c.wins} wins, {c.losses} losses, {c.ties} ties, "
                f"improvement {c.improvement:.1%}, p={c.p_value:.4f}"
            )
    unfinished = sum(r.unfinished for r in report.runs)
    if unfinished:
        lines.extend(["", f"Warning: {unfinished} workflow instances did not finish"])
    return "\n".join(lines) + "\n"


def write_report(
    report: ExperimentReport,
    out_dir: Path,
    *,
    decisions: bool = False,
    events: bool = False,
    traces: bool = False,
    overhead: bool = False,
) -> list[Path]:
    """Write every output file of `report` under `out_dir`.

    Args:
        report: Finished experiment.
        out_dir: Target directory, created if missing.
        decisions: Also write the dispatch decision log.
        events: Also write the event log (NDJSON).
        traces: Also write each run's request trace (NDJSON).
        overhead: Also write decision timings (not reproducible between runs).

    Returns:
        Paths written, in order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, rows: Iterable[dict]) -> None:
        path = out_dir / name
        count = write_csv(path, rows)
        logger.debug("Wrote {} rows to {}", count, path)
        written.append(path)

    emit("metrics.csv", (s.to_row() for s in report.summaries))
    emit("per_seed.csv", (r.to_row() for r in report.runs))
    emit("per_agent.csv", (a.to_row(r.label, r.seed) for r in report.runs for a in r.agents))
    emit("comparisons.csv", (c.to_row() for c in report.comparisons))

    summary_path = out_dir / "summary.txt"
    summary_path.write_text(format_summary(report))
    written.append(summary_path)

    results = sorted(report.results.items())
    if decisions:
        emit(
            "decisions.csv",
            (
                {"strategy": label, "seed": seed, **row}
                for (label, seed), result in results
                for row in result.decisions
            ),
        )
    if events:
        path = out_dir / "events.jsonl"
        with path.open("w") as f:
            for (label, seed), result in results:
                for event in result.events:
                    f.write(json.dumps({"strategy": label, "seed": seed, **event}) + "\n")
        written.append(path)
    if traces:
        for (label, seed), result in results:
            path = out_dir / f"trace-{label}-{seed}.jsonl"
            write_trace(path, result.records())
            written.append(path)
    if overhead:
        emit("overhead.csv", (o.to_row() for o in report.overhead))
    return written
