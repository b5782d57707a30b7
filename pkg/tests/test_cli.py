"""Tests for the agentflow CLI commands."""

import json

import pytest
from typer.testing import CliRunner

from agentflow.models.request import RequestRecord
from agentflow.trace import write_trace
from agentflow_cli.app import app

runner = CliRunner()


def experiment_file(tmp_path):
    data = {
        "name": "cli",
        "workload": {
            "duration": 20,
            "arrival": {"kind": "poisson", "rate": 0.5},
            "applications": [
                {
                    "name": "solo",
                    "entry": "Solo",
                    "agents": [
                        {
                            "name": "Solo",
                            "prompt_len": {"kind": "constant", "value": 100},
                            "output_len": {"kind": "constant", "value": 30},
                        }
                    ],
                }
            ],
        },
        "instances": [
            {"id": 0, "capacity": 1000, "decode_rate": 30, "prefill_rate": 1000, "max_batch": 4}
        ],
        "strategies": [
            {"scheduler": "workflow_aware", "dispatcher": "time_slot"},
            {"scheduler": "fcfs", "dispatcher": "round_robin"},
        ],
        "seeds": [0, 1],
    }
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def qa_trace(tmp_path):
    records = []
    for i in range(100):
        expert, length = ("Math", 4.0) if i % 3 else ("Humanities", 8.0)
        records.append(
            RequestRecord(
                msg_id=f"m-{i}",
                agent="Router",
                upstream=None,
                exec_start=0.0,
                exec_end=1.0,
                prompt_tokens=100,
                output_tokens=10,
                app_start=0.0,
            )
        )
        records.append(
            RequestRecord(
                msg_id=f"m-{i}",
                agent=expert,
                upstream="Router",
                exec_start=1.0,
                exec_end=1.0 + length,
                prompt_tokens=100,
                output_tokens=80,
                app_start=0.0,
            )
        )
    path = tmp_path / "trace.jsonl"
    write_trace(path, records)
    return path


# ─── run ─────────────────────────────────────────────────────────────────────


class TestRun:
    def test_writes_results(self, tmp_path):
        out = tmp_path / "results"

        result = runner.invoke(
            app, ["run", str(experiment_file(tmp_path)), "--out", str(out), "--trace"]
        )

        assert result.exit_code == 0
        assert (out / "metrics.csv").exists()
        assert (out / "summary.txt").exists()
        assert (out / "trace-fcfs+round_robin-1.jsonl").exists()
        assert not (out / "overhead.csv").exists()

    def test_csv_summary(self, tmp_path):
        result = runner.invoke(
            app,
            [
                "run",
                str(experiment_file(tmp_path)),
                "--out",
                str(tmp_path / "results"),
                "--format",
                "csv",
            ],
        )

        assert result.exit_code == 0
        assert "Strategy,Seeds,Mean s/token" in result.stdout
        assert "fcfs+round_robin,2," in result.stdout

    def test_missing_config(self, tmp_path):
        result = runner.invoke(
            app, ["run", str(tmp_path / "absent.json"), "--out", str(tmp_path / "out")]
        )

        assert result.exit_code == 1
        assert not (tmp_path / "out").exists()

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"name": "x"}))

        result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "out")])

        assert result.exit_code == 1


# ─── analyze-trace ───────────────────────────────────────────────────────────


class TestAnalyzeTrace:
    def test_report(self, qa_trace):
        result = runner.invoke(app, ["analyze-trace", str(qa_trace)])

        assert result.exit_code == 0
        assert "Router -> Math" in result.stdout
        assert "Paths (feedback at most 3x):" in result.stdout

    def test_json(self, qa_trace):
        result = runner.invoke(app, ["analyze-trace", str(qa_trace), "--format", "json"])

        data = json.loads(result.stdout)
        assert result.exit_code == 0
        assert data["paths"] == {"Humanities": 1, "Math": 1, "Router": 2}

    def test_edges_as_csv(self, qa_trace):
        result = runner.invoke(app, ["analyze-trace", str(qa_trace), "--format", "csv"])

        lines = result.stdout.splitlines()
        assert lines[0] == "source,target,observations,feedback"
        assert len(lines) == 3

    def test_distributions(self, qa_trace):
        result = runner.invoke(
            app, ["analyze-trace", str(qa_trace), "--distributions", "--format", "csv"]
        )

        assert result.exit_code == 0
        assert "Router,remaining,100," in result.stdout

    def test_bad_trace(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text("{broken\n")

        result = runner.invoke(app, ["analyze-trace", str(path)])

        assert result.exit_code == 1


# ─── priorities ──────────────────────────────────────────────────────────────


class TestPriorities:
    def test_latest_table(self, qa_trace):
        result = runner.invoke(app, ["priorities", str(qa_trace), "--latest", "--format", "csv"])

        lines = result.stdout.splitlines()
        assert result.exit_code == 0
        assert lines[0] == "version,agent,coordinate,anchor_distance,rank"
        assert {line.split(",")[1] for line in lines[1:]} == {"Router", "Math", "Humanities"}

    def test_shortest_remaining_ranked_first(self, qa_trace):
        result = runner.invoke(app, ["priorities", str(qa_trace), "--latest", "--format", "json"])

        rows = json.loads(result.stdout)
        ranked = [r["agent"] for r in sorted(rows, key=lambda r: r["rank"])]
        assert ranked == ["Math", "Router", "Humanities"]

    def test_too_few_instances(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        write_trace(
            path,
            [
                RequestRecord(
                    msg_id="m-0",
                    agent="Solo",
                    upstream=None,
                    exec_start=0.0,
                    exec_end=1.0,
                    prompt_tokens=10,
                    output_tokens=10,
                    app_start=0.0,
                )
            ],
        )

        result = runner.invoke(app, ["priorities", str(path), "--format", "json"])

        assert result.exit_code == 0
        assert "[" not in result.stdout


# ─── calibrate ───────────────────────────────────────────────────────────────


class TestCalibrate:
    def test_target_out_of_range(self, tmp_path):
        result = runner.invoke(
            app, ["calibrate", str(experiment_file(tmp_path)), "--target", "0.99"]
        )

        assert result.exit_code != 0

    def test_json_result(self, tmp_path):
        result = runner.invoke(
            app,
            [
                "calibrate",
                str(experiment_file(tmp_path)),
                "--target",
                "0.0",
                "--scheduler",
                "fcfs",
                "--tolerance",
                "0.5",
                "--format",
                "json",
            ],
        )

        [row] = json.loads(result.stdout)
        assert result.exit_code == 0
        assert row["target"] == 0.0
        assert row["evaluations"] >= 1
