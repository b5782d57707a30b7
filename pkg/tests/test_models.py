"""Tests for request records, trace files and status snapshots."""

import json

import pytest

from agentflow.exceptions import NotFoundError, TraceError, UnknownAgentError
from agentflow.models.common import EventKind
from agentflow.models.request import (
    MessageIdIssuer,
    PendingRequest,
    RequestRecord,
    new_message_id,
)
from agentflow.models.status import InstanceStatus, StatusSnapshot
from agentflow.trace import completion_order, group_by_message, read_trace, write_trace


def record(**overrides) -> RequestRecord:
    data = {
        "msg_id": "m-0",
        "agent": "Router",
        "upstream": None,
        "exec_start": 1.0,
        "exec_end": 2.5,
        "prompt_tokens": 100,
        "output_tokens": 20,
        "app_start": 0.5,
    }
    data.update(overrides)
    return RequestRecord(**data)


# ─── Request records ─────────────────────────────────────────────────────────


class TestRequestRecord:
    def test_latency(self):
        assert record().latency == pytest.approx(1.5)

    def test_from_dict_round_trip(self):
        r = record(upstream="Planner", queue_enter=0.8)

        parsed = RequestRecord.from_dict(r.to_dict())

        assert parsed == r

    def test_from_dict_missing_field(self):
        data = record().to_dict()
        del data["exec_end"]

        with pytest.raises(TraceError) as exc_info:
            RequestRecord.from_dict(data)

        assert "exec_end" in str(exc_info.value)

    def test_from_dict_bad_value(self):
        data = record().to_dict()
        data["prompt_tokens"] = "many"

        with pytest.raises(TraceError):
            RequestRecord.from_dict(data)

    def test_end_before_start_rejected(self):
        with pytest.raises(TraceError):
            record(exec_start=3.0, exec_end=2.0)

    def test_start_before_app_start_rejected(self):
        with pytest.raises(TraceError):
            record(app_start=1.5)

    def test_empty_upstream_rejected(self):
        with pytest.raises(TraceError):
            record(upstream="")

    def test_non_positive_tokens_rejected(self):
        with pytest.raises(TraceError):
            record(output_tokens=0)

    def test_queue_enter_after_start_rejected(self):
        with pytest.raises(TraceError):
            record(queue_enter=1.2)


class TestPendingRequest:
    def test_queue_enter_before_app_start_rejected(self):
        with pytest.raises(ValueError):
            PendingRequest(
                request_id="m-0/0",
                msg_id="m-0",
                agent="Router",
                prompt_tokens=10,
                app_start=5.0,
                queue_enter=4.0,
            )

    def test_non_positive_prompt_rejected(self):
        with pytest.raises(ValueError):
            PendingRequest(
                request_id="m-0/0",
                msg_id="m-0",
                agent="Router",
                prompt_tokens=0,
                app_start=0.0,
                queue_enter=0.0,
            )


class TestMessageIdIssuer:
    def test_ids_are_unique_and_ordered(self):
        issuer = MessageIdIssuer()

        ids = [new_message_id(issuer) for _ in range(3)]

        assert ids == ["m-0", "m-1", "m-2"]
        assert issuer.issued == 3

    def test_a_million_ids_are_distinct(self):
        issuer = MessageIdIssuer()

        ids = {issuer.issue() for _ in range(1_000_000)}

        assert len(ids) == 1_000_000
        assert issuer.issued == 1_000_000

    def test_prefix(self):
        assert MessageIdIssuer(prefix="run7").issue() == "run7-0"


# ─── Trace files ─────────────────────────────────────────────────────────────


class TestTraceFiles:
    def test_write_then_read(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        records = [record(), record(msg_id="m-1", exec_start=2.0, exec_end=4.0)]

        count = write_trace(path, records)

        assert count == 2
        assert read_trace(path) == records

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text("\n" + json.dumps(record().to_dict()) + "\n\n")

        assert len(read_trace(path)) == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceError):
            read_trace(tmp_path / "absent.jsonl")

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text(json.dumps(record().to_dict()) + "\n{not json\n")

        with pytest.raises(TraceError) as exc_info:
            read_trace(path)

        assert exc_info.value.line == 2
        assert ":2:" in str(exc_info.value)

    def test_invalid_span_reports_line(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        bad = record().to_dict() | {"exec_end": 0.9}
        path.write_text(json.dumps(bad) + "\n")

        with pytest.raises(TraceError) as exc_info:
            read_trace(path)

        assert exc_info.value.line == 1

    def test_non_object_line(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text("[1, 2]\n")

        with pytest.raises(TraceError):
            read_trace(path)

    def test_completion_order(self):
        records = [
            record(msg_id="a", exec_end=9.0),
            record(msg_id="b", exec_end=3.0),
            record(msg_id="a", agent="Math", upstream="Router", exec_end=4.0),
        ]

        groups = group_by_message(records)

        assert list(groups) == ["a", "b"]
        assert completion_order(groups) == ["b", "a"]


# ─── Status and enums ────────────────────────────────────────────────────────


class TestStatusSnapshot:
    def test_totals_and_lookup(self):
        snapshot = StatusSnapshot(
            time=1.0,
            instances=(
                InstanceStatus(instance=0, capacity=100, live_usage=50, preempted_total=2),
                InstanceStatus(instance=1, capacity=100, preempted_total=1),
            ),
        )

        assert snapshot.preempted_total == 3
        assert snapshot.get(0).utilization == pytest.approx(0.5)
        with pytest.raises(KeyError):
            snapshot.get(5)

    def test_to_dict(self):
        snapshot = StatusSnapshot(time=2.0, instances=(InstanceStatus(0, 10),), queued=4)

        data = snapshot.to_dict()

        assert data["queued"] == 4
        assert data["instances"][0]["capacity"] == 10


class TestEventKind:
    def test_completions_before_arrivals_before_rounds(self):
        assert EventKind.REQUEST_DONE.rank < EventKind.ARRIVAL.rank
        assert EventKind.PREFILL_DONE.rank < EventKind.ARRIVAL.rank
        assert EventKind.ARRIVAL.rank < EventKind.DISPATCH_ROUND.rank


class TestExceptions:
    def test_not_found_message(self):
        error = UnknownAgentError("Ghost")

        assert isinstance(error, NotFoundError)
        assert error.resource_type == "Agent"
        assert error.resource_id == "Ghost"
        assert "Ghost" in str(error)

    def test_trace_error_with_path_only(self):
        assert str(TraceError("bad", path="x.jsonl")) == "x.jsonl: bad"
