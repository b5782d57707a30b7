"""Tests for agent priorities, the ready queue, baselines and sorting accuracy."""

import numpy as np
import pytest

from agentflow.config import EngineSettings
from agentflow.exceptions import DistributionError, NoConvergedDistributionsError
from agentflow.models.request import PendingRequest, RequestRecord
from agentflow.orchestrator import WorkflowOrchestrator
from agentflow.profiling import EmpiricalDistribution
from agentflow.scheduling import (
    ANCHOR,
    AppStartPolicy,
    DistanceCache,
    DistanceMatrix,
    FCFSPolicy,
    OraclePolicy,
    PriorityTable,
    ReadyQueue,
    TopoDepthPolicy,
    WorkflowAwarePolicy,
    build_distance_matrix,
    mds_embed_1d,
    oracle_schedule,
    pairwise_sorting_accuracy,
    single_server_queueing,
    topo_depth_priority,
)
from agentflow.workflow import WorkflowAnalyzer


def converged(*samples: float) -> EmpiricalDistribution:
    return EmpiricalDistribution.from_samples(samples, converged=True)


def pending(
    request_id: str, agent: str, queue_enter: float = 0.0, app_start: float = 0.0
) -> PendingRequest:
    return PendingRequest(
        request_id=request_id,
        msg_id=f"msg-{request_id}",
        agent=agent,
        prompt_tokens=10,
        app_start=app_start,
        queue_enter=queue_enter,
    )


def call(msg: str, agent: str, upstream: str | None, start: float, end: float) -> RequestRecord:
    return RequestRecord(
        msg_id=msg,
        agent=agent,
        upstream=upstream,
        exec_start=start,
        exec_end=end,
        prompt_tokens=10,
        output_tokens=10,
        app_start=start if upstream is None else 0.0,
    )


def router_math_trace(instances: int) -> list[RequestRecord]:
    records = []
    for i in range(instances):
        t = 10.0 * i
        records.append(call(f"m-{i}", "Router", None, t, t + 1.0))
        records.append(
            RequestRecord(
                msg_id=f"m-{i}",
                agent="Math",
                upstream="Router",
                exec_start=t + 1.0,
                exec_end=t + 5.0,
                prompt_tokens=10,
                output_tokens=10,
                app_start=t,
            )
        )
    return records


def line_matrix(positions: np.ndarray) -> DistanceMatrix:
    """Distances between points on a line; the last point is the anchor."""
    labels = (*(f"a{i}" for i in range(positions.size - 1)), ANCHOR)
    return DistanceMatrix(labels=labels, d=np.abs(positions[:, None] - positions[None, :]))


# ─── Distance matrix and embedding ───────────────────────────────────────────


class TestDistanceMatrix:
    def test_anchor_is_last_and_holds_means(self):
        matrix = build_distance_matrix({"B": converged(4.0, 6.0), "A": converged(1.0)})

        assert matrix.labels == ("A", "B", ANCHOR)
        assert matrix.distance("A", ANCHOR) == pytest.approx(1.0)
        assert matrix.distance("B", ANCHOR) == pytest.approx(5.0)
        assert matrix.distance("A", "B") == pytest.approx(4.0)

    def test_unconverged_agents_skipped(self):
        dists = {
            "A": converged(1.0),
            "B": EmpiricalDistribution.from_samples([3.0]),
        }

        matrix = build_distance_matrix(dists)

        assert matrix.agents == ("A",)

    def test_nothing_converged(self):
        with pytest.raises(NoConvergedDistributionsError):
            build_distance_matrix({"A": EmpiricalDistribution.from_samples([1.0])})

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(ValueError):
            DistanceMatrix(labels=("A", ANCHOR), d=np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_matrix_is_read_only(self):
        matrix = build_distance_matrix({"A": converged(1.0)})

        with pytest.raises(ValueError):
            matrix.d[0, 1] = 5.0

    def test_cache_reuses_unchanged_pairs(self):
        dists = {"A": converged(1.0), "B": converged(2.0), "C": converged(3.0)}
        cache = DistanceCache()

        build_distance_matrix(dists, cache)
        build_distance_matrix(dists, cache)

        assert cache.misses == 3
        assert cache.hits == 3

    def test_cache_recomputes_changed_agent(self):
        dists = {"A": converged(1.0), "B": converged(2.0), "C": converged(3.0)}
        cache = DistanceCache()
        build_distance_matrix(dists, cache)

        dists["C"].add(5.0)
        build_distance_matrix(dists, cache)

        assert cache.misses == 5
        assert cache.hits == 1


class TestMdsEmbedding:
    def test_collinear_distances_recovered(self):
        dists = {"Short": converged(1.0), "Mid": converged(5.0), "Long": converged(10.0)}

        table = mds_embed_1d(build_distance_matrix(dists), version=3)

        assert table.version == 3
        assert table.anchor_distance("Short") == pytest.approx(1.0)
        assert table.anchor_distance("Mid") == pytest.approx(5.0)
        assert table.anchor_distance("Long") == pytest.approx(10.0)
        assert table.ranking() == ["Short", "Mid", "Long"]

    def test_anchor_not_on_positive_side(self):
        dists = {"A": converged(2.0), "B": converged(7.0)}

        table = mds_embed_1d(build_distance_matrix(dists))

        assert table.anchor_coord <= 0

    def test_single_agent(self):
        table = mds_embed_1d(build_distance_matrix({"A": converged(3.0)}))

        assert table.anchor_distance("A") == pytest.approx(3.0)

    def test_degenerate_matrix_gives_one_class(self):
        table = mds_embed_1d(build_distance_matrix({"A": converged(0.0), "B": converged(0.0)}))

        assert table.priority_of("A") == table.priority_of("B") == 0.0

    def test_random_collinear_configurations_are_isometric(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            positions = rng.uniform(-50.0, 50.0, rng.integers(2, 17))
            matrix = line_matrix(positions)

            table = mds_embed_1d(matrix)

            coords = np.array([*(table.coord[a] for a in matrix.agents), table.anchor_coord])
            recovered = np.abs(coords[:, None] - coords[None, :])
            assert np.allclose(recovered, matrix.d, rtol=0.0, atol=1e-6 * matrix.d.max())

    def test_mirrored_configuration_gives_same_priorities(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            positions = rng.uniform(0.0, 80.0, rng.integers(3, 17))

            table = mds_embed_1d(line_matrix(positions))
            mirrored = mds_embed_1d(line_matrix(-positions))

            assert mirrored.ranking() == table.ranking()
            for agent in table.coord:
                assert mirrored.anchor_distance(agent) == pytest.approx(
                    table.anchor_distance(agent), rel=1e-6
                )

    def test_point_masses_ranked_by_latency(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            values = rng.uniform(0.5, 100.0, rng.integers(1, 16))
            dists = {f"a{i}": converged(float(v)) for i, v in enumerate(values)}

            table = mds_embed_1d(build_distance_matrix(dists))

            assert table.ranking() == sorted(dists, key=lambda a: dists[a].mean)

    def test_anchor_only_rejected(self):
        matrix = DistanceMatrix(labels=(ANCHOR,), d=np.zeros((1, 1)))

        with pytest.raises(DistributionError):
            mds_embed_1d(matrix)


class TestPriorityTable:
    @pytest.fixture
    def table(self):
        return PriorityTable.from_coordinates({"A": -1.0, "B": 2.0, "C": 6.0}, anchor_coord=-2.0)

    def test_priorities(self, table):
        assert table.priority_of("A") == pytest.approx(1.0)
        assert table.priority_of("C") == pytest.approx(8.0)

    def test_unknown_agent_gets_median(self, table):
        assert table.anchor_distance("Ghost") is None
        assert table.priority_of("Ghost") == pytest.approx(4.0)

    def test_rank_and_rows(self, table):
        rows = table.rows()

        assert table.rank("B") == 2
        assert [r.agent for r in rows] == ["A", "B", "C"]
        assert rows[2].to_dict()["anchor_distance"] == pytest.approx(8.0)

    def test_empty_table(self):
        table = PriorityTable()

        assert len(table) == 0
        assert table.priority_of("A") == 0.0


# ─── Ready queue ─────────────────────────────────────────────────────────────


class TestReadyQueue:
    def test_fcfs_order(self):
        queue = ReadyQueue(FCFSPolicy())
        for rid, t in [("b", 2.0), ("a", 1.0), ("c", 3.0)]:
            queue.enqueue(pending(rid, "X", queue_enter=t))

        assert [r.request_id for r in queue] == ["a", "b", "c"]
        assert queue.dequeue().request_id == "a"
        assert len(queue) == 2
        assert "a" not in queue

    def test_duplicate_rejected(self):
        queue = ReadyQueue(FCFSPolicy())
        queue.enqueue(pending("a", "X"))

        with pytest.raises(ValueError):
            queue.enqueue(pending("a", "X"))

    def test_empty_dequeue(self):
        queue = ReadyQueue(FCFSPolicy())

        assert queue.peek() is None
        with pytest.raises(IndexError):
            queue.dequeue()

    def test_app_start_policy(self):
        queue = ReadyQueue(AppStartPolicy())
        queue.enqueue(pending("late", "X", queue_enter=1.0, app_start=1.0))
        queue.enqueue(pending("early", "Y", queue_enter=5.0, app_start=0.0))

        assert queue.peek().request_id == "early"

    def test_workflow_aware_without_table_is_fcfs(self):
        queue = ReadyQueue(WorkflowAwarePolicy(lambda: None))
        queue.enqueue(pending("b", "Long", queue_enter=2.0))
        queue.enqueue(pending("a", "Short", queue_enter=1.0))

        assert [r.request_id for r in queue] == ["a", "b"]

    def test_workflow_aware_orders_by_agent_then_app_start(self):
        table = PriorityTable.from_coordinates({"Short": -1.0, "Long": 5.0}, anchor_coord=-2.0)
        queue = ReadyQueue(WorkflowAwarePolicy(lambda: table))
        queue.enqueue(pending("l", "Long", queue_enter=0.0, app_start=0.0))
        queue.enqueue(pending("s2", "Short", queue_enter=3.0, app_start=2.0))
        queue.enqueue(pending("s1", "Short", queue_enter=4.0, app_start=1.0))

        assert [r.request_id for r in queue] == ["s1", "s2", "l"]

    def test_resorts_when_table_changes(self):
        tables = {"current": None}
        queue = ReadyQueue(WorkflowAwarePolicy(lambda: tables["current"]))
        queue.enqueue(pending("l", "Long", queue_enter=0.0))
        queue.enqueue(pending("s", "Short", queue_enter=1.0))
        assert queue.peek().request_id == "l"

        tables["current"] = PriorityTable.from_coordinates(
            {"Short": 1.0, "Long": 9.0}, anchor_coord=0.0, version=1
        )

        assert queue.peek().request_id == "s"
        assert queue.resorts == 1

    def test_oracle_policy(self):
        queue = ReadyQueue(OraclePolicy({"x": 8.0, "y": 4.0, "z": 1.0}))
        for i, rid in enumerate("xyz"):
            queue.enqueue(pending(rid, rid.upper(), queue_enter=float(i)))

        assert [r.request_id for r in queue] == ["z", "y", "x"]


# ─── Baselines ───────────────────────────────────────────────────────────────


class TestBaselines:
    """Three queued requests on one server.

    X needs 5 s and sits two stages from the end of its workflow (8 s left),
    Y needs 4 s and Z 1 s, both in the last stage.
    """

    EXEC = {"x": 5.0, "y": 4.0, "z": 1.0}
    REMAINING = {"x": 8.0, "y": 4.0, "z": 1.0}

    @pytest.fixture
    def graph(self):
        records = [
            call("m-0", "X", None, 0.0, 5.0),
            call("m-0", "W", "X", 5.0, 8.0),
            call("m-1", "Y", None, 0.0, 4.0),
            call("m-2", "Z", None, 0.0, 1.0),
        ]
        return WorkflowAnalyzer().ingest_all(records)

    @pytest.fixture
    def requests(self):
        return [pending(rid, rid.upper(), queue_enter=float(i)) for i, rid in enumerate("xyz")]

    def test_topo_depth(self, graph):
        assert topo_depth_priority(graph, "X") == 2
        assert topo_depth_priority(graph, "Y") == 1
        assert topo_depth_priority(graph, "W") == 1

    def test_fcfs_queueing(self, requests):
        order = [r.request_id for r in requests]

        assert single_server_queueing(order, self.EXEC) == pytest.approx(14.0)

    def test_topo_queueing(self, graph, requests):
        queue = ReadyQueue(TopoDepthPolicy(lambda: graph))
        for r in requests:
            queue.enqueue(r)
        order = [r.request_id for r in queue]

        assert order == ["y", "z", "x"]
        assert single_server_queueing(order, self.EXEC) == pytest.approx(9.0)

    def test_oracle_queueing(self, requests):
        order = [r.request_id for r in oracle_schedule(requests, self.REMAINING)]

        assert order == ["z", "y", "x"]
        assert single_server_queueing(order, self.EXEC.get) == pytest.approx(6.0)

    def test_unknown_agent_gets_median_depth(self, graph):
        policy = TopoDepthPolicy(lambda: graph)

        assert policy.depth("Ghost") == 1.0


# ─── Sorting accuracy ────────────────────────────────────────────────────────


class TestSortingAccuracy:
    def test_perfect_order(self):
        order = [pending("a", "A"), pending("b", "B"), pending("c", "C")]

        assert pairwise_sorting_accuracy(order, {"a": 1.0, "b": 2.0, "c": 3.0}) == 1.0

    def test_reversed_order(self):
        order = [pending("a", "A"), pending("b", "B")]

        assert pairwise_sorting_accuracy(order, {"a": 2.0, "b": 1.0}) == 0.0

    def test_ties_count_half(self):
        order = [pending("a", "A"), pending("b", "B")]

        assert pairwise_sorting_accuracy(order, {"a": 1.0, "b": 1.0}) == 0.5

    def test_same_agent_pairs_skipped_by_default(self):
        order = [pending("a", "A"), pending("b", "A"), pending("c", "B")]
        remaining = {"a": 5.0, "b": 1.0, "c": 9.0}

        assert pairwise_sorting_accuracy(order, remaining) == 1.0
        assert pairwise_sorting_accuracy(
            order, remaining, cross_agent_only=False
        ) == pytest.approx(2 / 3)

    def test_random_order_scores_one_half(self):
        rng = np.random.default_rng(5)
        scores = []
        for _ in range(20):
            order = [pending(f"r{i}", f"A{i % 12}") for i in range(500)]
            rng.shuffle(order)
            truth = {r.request_id: float(rng.exponential(10.0)) for r in order}
            scores.append(pairwise_sorting_accuracy(order, truth))

        assert np.mean(scores) == pytest.approx(0.5, abs=0.05)

    def test_no_pairs(self):
        assert pairwise_sorting_accuracy([pending("a", "A")], {"a": 1.0}) is None
        order = [pending("a", "A"), pending("b", "A")]
        assert pairwise_sorting_accuracy(order, {"a": 1.0, "b": 2.0}) is None


# ─── Orchestrator ────────────────────────────────────────────────────────────


class TestWorkflowOrchestrator:
    def test_no_table_before_convergence(self):
        orchestrator = WorkflowOrchestrator()

        tables = list(orchestrator.replay(router_math_trace(31)))

        assert tables == []
        assert orchestrator.priority_table is None
        assert orchestrator.graph.entry == "Router"

    def test_table_built_on_convergence(self):
        orchestrator = WorkflowOrchestrator()

        tables = list(orchestrator.replay(router_math_trace(32)))

        assert len(tables) == 1
        table = orchestrator.priority_table
        assert table.version == 1
        assert table.ranking() == ["Math", "Router"]
        assert table.anchor_distance("Math") == pytest.approx(4.0)
        assert table.anchor_distance("Router") == pytest.approx(5.0)

    def test_periodic_refresh(self):
        orchestrator = WorkflowOrchestrator(EngineSettings(priority_refresh_instances=4))

        tables = list(orchestrator.replay(router_math_trace(36)))

        assert [t.version for t in tables] == [1, 2]
        assert orchestrator.history == tables

    def test_expected_execution_time(self):
        orchestrator = WorkflowOrchestrator(EngineSettings(cold_start_exec_time=3.0))
        for _ in orchestrator.replay(router_math_trace(20)):
            pass

        assert orchestrator.expected_execution_time("Math") == pytest.approx(4.0)
        assert orchestrator.expected_execution_time("Ghost") == 3.0

    def test_rebuild_without_converged_distributions(self):
        orchestrator = WorkflowOrchestrator()

        assert orchestrator.rebuild() is None
        assert orchestrator.priority_table is None
