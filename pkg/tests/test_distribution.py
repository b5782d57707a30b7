"""Tests for empirical latency distributions, W1 distance and mode estimation."""

import numpy as np
import pytest
from scipy import stats

from agentflow.exceptions import DistributionError
from agentflow.models.request import RequestRecord
from agentflow.profiling import (
    EmpiricalDistribution,
    LatencyProfiler,
    mode_estimate,
    wasserstein_1d,
)
from agentflow.profiling.distribution import DistributionSummary


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def quantile_w1(a: np.ndarray, b: np.ndarray) -> float:
    """W1 as the integral over (0, 1) of the gap between the two quantile functions."""
    u, v = np.sort(a), np.sort(b)
    cuts = np.union1d(np.arange(1, u.size + 1) / u.size, np.arange(1, v.size + 1) / v.size)
    total = 0.0
    lo = 0.0
    for hi in cuts:
        mid = (lo + hi) / 2
        qu = u[min(int(mid * u.size), u.size - 1)]
        qv = v[min(int(mid * v.size), v.size - 1)]
        total += abs(qu - qv) * (hi - lo)
        lo = hi
    return total


# ─── Wasserstein distance ────────────────────────────────────────────────────


class TestWasserstein:
    def test_identical_samples(self):
        assert wasserstein_1d([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_shifted_point_masses(self):
        assert wasserstein_1d([2.0], [5.0]) == pytest.approx(3.0)

    def test_symmetric(self, rng):
        a = rng.exponential(2.0, 50)
        b = rng.exponential(3.0, 80)

        assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a))

    @pytest.mark.parametrize("sizes", [(40, 40), (25, 90), (1, 12)])
    def test_matches_scipy(self, rng, sizes):
        a = rng.lognormal(1.0, 0.5, sizes[0])
        b = rng.lognormal(1.5, 0.3, sizes[1])

        assert wasserstein_1d(a, b) == pytest.approx(stats.wasserstein_distance(a, b))

    def test_matches_quantile_integration(self, rng):
        for _ in range(1000):
            m, n = rng.integers(1, 65, size=2)
            a = rng.normal(0.0, 5.0, m)
            b = rng.exponential(3.0, n)

            assert wasserstein_1d(a, b) == pytest.approx(quantile_w1(a, b), rel=1e-9, abs=1e-9)

    def test_triangle_inequality(self, rng):
        for _ in range(300):
            a, b, c = (rng.lognormal(1.0, 0.8, rng.integers(1, 65)) for _ in range(3))

            assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9

    @pytest.mark.parametrize("shift", [-7.5, -0.25, 0.0, 3.0, 120.0])
    def test_translation_moves_by_shift(self, rng, shift):
        a = rng.gamma(2.0, 2.0, 37)

        assert wasserstein_1d(a, a + shift) == pytest.approx(abs(shift), abs=1e-9)

    def test_empty_input_rejected(self):
        with pytest.raises(DistributionError):
            wasserstein_1d([], [1.0])


# ─── Empirical distribution ──────────────────────────────────────────────────


class TestEmpiricalDistribution:
    def test_samples_kept_sorted(self):
        dist = EmpiricalDistribution.from_samples([3.0, 1.0, 2.0])

        assert dist.samples == [1.0, 2.0, 3.0]
        assert dist.mean == pytest.approx(2.0)
        assert dist.median == pytest.approx(2.0)

    def test_negative_latency_rejected(self):
        with pytest.raises(DistributionError):
            EmpiricalDistribution().add(-0.1)

    def test_non_finite_latency_rejected(self):
        with pytest.raises(DistributionError):
            EmpiricalDistribution().add(float("inf"))

    def test_window_below_min_samples_rejected(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution(min_samples=16, window=8)

    def test_window_drops_oldest(self):
        dist = EmpiricalDistribution(min_samples=2, window=3)
        for value in [10.0, 1.0, 2.0, 3.0]:
            dist.add(value)

        assert dist.samples == [1.0, 2.0, 3.0]
        assert dist.total == 4

    def test_no_convergence_before_second_checkpoint(self):
        dist = EmpiricalDistribution(min_samples=16)
        results = [dist.add(1.0) for _ in range(31)]

        assert not any(results)
        assert not dist.converged
        assert len(dist.last_snapshot) == 16

    def test_stable_samples_converge_at_second_checkpoint(self):
        dist = EmpiricalDistribution(min_samples=16)
        results = [dist.add(1.0) for _ in range(32)]

        assert results[-1] is True
        assert sum(results) == 1
        assert dist.converged
        assert dist.last_distance == 0.0

    def test_drifting_samples_do_not_converge(self):
        dist = EmpiricalDistribution(min_samples=16)
        for i in range(64):
            dist.add(float(i))

        assert not dist.converged

    def test_convergence_is_sticky(self):
        dist = EmpiricalDistribution(min_samples=16)
        for _ in range(32):
            dist.add(1.0)
        assert dist.converged

        results = [dist.add(100.0) for _ in range(32)]

        assert not any(results)
        assert dist.converged
        assert dist.last_distance > 0.05 * dist.mean

    def test_next_checkpoint_after_convergence_stays_close(self):
        threshold = 0.05
        stable = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            dist = EmpiricalDistribution(min_samples=16, threshold=threshold)
            while not dist.converged and dist.total < 1 << 14:
                dist.add(float(rng.lognormal(2.0, 0.5)))
            assert dist.converged
            for _ in range(dist.total):
                dist.add(float(rng.lognormal(2.0, 0.5)))
            stable += dist.last_distance < 2 * threshold * dist.mean

        assert stable >= 95

    def test_lognormal_converges(self, rng):
        dist = EmpiricalDistribution(min_samples=16)
        for value in rng.lognormal(1.0, 0.3, 4096):
            dist.add(float(value))

        assert dist.converged

    def test_empty_statistics_rejected(self):
        dist = EmpiricalDistribution()

        with pytest.raises(DistributionError):
            _ = dist.mean
        with pytest.raises(DistributionError):
            dist.quantile(0.5)


# ─── Mode estimation ─────────────────────────────────────────────────────────


class TestModeEstimate:
    def test_mode_of_dominant_cluster(self, rng):
        samples = np.concatenate([rng.normal(2.0, 0.05, 400), rng.uniform(5.0, 20.0, 100)])
        dist = EmpiricalDistribution.from_samples(samples)

        assert mode_estimate(dist) == pytest.approx(2.0, abs=0.1)

    def test_mode_below_mean_for_skewed_samples(self, rng):
        dist = EmpiricalDistribution.from_samples(rng.lognormal(0.0, 0.8, 2000))

        assert mode_estimate(dist) < dist.median < dist.mean

    def test_constant_samples(self):
        dist = EmpiricalDistribution.from_samples([4.0] * 20)

        assert mode_estimate(dist) == 4.0

    def test_zero_iqr_uses_fixed_bins(self):
        dist = EmpiricalDistribution.from_samples([1.0] * 30 + [9.0])

        assert mode_estimate(dist) == 1.0

    def test_few_samples_fall_back_to_median(self):
        dist = EmpiricalDistribution.from_samples([1.0, 2.0, 30.0])

        assert mode_estimate(dist) == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(DistributionError):
            mode_estimate(EmpiricalDistribution())


class TestDistributionSummary:
    def test_summary_fields(self):
        dist = EmpiricalDistribution.from_samples([float(i) for i in range(1, 11)])

        summary = DistributionSummary.from_distribution("Math", "execution", dist)

        assert summary.count == 10
        assert summary.min == 1.0
        assert summary.max == 10.0
        assert summary.median == pytest.approx(5.5)
        assert summary.mode == pytest.approx(5.5)
        assert summary.converged is False
        assert summary.to_dict()["agent"] == "Math"


class TestReferenceValues:
    def test_sorted_pairing(self):
        assert wasserstein_1d([1.0, 3.0], [2.0, 4.0]) == pytest.approx(1.0)

    def test_point_masses(self):
        assert wasserstein_1d([0.0], [1.0]) == pytest.approx(1.0)

    def test_mode_of_outlier_set(self):
        dist = EmpiricalDistribution.from_samples([1.0, 1.0, 1.0, 1.0, 10.0], min_samples=2)

        assert mode_estimate(dist) == 1.0

    def test_bimodal_larger_mode_wins(self):
        dist = EmpiricalDistribution.from_samples([1.0] * 50 + [5.0] * 49)

        assert mode_estimate(dist) == 1.0


# ─── Profiler ────────────────────────────────────────────────────────────────


def span(msg: str, agent: str, upstream: str | None, start: float, end: float) -> RequestRecord:
    return RequestRecord(
        msg_id=msg,
        agent=agent,
        upstream=upstream,
        exec_start=start,
        exec_end=end,
        prompt_tokens=10,
        output_tokens=10,
        app_start=0.0,
    )


class TestLatencyProfiler:
    def test_remaining_samples(self):
        profiler = LatencyProfiler()
        records = [
            span("m-0", "Researcher", None, 0.0, 4.0),
            span("m-0", "Writer", "Researcher", 4.0, 10.0),
        ]

        assert profiler.record_remaining(records) == []
        assert profiler.remaining["Researcher"].dist.samples == [10.0]
        assert profiler.remaining["Writer"].dist.samples == [6.0]

    def test_single_agent_workflow(self):
        profiler = LatencyProfiler()

        profiler.record_remaining([span("m-0", "Solo", None, 2.0, 5.0)])

        assert profiler.remaining["Solo"].dist.samples == [3.0]

    def test_incomplete_instance_deferred(self):
        profiler = LatencyProfiler()

        assert profiler.record_remaining([span("m-0", "Writer", "Researcher", 4.0, 10.0)]) is None
        assert "Writer" not in profiler.remaining

        profiler.record_remaining([span("m-0", "Researcher", None, 0.0, 4.0)])

        assert profiler.remaining["Writer"].dist.samples == [6.0]

    def test_branch_proportions_kept(self):
        rng = np.random.default_rng(11)
        profiler = LatencyProfiler()
        via_math = 0
        for i in range(100):
            expert, length = ("Math", 3.0) if rng.random() < 0.7 else ("Humanities", 8.0)
            via_math += expert == "Math"
            profiler.record_remaining(
                [
                    span(f"m-{i}", "Router", None, 0.0, 1.0),
                    span(f"m-{i}", expert, "Router", 1.0, 1.0 + length),
                ]
            )

        samples = profiler.remaining["Router"].dist.samples
        mix = profiler.branch_mix("Router")
        assert samples.count(4.0) == via_math
        assert samples.count(9.0) == 100 - via_math
        assert mix == {"Math": via_math, "Humanities": 100 - via_math}

    def test_execution_convergence_reported(self):
        profiler = LatencyProfiler(min_samples=4)

        results = [profiler.record_execution("Math", 2.0) for _ in range(8)]

        assert results == [False] * 7 + [True]
        assert profiler.expected_execution_time("Math", default=9.0) == 2.0

    def test_expected_time_fallbacks(self):
        profiler = LatencyProfiler(min_samples=16)
        for value in [1.0, 2.0, 9.0]:
            profiler.record_execution("Math", value)

        assert profiler.expected_execution_time("Math", default=5.0) == pytest.approx(2.0)
        assert profiler.expected_execution_time("Ghost", default=5.0) == 5.0

    def test_converged_remaining_only(self):
        profiler = LatencyProfiler(min_samples=2)
        for i in range(4):
            profiler.record_remaining([span(f"m-{i}", "Solo", None, 0.0, 2.0)])
        profiler.record_remaining([span("x", "Other", None, 0.0, 1.0)])

        assert list(profiler.converged_remaining()) == ["Solo"]

    def test_summaries_and_snapshot(self):
        profiler = LatencyProfiler()
        profiler.record_execution("Math", 2.0)
        profiler.record_remaining([span("m-0", "Math", None, 0.0, 2.0)])

        kinds = [(s.agent, s.kind) for s in profiler.summaries()]
        snapshot = profiler.snapshot()

        assert kinds == [("Math", "execution"), ("Math", "remaining")]
        assert snapshot.execution["Math"] == (2.0,)
        assert snapshot.converged == frozenset()
