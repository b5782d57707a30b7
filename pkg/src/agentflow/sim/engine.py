"""Discrete-event simulation of agent workflows on LLM serving instances."""

import math
import time as wallclock
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

from loguru import logger

from agentflow.config import EngineSettings, InstanceProfile, StrategyConfig
from agentflow.dispatching.dispatcher import make_dispatcher
from agentflow.models.common import (
    TIME_EPS,
    EventKind,
    InstanceId,
    MessageId,
    Phase,
    SchedulerKind,
)
from agentflow.models.request import PendingRequest
from agentflow.models.status import StatusSnapshot
from agentflow.orchestrator import WorkflowOrchestrator
from agentflow.scheduling.accuracy import pairwise_sorting_accuracy
from agentflow.scheduling.queue import (
    AppStartPolicy,
    FCFSPolicy,
    OraclePolicy,
    OrderingPolicy,
    ReadyQueue,
    TopoDepthPolicy,
    WorkflowAwarePolicy,
)
from agentflow.sim.events import EventQueue, SimEvent
from agentflow.sim.instance import InstanceState, RunningRequest
from agentflow.sim.results import OverheadSample, RequestOutcome, SimulationResult, WorkflowOutcome
from agentflow.workload.plan import PlannedCall, WorkflowPlan, remaining_execution


@dataclass
class _CallState:
    call: PlannedCall
    plan: WorkflowPlan
    pending: PendingRequest
    queued_at: float
    attempts: int = 0
    instance: InstanceId | None = None
    exec_start: float = 0.0
    queue_time: float = 0.0
    prefill_time: float = 0.0
    decode_time: float = 0.0
    preemptions: int = 0
    wasted: int = 0
    retained: int = 0


@dataclass
class _WorkflowState:
    plan: WorkflowPlan
    waiting: dict[str, int]
    remaining: int


class Simulation:
    """One strategy serving one pre-sampled workload.

    The loop is single-threaded and fully ordered: events are processed by
    (time, kind rank, insertion order), so a given workload, strategy and
    settings always replay the same way.

    Args:
        plans: Workflow instances with their arrival times.
        profiles: Serving instances.
        strategy: Scheduler and dispatcher to use.
        settings: Engine constants.
        seed: Seed the plans were generated with, carried into the result.
        perfect_prediction: Give the dispatcher each request's true execution time.
        accuracy_all_pairs: Also score same-agent pairs in sorting accuracy.
        log_decisions: Keep a row per dispatch attempt.
        log_events: Keep every processed event.
        orchestrator: Shared orchestrator; a fresh one by default.

    Example:
        ```python
        plans = generate_workload(config.workload, seed=0)
        result = Simulation(plans, config.instances, StrategyConfig()).run()
        ```
    """

    def __init__(
        self,
        plans: Sequence[WorkflowPlan],
        profiles: Sequence[InstanceProfile],
        strategy: StrategyConfig,
        settings: EngineSettings | None = None,
        *,
        seed: int = 0,
        perfect_prediction: bool = False,
        accuracy_all_pairs: bool = False,
        log_decisions: bool = False,
        log_events: bool = False,
        orchestrator: WorkflowOrchestrator | None = None,
    ):
        if not profiles:
            raise ValueError("a simulation needs at least one instance")
        self.settings = settings or EngineSettings()
        self.strategy = strategy
        self.perfect_prediction = perfect_prediction
        self.accuracy_all_pairs = accuracy_all_pairs
        self.log_decisions = log_decisions
        self.log_events = log_events
        self.clock = 0.0
        self.events = EventQueue()
        self.orchestrator = orchestrator or WorkflowOrchestrator(self.settings)
        self.instances: dict[InstanceId, InstanceState] = {
            InstanceId(p.id): InstanceState(p) for p in sorted(profiles, key=lambda p: p.id)
        }
        self.reference = self.instances[min(self.instances)].profile
        self.plans: dict[MessageId, WorkflowPlan] = {p.msg_id: p for p in plans}
        self.truth: dict[str, float] = {}
        for plan in plans:
            self.truth.update(
                remaining_execution(plan, self.reference.prefill_rate, self.reference.decode_rate)
            )
        self.queue = ReadyQueue(self._make_policy())
        self.dispatcher = make_dispatcher(strategy.dispatcher, profiles, self.settings)
        self.result = SimulationResult(label=strategy.label, seed=seed)
        self._calls: dict[str, _CallState] = {}
        self._workflows: dict[MessageId, _WorkflowState] = {}
        self._rounds: set[float] = set()
        self._round_count = 0
        self._handlers: dict[EventKind, Callable[[SimEvent], None]] = {
            EventKind.ARRIVAL: self._on_arrival,
            EventKind.DISPATCH_ROUND: self._on_dispatch_round,
            EventKind.PREFILL_DONE: self._on_prefill_done,
            EventKind.TOKEN_TICK: self._on_token_tick,
            EventKind.PREEMPT_CHECK: self._on_preempt_check,
            EventKind.REQUEST_DONE: self._on_request_done,
        }
        for plan in sorted(plans, key=lambda p: (p.app_start, p.msg_id)):
            self.events.push(plan.app_start, EventKind.ARRIVAL, msg_id=plan.msg_id)

    def _make_policy(self) -> OrderingPolicy:
        match self.strategy.scheduler:
            case SchedulerKind.WORKFLOW_AWARE:
                return WorkflowAwarePolicy(lambda: self.orchestrator.priority_table)
            case SchedulerKind.TOPO_DEPTH:
                return TopoDepthPolicy(lambda: self.orchestrator.graph)
            case SchedulerKind.ORACLE:
                return OraclePolicy(self.truth)
            case SchedulerKind.WO_PRIORITY:
                return AppStartPolicy()
            case _:
                return FCFSPolicy()

    # ─── Loop ───────────────────────────────────────────────────────────────

    def step(self) -> SimEvent:
        """Process the earliest pending event.

        Raises:
            IndexError: If no event is pending.
        """
        event = self.events.pop()
        self.clock = max(self.clock, event.time)
        if self.log_events:
            self.result.events.append(event.to_dict())
        self._handlers[event.kind](event)
        return event

    def run(self) -> SimulationResult:
        """Process events until none are left (or `max_sim_time` is reached)."""
        limit = self.settings.max_sim_time
        while self.events:
            next_time = self.events.peek_time()
            if limit is not None and next_time is not None and next_time > limit:
                self.result.stopped_early = True
                logger.warning(
                    "{}: stopping at t={:.1f} with {} events pending",
                    self.strategy.label,
                    limit,
                    len(self.events),
                )
                break
            self.step()
        return self.finish()

    def finish(self) -> SimulationResult:
        self.result.end_time = self.clock
        self.result.final_status = self.snapshot()
        self.result.unfinished = len(self._workflows)
        self.result.priority_versions = len(self.orchestrator.history)
        if self.result.unfinished:
            logger.warning(
                "{}: {} workflow instances did not finish",
                self.strategy.label,
                self.result.unfinished,
            )
        return self.result

    def snapshot(self) -> StatusSnapshot:
        """Live memory, batch and preemption counts of every instance."""
        return StatusSnapshot(
            time=self.clock,
            instances=tuple(inst.status(self.clock) for inst in self.instances.values()),
            queued=len(self.queue),
        )

    # ─── Workflow progress ──────────────────────────────────────────────────

    def _on_arrival(self, event: SimEvent) -> None:
        plan = self.plans[MessageId(event.msg_id)]
        self._workflows[plan.msg_id] = _WorkflowState(
            plan=plan,
            waiting={c.call_id: len(c.after) for c in plan.calls},
            remaining=len(plan.calls),
        )
        for call in plan.roots:
            self._make_ready(call, plan)
        self._schedule_round(self.clock)

    def _make_ready(self, call: PlannedCall, plan: WorkflowPlan) -> None:
        pending = PendingRequest(
            request_id=call.call_id,
            msg_id=plan.msg_id,
            agent=call.agent,
            prompt_tokens=call.prompt_tokens,
            app_start=plan.app_start,
            queue_enter=self.clock,
            upstream=call.upstream,
        )
        self._calls[call.call_id] = _CallState(call, plan, pending, queued_at=self.clock)
        self.queue.enqueue(pending)

    def _on_request_done(self, event: SimEvent) -> None:
        found = self._live(event)
        if found is None:
            return
        inst, running = found
        inst.finish(running.request_id)
        state = self._calls.pop(running.request_id)
        state.decode_time += self.clock - (running.decode_start or running.admitted_at)
        outcome = RequestOutcome(
            request_id=state.call.call_id,
            msg_id=state.plan.msg_id,
            application=state.plan.application,
            agent=state.call.agent,
            upstream=state.call.upstream,
            app_start=state.plan.app_start,
            queue_enter=state.pending.queue_enter,
            exec_start=state.exec_start,
            exec_end=self.clock,
            prompt_tokens=state.call.prompt_tokens,
            output_tokens=state.call.output_tokens,
            queue_time=state.queue_time,
            prefill_time=state.prefill_time,
            decode_time=state.decode_time,
            preemptions=state.preemptions,
            wasted_tokens=state.wasted,
            instance=inst.id,
        )
        self.result.requests.append(outcome)
        self.dispatcher.on_finish(outcome.request_id, inst.id, self.clock)
        self.orchestrator.observe_request(outcome.to_record())

        workflow = self._workflows[state.plan.msg_id]
        workflow.remaining -= 1
        for dependent in state.plan.dependents[outcome.request_id]:
            workflow.waiting[dependent] -= 1
            if workflow.waiting[dependent] == 0:
                self._make_ready(state.plan.by_id[dependent], state.plan)
        if workflow.remaining == 0:
            self._complete_workflow(workflow)
        self._schedule_round(self.clock)

    def _complete_workflow(self, workflow: _WorkflowState) -> None:
        plan = workflow.plan
        del self._workflows[plan.msg_id]
        self.result.workflows.append(
            WorkflowOutcome(
                msg_id=plan.msg_id,
                application=plan.application,
                app_start=plan.app_start,
                end=self.clock,
                requests=tuple(c.call_id for c in plan.calls),
                output_tokens=plan.total_output_tokens,
            )
        )
        table = self.orchestrator.complete_workflow(plan.msg_id)
        if table is not None:
            logger.debug(
                "{}: priority table v{} at t={:.3f}", self.strategy.label, table.version, self.clock
            )

    # ─── Dispatch ───────────────────────────────────────────────────────────

    def _schedule_round(self, at: float) -> None:
        # An earlier pending round reschedules itself while the queue is non-empty
        if any(p <= at + TIME_EPS for p in self._rounds):
            return
        self._rounds.add(at)
        self.events.push(at, EventKind.DISPATCH_ROUND)

    def _expected_time(self, state: _CallState) -> float:
        if self.perfect_prediction:
            return (
                state.pending.prompt_tokens / self.reference.prefill_rate
                + (state.call.output_tokens - state.retained) / self.reference.decode_rate
            )
        return self.orchestrator.expected_execution_time(state.call.agent)

    def _on_dispatch_round(self, event: SimEvent) -> None:
        self._rounds.discard(event.time)
        self._round_count += 1
        if len(self.queue) >= 2 and self._round_count % self.settings.accuracy_sample_every == 0:
            self._sample_accuracy()

        while self.queue:
            started = wallclock.perf_counter()
            head = self.queue.peek()
            sorted_at = wallclock.perf_counter()
            state = self._calls[head.request_id]
            decision = self.dispatcher.select(
                head, self._expected_time(state), self.clock, self.snapshot()
            )
            self.result.overhead.append(
                OverheadSample(
                    queue_len=len(self.queue),
                    instances=len(self.instances),
                    sort_seconds=sorted_at - started,
                    dispatch_seconds=wallclock.perf_counter() - sorted_at,
                )
            )
            if self.log_decisions:
                self.result.decisions.append(decision.to_row(self.clock))
            if decision.target is None:
                break
            self.queue.dequeue()
            self._admit(state, decision.target)

        if self.queue:
            self._schedule_round(self.clock + self.settings.dispatch_tick)

    def _sample_accuracy(self) -> None:
        order = self.queue.ordered()[: self.settings.accuracy_max_queue]
        value = pairwise_sorting_accuracy(
            order, self.truth, cross_agent_only=not self.accuracy_all_pairs
        )
        if value is not None:
            self.result.accuracy.append(value)
            self.result.accuracy_times.append(self.clock)

    def _admit(self, state: _CallState, target: InstanceId) -> None:
        inst = self.instances[target]
        state.attempts += 1
        state.queue_time += self.clock - state.queued_at
        state.instance = target
        state.exec_start = self.clock
        inst.admit(
            state.pending,
            state.call.output_tokens - state.retained,
            self.clock,
            state.attempts,
        )
        self.events.push(
            self.clock + inst.prefill_time(state.pending),
            EventKind.PREFILL_DONE,
            instance=target,
            request_id=state.call.call_id,
            attempt=state.attempts,
        )

    # ─── Instances ──────────────────────────────────────────────────────────

    def _live(self, event: SimEvent) -> tuple[InstanceState, RunningRequest] | None:
        """Instance and running request an event refers to; None if the event is stale."""
        inst = self.instances[InstanceId(event.instance)]
        running = inst.running.get(event.request_id or "")
        if running is None or running.attempt != event.attempt:
            return None
        return inst, running

    def _ensure_tick(self, inst: InstanceState) -> None:
        if inst.tick_pending or not inst.decoding():
            return
        inst.tick_pending = True
        self.events.push(
            self.clock + 1.0 / inst.profile.decode_rate, EventKind.TOKEN_TICK, instance=inst.id
        )

    def _on_prefill_done(self, event: SimEvent) -> None:
        found = self._live(event)
        if found is None:
            return
        inst, running = found
        self._calls[running.request_id].prefill_time += self.clock - running.admitted_at
        inst.start_decode(running.request_id, self.clock)
        self.events.push(
            running.done_at(),
            EventKind.REQUEST_DONE,
            instance=inst.id,
            request_id=running.request_id,
            attempt=running.attempt,
        )
        self._ensure_tick(inst)

    def _on_token_tick(self, event: SimEvent) -> None:
        inst = self.instances[InstanceId(event.instance)]
        inst.tick_pending = False
        if inst.kv_usage(self.clock) > inst.capacity:
            self.events.push(self.clock, EventKind.PREEMPT_CHECK, instance=inst.id)
        self._ensure_tick(inst)

    def _victim_priority(self, request: PendingRequest):
        return self.queue.policy.key(request)[0]

    def _on_preempt_check(self, event: SimEvent) -> None:
        inst = self.instances[InstanceId(event.instance)]
        victims = inst.select_victims(self.clock, self._victim_priority)
        for victim in victims:
            self._preempt(inst, victim)
        if victims:
            self._schedule_round(self.clock)

    def _preempt(self, inst: InstanceState, running: RunningRequest) -> None:
        """Evict `running`, discard its KV state and put it back in the queue."""
        state = self._calls[running.request_id]
        generated = running.tokens_generated(self.clock)
        inst.evict(running.request_id)
        if running.phase is Phase.DECODE and running.decode_start is not None:
            state.decode_time += self.clock - running.decode_start
        else:
            state.prefill_time += self.clock - running.admitted_at
        kept = math.floor(generated * (1.0 - self.settings.recompute_fraction))
        state.preemptions += 1
        state.wasted += generated - kept
        state.retained += kept
        state.pending = replace(
            state.pending, prompt_tokens=state.call.prompt_tokens + state.retained
        )
        state.queued_at = self.clock
        self.dispatcher.on_preempt(running.request_id, inst.id, self.clock)
        self.queue.enqueue(state.pending)
        logger.debug(
            "{}: preempted {} on instance {} at t={:.3f}, {} tokens discarded",
            self.strategy.label,
            running.request_id,
            inst.id,
            self.clock,
            generated - kept,
        )
