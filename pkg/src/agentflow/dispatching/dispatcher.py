"""Instance selection for dequeued requests."""

from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

from loguru import logger

from agentflow.config import EngineSettings, InstanceProfile
from agentflow.dispatching.ledger import Exceeds, SlotLedger
from agentflow.dispatching.memory import MemoryModel
from agentflow.exceptions import ConfigError
from agentflow.models.common import DispatcherKind, InstanceId
from agentflow.models.request import PendingRequest
from agentflow.models.status import InstanceStatus, StatusSnapshot


@dataclass(frozen=True)
class DispatchDecision:
    """Where a request goes, if anywhere.

    Attributes:
        request: The dispatched request.
        target: Chosen instance; None when no instance can take it this round.
        predicted_peak: Busiest expected memory on the target after placement.
        candidates: Predicted peak per evaluated instance, None where unavailable.
    """

    request: PendingRequest | None
    target: InstanceId | None
    predicted_peak: float
    candidates: tuple[tuple[InstanceId, float | None], ...] = ()

    @property
    def dispatched(self) -> bool:
        return self.target is not None

    def to_row(self, time: float) -> dict:
        """Flat decision-log row."""
        return {
            "time": f"{time:.6f}",
            "request_id": self.request.request_id if self.request else "",
            "agent": self.request.agent if self.request else "",
            "target": "" if self.target is None else self.target,
            "predicted_peak": f"{self.predicted_peak:.3f}",
            "candidates": ";".join(
                f"{i}:{'-' if p is None else f'{p:.3f}'}" for i, p in self.candidates
            ),
        }


ModelSource = MemoryModel | Callable[[SlotLedger], MemoryModel]


def select_instance(
    ledgers: Sequence[SlotLedger],
    model: ModelSource,
    request: PendingRequest | None = None,
    reserved: Mapping[InstanceId, float] | None = None,
) -> DispatchDecision:
    """Pick the ledger with the lowest predicted peak after placing `model`.

    Suspended ledgers are skipped. Ties go to the lowest instance id. Nothing
    is committed.

    Args:
        ledgers: Candidate instances.
        model: The request's memory model, or a factory building it per
            ledger (decode rates differ between instances).
        request: Request being placed, carried into the decision.
        reserved: Tokens per instance held outside the ledger; they must fit
            alongside the request but do not change the ranking.
    """
    if not ledgers:
        raise ValueError("select_instance needs at least one ledger")
    candidates: list[tuple[InstanceId, float | None]] = []
    best: tuple[float, InstanceId] | None = None
    for ledger in sorted(ledgers, key=lambda lg: lg.instance):
        if ledger.suspended:
            candidates.append((ledger.instance, None))
            continue
        placement = ledger.try_place(
            model(ledger) if callable(model) else model,
            reserved.get(ledger.instance, 0.0) if reserved else 0.0,
        )
        if isinstance(placement, Exceeds):
            candidates.append((ledger.instance, None))
            continue
        candidates.append((ledger.instance, placement.predicted_peak))
        if best is None or placement.predicted_peak < best[0]:
            best = (placement.predicted_peak, ledger.instance)
    if best is None:
        return DispatchDecision(request, None, 0.0, tuple(candidates))
    return DispatchDecision(request, best[1], best[0], tuple(candidates))


class Dispatcher(ABC):
    """Chooses an instance for each request leaving the ready queue.

    Every dispatcher enforces the engine's admission rule: an instance takes
    a request only if its batch has room and the prompt fits in its free KV
    cache right now.

    Args:
        profiles: Serving instances.
        settings: Engine constants.
    """

    kind: DispatcherKind

    def __init__(self, profiles: Sequence[InstanceProfile], settings: EngineSettings):
        self.profiles: dict[InstanceId, InstanceProfile] = {
            InstanceId(p.id): p for p in sorted(profiles, key=lambda p: p.id)
        }
        self.settings = settings

    def admissible(self, status: InstanceStatus, prompt_tokens: int) -> bool:
        profile = self.profiles[status.instance]
        return (
            status.running < profile.max_batch
            and status.live_usage + prompt_tokens <= profile.capacity
        )

    @abstractmethod
    def select(
        self,
        request: PendingRequest,
        expected_time: float,
        now: float,
        status: StatusSnapshot,
    ) -> DispatchDecision:
        """Choose (and reserve) an instance for `request`, or none."""

    def on_finish(self, request_id: str, instance: InstanceId, actual_end: float) -> None:
        """A request dispatched to `instance` completed at `actual_end`."""

    def on_preempt(self, request_id: str, instance: InstanceId, now: float) -> None:
        """A request was evicted from `instance` because memory ran out."""


class TimeSlotDispatcher(Dispatcher):
    """Packs requests by their expected memory over future time slots.

    Each instance has a SlotLedger. A request goes to the instance whose
    busiest future slot would be lowest after adding it. Live memory the
    ledger cannot account for (requests running past their expected time)
    is assumed to stay held while the new request runs. An instance that
    runs out of memory anyway stops receiving requests until its live usage
    falls below the resume watermark.
    """

    kind = DispatcherKind.TIME_SLOT

    def __init__(self, profiles: Sequence[InstanceProfile], settings: EngineSettings):
        super().__init__(profiles, settings)
        self.ledgers: dict[InstanceId, SlotLedger] = {
            i: SlotLedger(i, p.capacity, settings.slot_len, p.decode_rate)
            for i, p in self.profiles.items()
        }

    def _refresh(self, now: float, status: StatusSnapshot) -> None:
        for instance, ledger in self.ledgers.items():
            ledger.advance(now)
            if not ledger.suspended:
                continue
            live = status.get(instance).live_usage
            if live < self.settings.resume_watermark * ledger.capacity:
                ledger.suspended = False
                logger.warning(
                    "Instance {} resumed at t={:.3f} (live usage {} of {})",
                    instance,
                    now,
                    live,
                    ledger.capacity,
                )

    def select(
        self,
        request: PendingRequest,
        expected_time: float,
        now: float,
        status: StatusSnapshot,
    ) -> DispatchDecision:
        self._refresh(now, status)
        open_ids = [
            i
            for i, lg in self.ledgers.items()
            if not lg.suspended and self.admissible(status.get(i), request.prompt_tokens)
        ]
        open_ledgers = [self.ledgers[i] for i in open_ids]
        closed = [(i, None) for i in self.ledgers if i not in open_ids]
        if not open_ledgers:
            return DispatchDecision(request, None, 0.0, tuple(closed))

        decision = select_instance(
            open_ledgers,
            lambda lg: lg.model_for(request.prompt_tokens, now, expected_time),
            request,
            {i: self.ledgers[i].unexplained(status.get(i).live_usage) for i in open_ids},
        )
        candidates = tuple(sorted(decision.candidates + tuple(closed)))
        decision = DispatchDecision(request, decision.target, decision.predicted_peak, candidates)
        if decision.target is not None:
            ledger = self.ledgers[decision.target]
            ledger.commit(
                request.request_id,
                ledger.model_for(request.prompt_tokens, now, expected_time),
            )
        return decision

    def on_finish(self, request_id: str, instance: InstanceId, actual_end: float) -> None:
        ledger = self.ledgers[instance]
        if request_id in ledger:
            ledger.correct_early_finish(request_id, actual_end)
            ledger.forget(request_id)

    def on_preempt(self, request_id: str, instance: InstanceId, now: float) -> None:
        self.ledgers[instance].release(request_id)
        self.on_overload(instance, now)

    def on_overload(self, instance: InstanceId, now: float = 0.0) -> None:
        """Stop dispatching to `instance` until its live usage drops below the watermark."""
        ledger = self.ledgers[instance]
        if not ledger.suspended:
            ledger.suspended = True
            logger.warning("Instance {} overloaded at t={:.3f}; suspending dispatch", instance, now)


class RoundRobinDispatcher(Dispatcher):
    """Cycles through instances, skipping any that cannot admit the request."""

    kind = DispatcherKind.ROUND_ROBIN

    def __init__(self, profiles: Sequence[InstanceProfile], settings: EngineSettings):
        super().__init__(profiles, settings)
        self._order = list(self.profiles)
        self._next = 0

    def select(
        self,
        request: PendingRequest,
        expected_time: float,
        now: float,
        status: StatusSnapshot,
    ) -> DispatchDecision:
        n = len(self._order)
        candidates = []
        target = None
        for step in range(n):
            instance = self._order[(self._next + step) % n]
            current = status.get(instance)
            if self.admissible(current, request.prompt_tokens):
                target = instance
                self._next = (self._next + step + 1) % n
                break
        for instance in self._order:
            current = status.get(instance)
            candidates.append((instance, float(current.live_usage + request.prompt_tokens)))
        peak = 0.0
        if target is not None:
            peak = float(status.get(target).live_usage + request.prompt_tokens)
        return DispatchDecision(request, target, peak, tuple(candidates))


class LeastLoadedDispatcher(Dispatcher):
    """Instance with the lowest live memory usage right now.

    Used as the packing ablation: it sees current usage only, not how each
    request's memory will grow.
    """

    kind = DispatcherKind.WO_PACKING

    def limit(self, profile: InstanceProfile) -> float:
        return float(profile.capacity)

    def select(
        self,
        request: PendingRequest,
        expected_time: float,
        now: float,
        status: StatusSnapshot,
    ) -> DispatchDecision:
        candidates: list[tuple[InstanceId, float | None]] = []
        best: tuple[int, InstanceId] | None = None
        for instance, profile in self.profiles.items():
            current = status.get(instance)
            after = current.live_usage + request.prompt_tokens
            if not self.admissible(current, request.prompt_tokens) or after > self.limit(profile):
                candidates.append((instance, None))
                continue
            candidates.append((instance, float(after)))
            if best is None or current.live_usage < best[0]:
                best = (current.live_usage, instance)
        if best is None:
            return DispatchDecision(request, None, 0.0, tuple(candidates))
        target = best[1]
        peak = float(status.get(target).live_usage + request.prompt_tokens)
        return DispatchDecision(request, target, peak, tuple(candidates))


class StaticThresholdDispatcher(LeastLoadedDispatcher):
    """Least-loaded instance, admitting only while usage stays under a fixed fraction."""

    kind = DispatcherKind.STATIC_THRESHOLD

    def limit(self, profile: InstanceProfile) -> float:
        return self.settings.static_threshold * profile.capacity


_DISPATCHERS: Mapping[DispatcherKind, type[Dispatcher]] = {
    DispatcherKind.TIME_SLOT: TimeSlotDispatcher,
    DispatcherKind.ROUND_ROBIN: RoundRobinDispatcher,
    DispatcherKind.STATIC_THRESHOLD: StaticThresholdDispatcher,
    DispatcherKind.WO_PACKING: LeastLoadedDispatcher,
}


def make_dispatcher(
    kind: DispatcherKind | str,
    profiles: Sequence[InstanceProfile],
    settings: EngineSettings | None = None,
) -> Dispatcher:
    try:
        cls = _DISPATCHERS[DispatcherKind(kind)]
    except ValueError as e:
        raise ConfigError(f"unknown dispatcher: {kind}") from e
    return cls(profiles, settings or EngineSettings())
