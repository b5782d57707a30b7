"""Per-instance ledger of expected memory over future time slots."""

import math
from dataclasses import dataclass, field

from loguru import logger

from agentflow.exceptions import PlacementError, UnknownRequestError
from agentflow.models.common import TIME_EPS, InstanceId
from agentflow.dispatching.memory import DEFAULT_SLOT_LEN, MemoryModel, footprint, slot_of

_ZERO = 1e-9


@dataclass(frozen=True)
class Fits:
    """The request fits; `predicted_peak` is the busiest future slot afterwards."""

    predicted_peak: float


@dataclass(frozen=True)
class Exceeds:
    """The request would push `slot` over capacity."""

    slot: int


Placement = Fits | Exceeds


@dataclass
class SlotLedger:
    """Expected memory usage of one instance, summed per time slot.

    Each committed request contributes the end-of-slot value of its linear
    growth model to every slot its window touches. Slots before the current
    one are dropped as time advances.

    Attributes:
        instance: Instance id.
        capacity: KV capacity in tokens.
        slot_len: Slot length in seconds.
        decode_rate: Decode rate used to build memory models for this instance.
        usage: Expected tokens per slot index.
        current_slot: First slot still tracked.
        suspended: Set after an overload until live usage drops below the
            resume watermark.
    """

    instance: InstanceId
    capacity: float
    slot_len: float = DEFAULT_SLOT_LEN
    decode_rate: float = 1.0
    usage: dict[int, float] = field(default_factory=dict)
    current_slot: int = 0
    suspended: bool = False
    _assigned: dict[str, dict[int, float]] = field(default_factory=dict, repr=False)
    _ends: dict[str, float] = field(default_factory=dict, repr=False)

    def __contains__(self, request_id: object) -> bool:
        return request_id in self._assigned

    @property
    def assigned(self) -> list[str]:
        """Request ids with contributions still in the ledger."""
        return list(self._assigned)

    def model_for(self, prefill: float, t_start: float, expected_time: float) -> MemoryModel:
        """Memory model on this instance; T is clipped so the peak alone fits the capacity."""
        headroom = (self.capacity - prefill) / self.decode_rate
        if headroom > 0:
            expected_time = min(expected_time, headroom)
        return MemoryModel(prefill, self.decode_rate, t_start, expected_time)

    def try_place(self, model: MemoryModel, reserved: float = 0.0) -> Placement:
        """Check whether `model` fits on top of the current usage.

        `reserved` tokens count against the capacity in every slot of the
        window but not towards the reported peak.
        """
        contributions = self._contributions(model)
        peak = 0.0
        for slot in sorted(contributions):
            candidate = self.usage.get(slot, 0.0) + contributions[slot]
            if candidate + reserved > self.capacity + _ZERO:
                return Exceeds(slot)
            peak = max(peak, candidate)
        others = [u for s, u in self.usage.items() if s not in contributions]
        return Fits(max([peak, *others]))

    def commit(self, request_id: str, model: MemoryModel) -> Fits:
        """Add `model` to the ledger under `request_id`.

        Raises:
            PlacementError: If the model does not fit.
            ValueError: If `request_id` is already committed.
        """
        if request_id in self._assigned:
            raise ValueError(f"request {request_id} already committed to instance {self.instance}")
        placement = self.try_place(model)
        if isinstance(placement, Exceeds):
            raise PlacementError(self.instance, placement.slot)
        contributions = self._contributions(model)
        for slot, value in contributions.items():
            self.usage[slot] = self.usage.get(slot, 0.0) + value
        self._assigned[request_id] = contributions
        self._ends[request_id] = model.t_end
        return placement

    def predicted_end(self, request_id: str) -> float:
        if request_id not in self._ends:
            raise UnknownRequestError(request_id)
        return self._ends[request_id]

    def correct_early_finish(self, request_id: str, actual_end: float) -> None:
        """Remove contributions of `request_id` to slots starting at or after `actual_end`.

        A request that finishes at or after its predicted end leaves the
        ledger unchanged.

        Raises:
            UnknownRequestError: If the request is not in the ledger.
        """
        contributions = self._assigned.get(request_id)
        if contributions is None:
            raise UnknownRequestError(request_id)
        if actual_end >= self._ends[request_id] - TIME_EPS:
            return
        cutoff = math.ceil(actual_end / self.slot_len - TIME_EPS)
        for slot in [s for s in contributions if s >= cutoff]:
            self._subtract(slot, contributions.pop(slot))
        self._ends[request_id] = actual_end
        logger.debug(
            "Instance {}: {} finished early at {:.3f}, freed slots >= {}",
            self.instance,
            request_id,
            actual_end,
            cutoff,
        )

    def release(self, request_id: str) -> bool:
        """Remove every remaining contribution of `request_id` (e.g. after preemption).

        Returns:
            False if the request was not in the ledger.
        """
        contributions = self._assigned.pop(request_id, None)
        self._ends.pop(request_id, None)
        if contributions is None:
            return False
        for slot, value in contributions.items():
            self._subtract(slot, value)
        return True

    def forget(self, request_id: str) -> None:
        """Stop tracking a finished request; its past-slot usage ages out with time."""
        self._assigned.pop(request_id, None)
        self._ends.pop(request_id, None)

    def advance(self, now: float) -> None:
        """Drop slots that lie entirely in the past."""
        current = slot_of(now, self.slot_len)
        if current <= self.current_slot:
            return
        self.current_slot = current
        self.usage = {s: u for s, u in self.usage.items() if s >= current}
        for request_id in list(self._assigned):
            remaining = {s: v for s, v in self._assigned[request_id].items() if s >= current}
            if remaining:
                self._assigned[request_id] = remaining
            else:
                del self._assigned[request_id]
                del self._ends[request_id]

    def unexplained(self, live_usage: float) -> float:
        """Live memory above what the ledger expects for the current slot.

        Requests that outlive their predicted window drop out of the ledger
        while still holding memory; this is their share.
        """
        return max(0.0, live_usage - self.usage.get(self.current_slot, 0.0))

    def peak(self) -> float:
        return max(self.usage.values(), default=0.0)

    def profile(self, horizon: int) -> list[float]:
        """Expected usage of the next `horizon` slots starting at the current one."""
        return [self.usage.get(self.current_slot + i, 0.0) for i in range(horizon)]

    def _contributions(self, model: MemoryModel) -> dict[int, float]:
        return {
            s: v for s, v in footprint(model, self.slot_len).items() if s >= self.current_slot
        }

    def _subtract(self, slot: int, value: float) -> None:
        remaining = self.usage.get(slot, 0.0) - value
        if remaining <= _ZERO:
            self.usage.pop(slot, None)
        else:
            self.usage[slot] = remaining
