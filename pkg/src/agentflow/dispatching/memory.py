"""Linear KV-cache growth model of one request, and its time-slot footprint."""

import math
from dataclasses import dataclass

from agentflow.models.common import TIME_EPS

DEFAULT_SLOT_LEN = 0.5


@dataclass(frozen=True)
class MemoryModel:
    """Expected memory of a request: prompt, then one token per decode step.

    f(t) = prefill + decode_rate * (t - t_start) for t_start < t < t_start + expected_time,
    and 0 otherwise.

    Attributes:
        prefill: Prompt memory in tokens.
        decode_rate: Tokens generated per second on the target instance.
        t_start: Admission time, seconds.
        expected_time: Expected execution time, seconds.
    """

    prefill: float
    decode_rate: float
    t_start: float
    expected_time: float

    def __post_init__(self) -> None:
        if self.prefill < 1:
            raise ValueError("prefill memory must be at least one token")
        if self.decode_rate <= 0 or self.expected_time <= 0:
            raise ValueError("decode rate and expected time must be positive")

    @property
    def t_end(self) -> float:
        return self.t_start + self.expected_time

    @property
    def peak(self) -> float:
        """Supremum of f over the execution window."""
        return self.prefill + self.decode_rate * self.expected_time


def memory_at(model: MemoryModel, t: float) -> float:
    """Expected memory of the request at time `t` (zero outside its window)."""
    if model.t_start < t < model.t_end:
        return model.prefill + model.decode_rate * (t - model.t_start)
    return 0.0


def slot_of(t: float, slot_len: float) -> int:
    """Index of the slot [i*slot_len, (i+1)*slot_len) containing `t`."""
    return math.floor(t / slot_len + TIME_EPS)


def span_slots(model: MemoryModel, slot_len: float = DEFAULT_SLOT_LEN) -> range:
    """Slots intersecting the open window (t_start, t_start + expected_time)."""
    if slot_len <= 0:
        raise ValueError("slot length must be positive")
    first = slot_of(model.t_start, slot_len)
    last = math.ceil(model.t_end / slot_len - TIME_EPS) - 1
    return range(first, max(first, last) + 1)


def slot_contribution(model: MemoryModel, slot: int, slot_len: float) -> float:
    """Upper bound of f within `slot`, taken at the slot end (or the window end)."""
    t = min((slot + 1) * slot_len, model.t_end)
    return model.prefill + model.decode_rate * max(0.0, t - model.t_start)


def footprint(model: MemoryModel, slot_len: float = DEFAULT_SLOT_LEN) -> dict[int, float]:
    """Per-slot contribution of the request over its whole span."""
    return {s: slot_contribution(model, s, slot_len) for s in span_slots(model, slot_len)}
