"""Discrete-event core: OFDM-symbol clock and a deterministic event queue."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable

SYMBOLS_PER_SLOT = 14
SLOT_S = 0.5e-3  # 30 kHz subcarrier spacing
SYMBOL_S = SLOT_S / SYMBOLS_PER_SLOT


def seconds_to_ticks(seconds: float) -> int:
    """Ceil a real duration onto the symbol grid (tiny float noise is absorbed)."""
    return max(0, math.ceil(seconds / SYMBOL_S - 1e-9))


def ticks_to_seconds(ticks: int) -> float:
    return ticks * SYMBOL_S


@dataclass
class SimClock:
    tick: int = 0

    @property
    def slot(self) -> int:
        return self.tick // SYMBOLS_PER_SLOT

    @property
    def seconds(self) -> float:
        return self.tick * SYMBOL_S

    symbol_duration = SYMBOL_S

    def advance(self, tick: int) -> None:
        if tick < self.tick:
            raise ValueError(f"clock cannot go back from {self.tick} to {tick}")
        self.tick = tick


class EventHandle:
    __slots__ = ("tick", "seq", "callback", "args", "cancelled", "fired")

    def __init__(self, tick: int, seq: int, callback: Callable, args: tuple):
        self.tick = tick
        self.seq = seq
        self.callback = callback
        self.args = args
        self.cancelled = False
        self.fired = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "EventHandle") -> bool:
        return (self.tick, self.seq) < (other.tick, other.seq)


class EventQueue:
    """Min-heap of events keyed by (tick, insertion order).

    Events at the same tick fire in the order they were scheduled, so a run is
    fully determined by the sequence of ``schedule`` calls.
    """

    def __init__(self, clock: SimClock | None = None):
        self.clock = clock or SimClock()
        self._heap: list[EventHandle] = []
        self._seq = itertools.count()

    @property
    def now(self) -> int:
        return self.clock.tick

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, tick: int, callback: Callable[..., Any], *args: Any) -> EventHandle:
        if tick < self.clock.tick:
            raise ValueError(f"cannot schedule at tick {tick} < now {self.clock.tick}")
        handle = EventHandle(int(tick), next(self._seq), callback, args)
        heapq.heappush(self._heap, handle)
        return handle

    def step(self) -> bool:
        """Fire the next live event. Returns False when the queue is empty."""
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self.clock.advance(ev.tick)
            ev.fired = True
            ev.callback(*ev.args)
            return True
        return False

    def run(self, until: int | None = None) -> None:
        """Fire events with tick <= ``until`` (all events if None)."""
        while self._heap:
            if until is not None and self._heap[0].tick > until:
                break
            if not self.step():
                break
        if until is not None and until > self.clock.tick:
            self.clock.advance(until)
