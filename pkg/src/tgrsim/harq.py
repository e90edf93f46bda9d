"""Asynchronous stop-and-wait HARQ with chase combining.

Besides the live process pool this module keeps a compact timeline per
occupancy episode (first transmission until release). The timeline can be
replayed with a different tethering delay to obtain the counterfactual
occupancy of exactly the same TBs, decode outcomes and scheduling lags.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .engine import SYMBOLS_PER_SLOT


class ProcState(enum.Enum):
    FREE = 0
    AWAITING_FEEDBACK = 1
    AWAITING_RETX = 2


class FeedbackSource(enum.Enum):
    X1 = "x1"
    T1 = "t1"
    X2 = "x2"


@dataclass(frozen=True)
class HarqFeedback:
    pid: int
    ack: bool
    source: FeedbackSource
    arrival_tick: int


def first_feedback_tick(tx_end_tick: int, tdd, proc_symbols: int = 6) -> int:
    """Start of the earliest UL slot that begins at least ``proc_symbols`` after the TB ends."""
    return tdd.ul_slot_start_at_or_after(tx_end_tick + proc_symbols)


def soft_feedback_tick(tx_end_tick: int, tl_ticks: int, tdd, proc_symbols: int = 6) -> int:
    """Arrival of the second (post soft-combining) feedback.

    UE-X re-decodes once the forwarded soft bits land (``tx_end + proc + tl``)
    and reports in the first UL slot after its own processing; the report is
    never earlier than the first feedback shifted by the tether delay.
    """
    first = first_feedback_tick(tx_end_tick, tdd, proc_symbols)
    arrival = tx_end_tick + proc_symbols + tl_ticks
    return tdd.ul_slot_start_at_or_after(max(first + tl_ticks, arrival + proc_symbols))


@dataclass
class Attempt:
    decision_tick: int
    soft_tl: bool = False      # feedback waited for soft bits sent over the tether
    tl_ticks: int = 0
    feedback_tick: int = -1
    lag: int = 0               # DL opportunities skipped before the next attempt


@dataclass
class Episode:
    owner: int
    pid: int
    attempts: list[Attempt] = field(default_factory=list)
    release_tick: int = -1

    @property
    def start_tick(self) -> int:
        return self.attempts[0].decision_tick


@dataclass
class HarqProcess:
    pid: int
    state: ProcState = ProcState.FREE
    tb: Any = None
    acc_x_lin: float = 0.0      # chase-combined SINR buffer at UE-X (linear)
    acc_t_lin: float = 0.0      # same at UE-T
    tx_count: int = 0
    ready_tick: int = 0
    episode: Episode | None = None

    def reset(self) -> None:
        self.state = ProcState.FREE
        self.tb = None
        self.acc_x_lin = self.acc_t_lin = 0.0
        self.tx_count = 0
        self.ready_tick = 0
        self.episode = None


class SawChannelPool:
    def __init__(self, size: int = 16, max_retx: int = 3):
        self.size = size
        self.max_retx = max_retx
        self.procs = [HarqProcess(i) for i in range(size)]
        self.occupied = 0

    def allocate(self) -> int | None:
        """First free process, marked as awaiting feedback; None when exhausted."""
        for p in self.procs:
            if p.state is ProcState.FREE:
                p.state = ProcState.AWAITING_FEEDBACK
                self.occupied += 1
                return p.pid
        return None

    def has_free(self) -> bool:
        return self.occupied < self.size

    def release(self, pid: int) -> None:
        p = self.procs[pid]
        if p.state is ProcState.FREE:
            raise ValueError(f"process {pid} is already free")
        p.reset()
        self.occupied -= 1

    def load(self) -> float:
        return self.occupied / self.size

    def ready_retx(self, tick: int) -> HarqProcess | None:
        """Oldest process whose NACK has arrived by ``tick``."""
        best = None
        for p in self.procs:
            if p.state is ProcState.AWAITING_RETX and p.ready_tick <= tick:
                if best is None or p.ready_tick < best.ready_tick:
                    best = p
        return best


def harq_load_sample(pool: SawChannelPool) -> float:
    return pool.occupied / pool.size


def chase_sinr_db(acc_lin: float) -> float:
    return 10.0 * math.log10(acc_lin) if acc_lin > 0 else -math.inf


def retransmit(pool: SawChannelPool, pid: int, tick: int):
    """Re-send the stored TB of ``pid`` (same bits, MCS, rank and PRBs).

    Returns the TB, or None when the retransmission budget is exhausted, in
    which case the process is freed and the TB counts as lost.
    """
    p = pool.procs[pid]
    if p.state is not ProcState.AWAITING_RETX:
        raise ValueError(f"process {pid} is not waiting for a retransmission")
    if p.tx_count > pool.max_retx:
        pool.release(pid)
        return None
    p.state = ProcState.AWAITING_FEEDBACK
    p.tx_count += 1
    p.tb.is_retx = True
    return p.tb


def next_decision_at_or_after(tick: int, tdd, gnb_lead: int, skip: int = 0) -> int:
    """Decision tick of the (skip+1)-th DL opportunity whose decision is >= tick."""
    slot = max(1, -(-(tick + gnb_lead) // SYMBOLS_PER_SLOT))
    seen = -1
    while True:
        if tdd.dl_symbols(slot) > 0:
            seen += 1
            if seen == skip:
                return slot * SYMBOLS_PER_SLOT - gnb_lead
        slot += 1


def count_skipped_opportunities(ready: int, actual: int, tdd, gnb_lead: int) -> int:
    n = 0
    t = next_decision_at_or_after(ready, tdd, gnb_lead)
    while t < actual:
        n += 1
        t = next_decision_at_or_after(t + 1, tdd, gnb_lead)
    return n


def replay_release(ep: Episode, tdd, *, gnb_lead: int, ue_proc: int,
                   tl_scale: float = 1.0) -> int:
    """Release tick of ``ep`` with every tether delay multiplied by ``tl_scale``.

    ``tl_scale=1`` reproduces the realised release; ``tl_scale=0`` gives the
    ideal-tether counterfactual for the same outcomes and scheduling lags.
    """
    d = ep.attempts[0].decision_tick
    fb = d
    for i, a in enumerate(ep.attempts):
        slot = (d + gnb_lead) // SYMBOLS_PER_SLOT
        end = slot * SYMBOLS_PER_SLOT + tdd.dl_symbols(slot)
        if a.soft_tl:
            fb = soft_feedback_tick(end, math.ceil(a.tl_ticks * tl_scale), tdd, ue_proc)
        else:
            fb = first_feedback_tick(end, tdd, ue_proc)
        if i + 1 < len(ep.attempts):
            d = next_decision_at_or_after(fb, tdd, gnb_lead, a.lag)
    return fb


def occupancy_counts(episodes: list[Episode], sample_ticks: list[int],
                     releases: list[int] | None = None) -> list[int]:
    """Processes held at each sample tick: started at or before it and not yet released.

    ``releases`` overrides the episodes' own release ticks (e.g. replayed ones);
    a negative release marks an episode still open at teardown.
    """
    rel = [e.release_tick for e in episodes] if releases is None else list(releases)
    starts = np.sort([e.start_tick for e in episodes])
    ends = np.sort([r for r in rel if r >= 0])
    t = np.asarray(sample_ticks)
    held = np.searchsorted(starts, t, side="right") - np.searchsorted(ends, t, side="right")
    return held.tolist()
