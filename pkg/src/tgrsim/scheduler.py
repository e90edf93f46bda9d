"""Per-cell proportional-fair downlink scheduler on a TDD slot pattern."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

from .config import SchedulerConfig
from .engine import SYMBOLS_PER_SLOT
from .harq import retransmit
from .radio import McsTable, coded_bits, tb_size
from .traffic import Packet


class TddPattern:
    """Repeating slot pattern such as ``DDDSU`` with PDSCH symbols per slot kind."""

    def __init__(self, pattern: str = "DDDSU", s_symbols: int = 10):
        self.pattern = pattern
        self.symbols = {"D": SYMBOLS_PER_SLOT, "S": s_symbols, "U": 0}
        self._ul = [i for i, c in enumerate(pattern) if c == "U"]
        if not self._ul:
            raise ValueError("pattern needs at least one U slot")

    def __len__(self) -> int:
        return len(self.pattern)

    def kind(self, slot: int) -> str:
        return self.pattern[slot % len(self.pattern)]

    def dl_symbols(self, slot: int) -> int:
        return self.symbols[self.kind(slot)]

    def is_dl(self, slot: int) -> bool:
        return self.dl_symbols(slot) > 0

    def ul_slot_start_at_or_after(self, tick: int) -> int:
        slot = -(-tick // SYMBOLS_PER_SLOT)
        while self.kind(slot) != "U":
            slot += 1
        return slot * SYMBOLS_PER_SLOT


@dataclass
class TransportBlock:
    tb_id: int
    owner: int
    pid: int
    rank: int
    mcs: int
    prb_count: int
    info_bits: int
    coded_bits: int
    first_tx_tick: int
    is_retx: bool = False
    payload: list[tuple[Packet, int]] = field(default_factory=list)


@dataclass
class PfState:
    avg: float = 1.0


def update_pf(state: PfState, served_bits: float, tau: float = 100.0,
              epsilon: float = 1.0) -> PfState:
    state.avg = max(epsilon, (1.0 - 1.0 / tau) * state.avg + served_bits / tau)
    return state


class PacketBuffer:
    """RLC-like byte queue of packets; a TB may cut a packet in two."""

    def __init__(self):
        self.queue: deque[Packet] = deque()
        self.bytes = 0

    def push(self, packets: list[Packet]) -> None:
        self.queue.extend(packets)
        self.bytes += sum(p.remaining for p in packets)

    def pull(self, n_bytes: int) -> list[tuple[Packet, int]]:
        out = []
        while n_bytes > 0 and self.queue:
            p = self.queue[0]
            take = min(p.remaining, n_bytes)
            p.remaining -= take
            n_bytes -= take
            self.bytes -= take
            out.append((p, take))
            if p.remaining == 0:
                self.queue.popleft()
        return out

    def discard_expired(self, tick: int) -> list[Packet]:
        """Drop packets whose deadline has passed (queue is deadline ordered)."""
        gone = []
        while self.queue and self.queue[0].deadline_tick < tick:
            p = self.queue.popleft()
            self.bytes -= p.remaining
            gone.append(p)
        return gone


class CellScheduler:
    """Retransmissions first, then new data by descending PF metric.

    Users are duck-typed: ``uid``, ``pf`` (PfState), ``la`` (LinkAdapter),
    ``pool`` (SawChannelPool) and ``buffer`` (PacketBuffer).
    """

    def __init__(self, cfg: SchedulerConfig, table: McsTable, tdd: TddPattern):
        self._tb_ids = itertools.count()
        self.cfg = cfg
        self.table = table
        self.tdd = tdd
        self.last_utilization = 0.0

    def re_per_prb(self, slot: int) -> int:
        return round(self.cfg.re_per_prb * self.tdd.dl_symbols(slot) / SYMBOLS_PER_SLOT)

    def schedule_slot(self, users, slot: int, tick: int) -> list[TransportBlock]:
        if not self.tdd.is_dl(slot):
            raise ValueError(f"slot {slot} carries no PDSCH")
        total = self.cfg.total_prbs
        free = total
        re = self.re_per_prb(slot)
        tbs: list[TransportBlock] = []
        served: set[int] = set()

        retx = []
        for u in users:
            p = u.pool.ready_retx(tick)
            if p is not None:
                retx.append((p.ready_tick, u.uid, u, p))
        for _, _, u, p in sorted(retx, key=lambda r: (r[0], r[1])):
            if p.tb.prb_count <= free:
                tb = retransmit(u.pool, p.pid, tick)
                if tb is None:
                    continue
                free -= tb.prb_count
                tbs.append(tb)
                served.add(u.uid)

        cands = []
        for u in users:
            if u.uid in served or u.buffer.bytes == 0 or not u.pool.has_free():
                continue
            if u.la.report is None:
                continue
            mcs = u.la.mcs_for_held_rank()
            rank = u.la.rank
            per_prb = re * self.table.efficiency[mcs] * rank
            metric = per_prb * total / u.pf.avg
            cands.append((-metric, u.uid, u, rank, mcs, per_prb))
        cands.sort(key=lambda c: (c[0], c[1]))

        for _, _, u, rank, mcs, per_prb in cands:
            if free == 0:
                break
            need = max(1, math.ceil(u.buffer.bytes * 8 / per_prb)) if per_prb > 0 else free
            prbs = min(need, free)
            info = tb_size(prbs, mcs, rank, self.table, re)
            if info < 8:
                continue
            pid = u.pool.allocate()
            free -= prbs
            tb = TransportBlock(next(self._tb_ids), u.uid, pid, rank, mcs, prbs, info,
                                coded_bits(prbs, mcs, rank, self.table, re), tick)
            tb.payload = u.buffer.pull(info // 8)
            proc = u.pool.procs[pid]
            proc.tb = tb
            proc.tx_count = 1
            tbs.append(tb)
            served.add(u.uid)

        bits_by_user = {tb.owner: tb.info_bits for tb in tbs}
        for u in users:
            update_pf(u.pf, bits_by_user.get(u.uid, 0), self.cfg.pf_tau_slots, self.cfg.pf_epsilon)
        self.last_utilization = (total - free) / total
        return tbs
