"""One simulation drop: deployment, traffic, scheduling, HARQ, cooperation, tether.

Timing conventions (ticks are OFDM symbols, 14 per slot):

* the scheduler of slot ``s`` runs at ``14*s - 3`` (gNB processing lead) and
  the TB is on air over the slot's PDSCH symbols;
* a UE needs 6 symbols after the TB (or after forwarded soft bits arrive)
  before it can decode, and its feedback goes out at the start of the first
  UL slot after that;
* a NACK arriving at tick ``t`` can be retransmitted by any decision at or
  after ``t``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DeviceMode, SimConfig, TlMode
from .cooperation import Scenario, receive_ptm
from .engine import SYMBOL_S, SYMBOLS_PER_SLOT, EventQueue, seconds_to_ticks
from .harq import (Attempt, Episode, ProcState, SawChannelPool, chase_sinr_db,
                   count_skipped_opportunities, first_feedback_tick,
                   soft_feedback_tick)
from .link_adaptation import CqiReport, LinkAdapter, OllaState, tgr_reported_sinr
from .metrics import DropResult, UeRecord
from .radio import McsTable, RadioState, bler, build_deployment, per_layer_sinr
from .rng import RngFactory, RngStream
from .scheduler import CellScheduler, PacketBuffer, PfState, TddPattern, TransportBlock
from .tethering import TetherQueue, WifiParams
from .traffic import FrameSource, XrFrame, segment_frame

log = logging.getLogger(__name__)


@dataclass
class User:
    """A schedulable entity: a legacy XR UE or a tethered group."""

    uid: int
    cell: int
    dev_x: int
    dev_t: int
    la: LinkAdapter
    pool: SawChannelPool
    source: FrameSource
    tether: TetherQueue | None
    decode_rng: RngStream
    tether_rng: RngStream
    pf: PfState = field(default_factory=PfState)
    buffer: PacketBuffer = field(default_factory=PacketBuffer)
    measured: list[XrFrame] = field(default_factory=list)


class DropSim:
    def __init__(self, config: SimConfig, drop: int):
        self.cfg = config
        self.drop = drop
        self.tgr = config.device_mode is DeviceMode.TGR
        self.rngs = RngFactory(config.master_seed, drop)
        self.table = McsTable.from_csv(config.radio.mcs_table)
        self.tdd = TddPattern(config.scheduler.tdd_pattern, config.scheduler.s_slot_symbols)
        self.gnb_lead = math.ceil(config.harq.gnb_proc_symbols)
        self.ue_proc = config.harq.ue_proc_symbols
        self.pdb_ticks = seconds_to_ticks(config.pdb_ms * 1e-3)

        self.warmup_tick = seconds_to_ticks(config.warmup_s)
        self.measure_end = seconds_to_ticks(config.warmup_s + config.measure_s)
        cycle = len(self.tdd) * SYMBOLS_PER_SLOT
        self.end_tick = self.measure_end + self.pdb_ticks + cycle
        self.n_slots = self.end_tick // SYMBOLS_PER_SLOT + 2

        self.dep = build_deployment(config, self.rngs)
        self.radio = RadioState(config, self.dep, self.n_slots, self.rngs)
        self.activity = np.zeros(config.num_cells)
        self.sinr: list[float] = []

        rc = config.radio
        self.penalty = rc.rank_penalty_tgr if self.tgr else rc.rank_penalty_legacy
        self.report_penalty = tuple(p * rc.cqi_penalty_visibility for p in self.penalty)
        self.slope = rc.bler_slope
        self.cqi_period = max(1, round(config.la.cqi_period_ms * 1e-3 / (SYMBOLS_PER_SLOT * SYMBOL_S)))
        self.cqi_delay = seconds_to_ticks(config.la.cqi_delay_ms * 1e-3)

        wifi = None
        if self.tgr and config.tl_mode is not TlMode.IDEAL:
            wifi = WifiParams.from_config(config.tethering, config.tl_mode)

        self.users: list[User] = []
        self.by_cell: list[list[User]] = [[] for _ in range(config.num_cells)]
        n_users = config.num_cells * config.ues_per_cell
        for k in range(n_users):
            dev_x = 2 * k if self.tgr else k
            dev_t = 2 * k + 1 if self.tgr else -1
            cell = int(self.dep.serving[dev_x])
            olla = OllaState.from_config(config.la, config.la_mode, config.max_rank)
            la = LinkAdapter(olla, self.table, config.scheduler.total_prbs, self.slope,
                             config.scheduler.re_per_prb)
            source = FrameSource(k, config.traffic, config.pdb_ms,
                                 self.rngs.stream("traffic", cell, k))
            tether = TetherQueue(wifi) if self.tgr else None
            u = User(k, cell, dev_x, dev_t, la,
                     SawChannelPool(config.harq.processes, config.harq.max_retx), source, tether,
                     self.rngs.stream("decode", cell, k), self.rngs.stream("tether", cell, k))
            self.users.append(u)
            self.by_cell[cell].append(u)

        self.schedulers = [CellScheduler(config.scheduler, self.table, self.tdd)
                           for _ in range(config.num_cells)]
        self.events = EventQueue()
        self.result = DropResult(drop, harq_hist=[0] * (config.harq.processes + 1))
        self._util_acc = np.zeros(config.num_cells)
        self._util_n = 0
        self._util_slots = 0

    # ------------------------------------------------------------------ helpers
    def in_window(self, tick: int) -> bool:
        return self.warmup_tick <= tick < self.measure_end

    def _lin(self, db: float) -> float:
        return 10.0 ** (db / 10.0)

    # ------------------------------------------------------------------ traffic
    def _schedule_next_frame(self, u: User) -> None:
        tick, size = u.source.next()
        if tick <= self.end_tick:
            self.events.schedule(tick, self._on_frame, u, size)

    def _on_frame(self, u: User, size: int) -> None:
        frame = u.source.make_frame(self.events.now, size)
        if self.in_window(frame.arrival_tick):
            u.measured.append(frame)
        cap = self.cfg.scheduler.buffer_cap_bytes
        if cap is not None and u.buffer.bytes + frame.size_bytes > cap:
            frame.lost = True  # tail drop: the whole frame is refused
        else:
            u.buffer.push(segment_frame(frame, self.cfg.traffic.max_sdu_bytes))
        self._schedule_next_frame(u)

    # ------------------------------------------------------------------ slots
    def _on_slot(self, slot: int) -> None:
        tick = self.events.now
        self.sinr = self.radio.sinr_db(slot, self.activity).tolist()
        if slot % self.cqi_period == 0:
            self._measure_cqi(tick)
        for u in self.users:
            u.la.refresh(tick)
            if self.cfg.traffic.discard_expired:
                for p in u.buffer.discard_expired(tick):
                    p.frame.lost = True

        if self.tdd.is_dl(slot):
            util = np.zeros(self.cfg.num_cells)
            for c, sched in enumerate(self.schedulers):
                for tb in sched.schedule_slot(self.by_cell[c], slot, tick):
                    self._transmit(self.users[tb.owner], tb, slot, tick)
                util[c] = sched.last_utilization
            self.activity = util
            if self.in_window(tick):
                self._util_acc += util
                self._util_n += 1

        if self.in_window(tick):
            self._util_slots += 1
            if self._util_slots % self.cfg.metrics.prb_util_window_slots == 0 and self._util_n:
                for c in range(self.cfg.num_cells):
                    self.result.prb_util.append((c, float(self._util_acc[c] / self._util_n)))
                self._util_acc[:] = 0.0
                self._util_n = 0
            total = 0
            hist = self.result.harq_hist
            for u in self.users:
                hist[u.pool.occupied] += 1
                total += u.pool.occupied
            self.result.harq_slot_counts.append(total)
            self.result.harq_sample_ticks.append(tick)

        nxt = (slot + 1) * SYMBOLS_PER_SLOT - self.gnb_lead
        if nxt <= self.end_tick:
            self.events.schedule(nxt, self._on_slot, slot + 1)

    def _measure_cqi(self, tick: int) -> None:
        max_rank = self.cfg.max_rank
        pen = self.report_penalty
        for u in self.users:
            gx = tuple(per_layer_sinr(self.sinr[u.dev_x], r, pen) for r in range(1, max_rank + 1))
            if self.tgr:
                gt = tuple(per_layer_sinr(self.sinr[u.dev_t], r, pen) for r in range(1, max_rank + 1))
                gx = tgr_reported_sinr(gx, gt, self.cfg.la.csi_scheme)
            u.la.push_report(CqiReport(u.uid, tick, tick + self.cqi_delay, gx))

    # ------------------------------------------------------------------ transmission
    def _transmit(self, u: User, tb: TransportBlock, slot: int, tick: int) -> None:
        proc = u.pool.procs[tb.pid]
        air_end = slot * SYMBOLS_PER_SLOT + self.tdd.dl_symbols(slot)
        decoded = air_end + self.ue_proc
        if not tb.is_retx:
            proc.episode = Episode(u.uid, tb.pid)
            if self.in_window(tick):
                self.result.rank_counts[tb.rank - 1] += 1
        else:
            prev = proc.episode.attempts[-1]
            prev.lag = count_skipped_opportunities(proc.ready_tick, tick, self.tdd, self.gnb_lead)
        attempt = Attempt(tick)
        proc.episode.attempts.append(attempt)

        margin = self.cfg.coop.pdcch_margin_db
        gx_layer = per_layer_sinr(self.sinr[u.dev_x], tb.rank, self.penalty)
        proc.acc_x_lin += self._lin(gx_layer)
        gx = chase_sinr_db(proc.acc_x_lin)
        first_fb = first_feedback_tick(air_end, self.tdd, self.ue_proc)

        if not self.tgr:
            rng = u.decode_rng
            u0, u1 = rng.random(), rng.random()
            ok = (u0 >= bler(self.sinr[u.dev_x] + margin, 0, self.table, self.slope)
                  and u1 >= bler(gx, tb.mcs, self.table, self.slope))
            if ok:
                self._deliver(tb, decoded)
            self.events.schedule(first_fb, self._on_feedback, u, tb.pid, ok)
            return

        gt_layer = per_layer_sinr(self.sinr[u.dev_t], tb.rank, self.penalty)
        proc.acc_t_lin += self._lin(gt_layer)
        gt = chase_sinr_db(proc.acc_t_lin)
        out = receive_ptm(gx, gt, self.sinr[u.dev_x] + margin, self.sinr[u.dev_t] + margin,
                          tb.mcs, self.table, self.slope, u.decode_rng, tb.info_bits,
                          tb.coded_bits, self.cfg.coop.llr_bits)
        if self.in_window(tick):
            key = out.scenario.value
            self.result.scenario_counts[key] = self.result.scenario_counts.get(key, 0) + 1

        if out.scenario is Scenario.DX:
            self._deliver(tb, decoded)
            self.events.schedule(first_fb, self._on_feedback, u, tb.pid, out.joint_ack)
        elif out.scenario is Scenario.FAIL:
            self.events.schedule(first_fb, self._on_feedback, u, tb.pid, out.joint_ack)
        else:
            # UE-T hands the decoded TB or its LLRs to the tether once it has decoded
            delay_s = u.tether.enqueue(decoded, out.tl_payload_bits, u.tether_rng)
            tl_ticks = seconds_to_ticks(delay_s)
            if self.in_window(decoded):
                self.result.tl_delays_ms.append(delay_s * 1e3)
            arrival = decoded + tl_ticks
            if out.scenario is Scenario.DSC:
                self._deliver(tb, arrival)
                self.events.schedule(first_fb, self._on_feedback, u, tb.pid, out.joint_ack)
            else:
                attempt.soft_tl = True
                attempt.tl_ticks = tl_ticks
                if out.soft_ok:
                    self._deliver(tb, arrival)
                x2 = soft_feedback_tick(air_end, tl_ticks, self.tdd, self.ue_proc)
                self.events.schedule(x2, self._on_feedback, u, tb.pid, out.joint_ack)

    def _deliver(self, tb: TransportBlock, tick: int) -> None:
        for packet, n in tb.payload:
            f = packet.frame
            f.delivered_bytes += n
            if tick > f.delivered_tick:
                f.delivered_tick = tick

    def _on_feedback(self, u: User, pid: int, ack: bool) -> None:
        tick = self.events.now
        proc = u.pool.procs[pid]
        tb = proc.tb
        proc.episode.attempts[-1].feedback_tick = tick
        if proc.tx_count == 1:
            u.la.on_feedback(tb.rank, ack)
        if ack or proc.tx_count > self.cfg.harq.max_retx:
            if not ack:
                for packet, _ in tb.payload:
                    packet.frame.lost = True
            proc.episode.release_tick = tick
            self.result.episodes.append(proc.episode)
            u.pool.release(pid)
        else:
            proc.state = ProcState.AWAITING_RETX
            proc.ready_tick = tick

    # ------------------------------------------------------------------ run
    def run(self) -> DropResult:
        for u in self.users:
            self._schedule_next_frame(u)
        self.events.schedule(SYMBOLS_PER_SLOT - self.gnb_lead, self._on_slot, 1)
        self.events.run(until=self.end_tick)
        # episodes still open at teardown are kept with an open end
        for u in self.users:
            for p in u.pool.procs:
                if p.state is not ProcState.FREE and p.episode is not None:
                    self.result.episodes.append(p.episode)
        self.result.episodes.sort(key=lambda e: (e.start_tick, e.owner, e.pid))
        self._collect_frames()
        self.result.sim_ticks = self.end_tick
        return self.result

    def _collect_frames(self) -> None:
        ms_per_tick = SYMBOL_S * 1e3
        for u in self.users:
            rec = UeRecord(u.uid, u.cell)
            for f in u.measured:
                rec.generated += 1
                if f.complete and 0 <= f.delivered_tick <= self.end_tick:
                    rec.delivered += 1
                    rec.frame_delays_ms.append((f.delivered_tick - f.arrival_tick) * ms_per_tick)
                else:
                    if f.lost:
                        rec.dropped += 1
                    else:
                        rec.in_flight += 1
                    rec.frame_delays_ms.append(math.inf)
            self.result.ue_records.append(rec)


def run_drop(config: SimConfig, drop_index: int) -> DropResult:
    """Simulate one independent drop; metrics cover the measurement window only."""
    return DropSim(config, drop_index).run()
