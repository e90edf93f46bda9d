"""Link adaptation: CQI reports, OLLA offsets (single or per rank) and rank/MCS choice."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .config import CsiScheme, LaConfig, LaMode
from .radio import McsTable, tb_size


@dataclass(frozen=True)
class CqiReport:
    ue: int
    measured_tick: int
    available_tick: int
    sinr_db: tuple[float, ...]  # per-layer SINR for rank 1..max_rank


@dataclass
class OllaState:
    """SINR back-off applied before rank/MCS selection.

    In ``SINGLE_OLLA`` mode one offset is shared by every rank; in ``MOOLLA``
    mode each rank keeps its own and only the transmitted rank's offset moves.
    """

    mode: LaMode
    max_rank: int
    delta_up: float = 0.5
    tbler_target: float = 0.1
    lower: float = -10.0
    upper: float = 10.0
    initial: float = 0.0
    offsets: list[float] = field(init=False)

    def __post_init__(self):
        n = self.max_rank if self.mode is LaMode.MOOLLA else 1
        self.offsets = [self.initial] * n

    @classmethod
    def from_config(cls, cfg: LaConfig, mode: LaMode, max_rank: int) -> "OllaState":
        return cls(mode, max_rank, cfg.delta_up_db, cfg.tbler_target,
                   cfg.offset_min_db, cfg.offset_max_db, cfg.initial_offset_db)

    @property
    def delta_down(self) -> float:
        # balance: delta_up * p = delta_down * (1 - p) at the target BLER p
        return self.delta_up * self.tbler_target / (1.0 - self.tbler_target)

    def offset(self, rank: int) -> float:
        return self.offsets[rank - 1] if self.mode is LaMode.MOOLLA else self.offsets[0]


def effective_sinr(report_sinr: tuple[float, ...], olla: OllaState, rank: int) -> float:
    return report_sinr[rank - 1] - olla.offset(rank)


def olla_update(olla: OllaState, transmitted_rank: int, ack: bool) -> OllaState:
    """Move the offset of ``transmitted_rank`` (or the shared one) by one step."""
    if not 1 <= transmitted_rank <= olla.max_rank:
        raise ValueError(f"rank {transmitted_rank} outside [1, {olla.max_rank}]")
    i = transmitted_rank - 1 if olla.mode is LaMode.MOOLLA else 0
    step = -olla.delta_down if ack else olla.delta_up
    olla.offsets[i] = min(max(olla.offsets[i] + step, olla.lower), olla.upper)
    return olla


@dataclass(frozen=True)
class LaDecision:
    rank: int
    mcs: int
    predicted_tput: int
    effective_sinr: float


class McsSelector:
    """Highest MCS whose predicted BLER meets the target, via threshold bisection.

    With a logistic BLER curve, ``bler(g, m) <= target`` is equivalent to
    ``g >= threshold[m] + ln((1 - target) / target) / slope``.
    """

    def __init__(self, table: McsTable, slope: float, tbler_target: float):
        self.table = table
        self.margin = math.log((1.0 - tbler_target) / tbler_target) / slope
        self.thresholds = list(table.threshold_db)

    def best_mcs(self, gamma_eff: float) -> int | None:
        k = bisect.bisect_right(self.thresholds, gamma_eff - self.margin + 1e-12)
        return k - 1 if k > 0 else None


def select_rank_mcs(report_sinr: tuple[float, ...], olla: OllaState, table: McsTable,
                    prbs: int, *, slope: float = 1.5, re_per_prb: int = 120,
                    selector: McsSelector | None = None) -> LaDecision:
    """Maximise predicted throughput over (rank, MCS) subject to BLER <= target.

    Ties go to the lower rank, then the lower MCS. Falls back to (1, 0) when no
    pair is feasible.
    """
    sel = selector or McsSelector(table, slope, olla.tbler_target)
    best: LaDecision | None = None
    for rank in range(1, olla.max_rank + 1):
        g = effective_sinr(report_sinr, olla, rank)
        m = sel.best_mcs(g)
        if m is None:
            continue
        # lowest MCS reaching the same TB size wins a tie inside this rank
        r = tb_size(prbs, m, rank, table, re_per_prb)
        while m > 0 and tb_size(prbs, m - 1, rank, table, re_per_prb) == r:
            m -= 1
        if best is None or r > best.predicted_tput:
            best = LaDecision(rank, m, r, g)
    if best is None:
        g = effective_sinr(report_sinr, olla, 1)
        return LaDecision(1, 0, tb_size(prbs, 0, 1, table, re_per_prb), g)
    return best


def tgr_reported_sinr(report_x: tuple[float, ...], report_t: tuple[float, ...] | None,
                      scheme: CsiScheme) -> tuple[float, ...]:
    if scheme is CsiScheme.CSI_UE_X:
        return tuple(report_x)
    if report_t is None:
        raise ValueError("CSI-best needs a report from both UEs")
    return tuple(max(a, b) for a, b in zip(report_x, report_t))


class LinkAdapter:
    """Per-user LA entity: holds reports, the OLLA state and the current rank.

    Rank is re-chosen only when a new report becomes available; MCS is
    re-chosen at every new transmission for the held rank.
    """

    def __init__(self, olla: OllaState, table: McsTable, prbs: int, slope: float,
                 re_per_prb: int):
        self.olla = olla
        self.table = table
        self.prbs = prbs
        self.slope = slope
        self.re_per_prb = re_per_prb
        self.selector = McsSelector(table, slope, olla.tbler_target)
        self.pending: list[CqiReport] = []
        self.report: CqiReport | None = None
        self.rank = 1

    def push_report(self, report: CqiReport) -> None:
        self.pending.append(report)

    def refresh(self, tick: int) -> bool:
        """Adopt the newest report available at ``tick``; True if the rank was re-selected."""
        fresh = None
        while self.pending and self.pending[0].available_tick <= tick:
            fresh = self.pending.pop(0)
        if fresh is None:
            return False
        self.report = fresh
        self.rank = select_rank_mcs(fresh.sinr_db, self.olla, self.table, self.prbs,
                                    slope=self.slope, re_per_prb=self.re_per_prb,
                                    selector=self.selector).rank
        return True

    def mcs_for_held_rank(self) -> int:
        g = effective_sinr(self.report.sinr_db, self.olla, self.rank)
        m = self.selector.best_mcs(g)
        return 0 if m is None else m

    def on_feedback(self, rank: int, ack: bool) -> None:
        olla_update(self.olla, rank, ack)
