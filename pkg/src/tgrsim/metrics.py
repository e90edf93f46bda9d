"""Measurement accumulators, happiness / XR capacity, and result files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.optimize import isotonic_regression

from .harq import Episode


class Ecdf:
    def __init__(self, samples: Iterable[float]):
        self.x = np.sort(np.asarray(list(samples), dtype=float))
        if self.x.size == 0:
            raise ValueError("ECDF of an empty sample")

    def __len__(self) -> int:
        return self.x.size

    def rank(self, value: float) -> int:
        """Number of samples <= value."""
        return int(np.searchsorted(self.x, value, side="right"))

    def cdf(self, value: float) -> float:
        return self.rank(value) / self.x.size

    def ccdf(self, value: float) -> float:
        return 1.0 - self.cdf(value)

    def percentile(self, p: float) -> float:
        """Smallest sample whose ECDF reaches ``p`` percent."""
        if not 0 <= p <= 100:
            raise ValueError("percentile must be in [0, 100]")
        k = max(1, math.ceil(p / 100.0 * self.x.size - 1e-9))
        return float(self.x[k - 1])

    def mean(self) -> float:
        return float(self.x.mean())


@dataclass
class HappinessRecord:
    ue: int
    in_time: int
    total: int
    threshold: float = 0.99

    @property
    def ratio(self) -> float:
        return self.in_time / self.total if self.total else 1.0

    @property
    def happy(self) -> bool:
        return self.ratio >= self.threshold


def record_frame_delivery(arrival_tick: int, delivered_tick: int | None, pdb_ticks: int) -> bool:
    """True when the frame made its deadline; a dropped frame (None) is late."""
    if delivered_tick is None or delivered_tick < 0:
        return False
    return delivered_tick - arrival_tick <= pdb_ticks


def happiness(ue: int, delays_ms: Iterable[float], pdb_ms: float,
              threshold: float = 0.99) -> HappinessRecord:
    d = list(delays_ms)
    # small epsilon: delays are tick multiples converted to ms
    in_time = sum(1 for x in d if x <= pdb_ms + 1e-9)
    return HappinessRecord(ue, in_time, len(d), threshold)


@dataclass
class CapacityResult:
    points: list[tuple[float, float]]
    capacity: float
    approximate: bool = False


def capacity_from_sweep(points: list[tuple[float, float]], target_pct: float = 90.0) -> CapacityResult:
    """Users/cell at which the happy share crosses ``target_pct``, linearly interpolated.

    The happy share is first made non-increasing in load by isotonic regression.
    """
    pts = sorted((float(l), float(h)) for l, h in points)
    if not pts:
        raise ValueError("no load points")
    if len(pts) == 1:
        load, h = pts[0]
        return CapacityResult(pts, load if h >= target_pct else 0.0, approximate=True)
    loads = [l for l, _ in pts]
    happy = isotonic_regression([h for _, h in pts], increasing=False).x.tolist()
    if happy[0] < target_pct:
        return CapacityResult(pts, 0.0)
    for i in range(1, len(loads)):
        if happy[i] < target_pct:
            l0, l1, h0, h1 = loads[i - 1], loads[i], happy[i - 1], happy[i]
            return CapacityResult(pts, l0 + (l1 - l0) * (h0 - target_pct) / (h0 - h1))
    return CapacityResult(pts, loads[-1])


@dataclass
class UeRecord:
    uid: int
    cell: int
    frame_delays_ms: list[float] = field(default_factory=list)  # inf when never delivered
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0


@dataclass
class DropResult:
    drop: int
    ue_records: list[UeRecord] = field(default_factory=list)
    prb_util: list[tuple[int, float]] = field(default_factory=list)   # (cell, window mean)
    rank_counts: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    tl_delays_ms: list[float] = field(default_factory=list)
    harq_hist: list[int] = field(default_factory=list)                  # occupied-count histogram
    harq_slot_counts: list[int] = field(default_factory=list)           # sum over users, per slot
    harq_sample_ticks: list[int] = field(default_factory=list)
    episodes: list[Episode] = field(default_factory=list)
    scenario_counts: dict[str, int] = field(default_factory=dict)
    sim_ticks: int = 0

    def happy_records(self, pdb_ms: float, threshold: float = 0.99) -> list[HappinessRecord]:
        return [happiness(r.uid, r.frame_delays_ms, pdb_ms, threshold) for r in self.ue_records]


def happy_percent(results: list[DropResult], pdb_ms: float, threshold: float = 0.99) -> float:
    recs = [h for r in results for h in r.happy_records(pdb_ms, threshold)]
    if not recs:
        return 100.0
    return 100.0 * sum(h.happy for h in recs) / len(recs)


def rank_share(results: list[DropResult]) -> list[float]:
    counts = np.sum([r.rank_counts for r in results], axis=0)
    total = counts.sum()
    return (counts / total).tolist() if total else [0.0] * len(counts)


def harq_load_ecdf(results: list[DropResult], processes: int) -> Ecdf:
    hist = np.sum([r.harq_hist for r in results], axis=0)
    values = np.repeat(np.arange(hist.size) / processes, hist)
    return Ecdf(values if values.size else [0.0])


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


CSV_COLUMNS = ("scenario", "load", "drop", "metric", "entity", "value", "count")


def metric_rows(scenario: str, load: int, res: DropResult, processes: int):
    for cell, u in res.prb_util:
        yield (scenario, load, res.drop, "prb_util", cell, _fmt(u), 1)
    for r, n in enumerate(res.rank_counts, start=1):
        yield (scenario, load, res.drop, "rank", "all", r, n)
    for k, n in enumerate(res.harq_hist):
        if n:
            yield (scenario, load, res.drop, "harq_load", "all", _fmt(k / processes), n)
    for d in res.tl_delays_ms:
        yield (scenario, load, res.drop, "tl_delay_ms", "all", _fmt(d), 1)
    for rec in res.ue_records:
        for d in rec.frame_delays_ms:
            yield (scenario, load, res.drop, "app_delay_ms", rec.uid, _fmt(d), 1)


def write_metrics_csv(path: Path, results: dict[str, dict[int, list[DropResult]]],
                      processes: int) -> None:
    """Tidy CSV; ``results`` maps scenario label -> load -> drop results."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for scenario in sorted(results):
            for load in sorted(results[scenario]):
                for res in sorted(results[scenario][load], key=lambda r: r.drop):
                    w.writerows(metric_rows(scenario, load, res, processes))


def _finite_or_str(x: float):
    return x if math.isfinite(x) else "inf"


def _pct(e: Ecdf, ps=(5, 50, 95, 99, 100)) -> dict:
    return {f"p{p}": _finite_or_str(e.percentile(p)) for p in ps}


def summarize_point(results: list[DropResult], pdb_ms: float, processes: int,
                    frame_ratio: float = 0.99) -> dict:
    delays = [d for r in results for u in r.ue_records for d in u.frame_delays_ms]
    util = [u for r in results for _, u in r.prb_util]
    tl = [d for r in results for d in r.tl_delays_ms]
    out = {
        "drops": len(results),
        "ues": sum(len(r.ue_records) for r in results),
        "happy_pct": happy_percent(results, pdb_ms, frame_ratio),
        "rank_share": rank_share(results),
        "frames": {
            "generated": sum(u.generated for r in results for u in r.ue_records),
            "delivered": sum(u.delivered for r in results for u in r.ue_records),
            "dropped": sum(u.dropped for r in results for u in r.ue_records),
            "in_flight": sum(u.in_flight for r in results for u in r.ue_records),
        },
        "harq_load": _pct(harq_load_ecdf(results, processes)),
    }
    if delays:
        finite = [d for d in delays if math.isfinite(d)]
        e = Ecdf(delays)
        out["app_delay_ms"] = {**_pct(e), "mean_delivered": math.fsum(finite) / len(finite) if finite else None}
    if util:
        e = Ecdf(util)
        out["prb_util"] = {**_pct(e), "mean": e.mean()}
    if tl:
        e = Ecdf(tl)
        out["tl_delay_ms"] = {**_pct(e), "mean": e.mean(), "count": len(tl)}
    sc: dict[str, int] = {}
    for r in results:
        for k, v in sorted(r.scenario_counts.items()):
            sc[k] = sc.get(k, 0) + v
    if sc:
        out["decode_scenarios"] = dict(sorted(sc.items()))
    return out


def write_summary_json(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False,
                               default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))
