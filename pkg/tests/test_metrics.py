import csv
import json
import math
import random

import pytest
from hypothesis import given, strategies as st

from tgrsim.harq import SawChannelPool, harq_load_sample
from tgrsim.metrics import (CSV_COLUMNS, DropResult, Ecdf, UeRecord, capacity_from_sweep, happiness,
                            happy_percent, record_frame_delivery, summarize_point, write_metrics_csv,
                            write_summary_json)


def test_deadline_boundary():
    assert record_frame_delivery(100, 380, 280)
    assert not record_frame_delivery(100, 381, 280)
    assert not record_frame_delivery(100, None, 280)
    assert happiness(0, [10.0, 10.000000001], 10.0).in_time == 2


def test_threshold_example():
    rec = happiness(0, [1.0] * 534 + [math.inf] * 6, 10.0)
    assert rec.ratio == pytest.approx(0.9889, abs=1e-4) and not rec.happy
    assert happiness(0, [1.0] * 535 + [math.inf] * 5, 10.0).happy


def test_capacity_interpolation():
    assert capacity_from_sweep([(12, 95.0), (14, 85.0)]).capacity == pytest.approx(13.0)
    assert capacity_from_sweep([(2, 100.0), (4, 100.0), (6, 100.0)]).capacity == 6
    assert capacity_from_sweep([(2, 50.0), (4, 10.0)]).capacity == 0.0


def test_capacity_single_point_is_approximate():
    r = capacity_from_sweep([(6, 92.0)])
    assert r.capacity == 6 and r.approximate
    assert capacity_from_sweep([(6, 80.0)]).capacity == 0.0


def test_capacity_clamps_non_monotone_noise():
    # 88 and 92 pool to 90, so the crossing is between 8 and 10, not between 4 and 6
    r = capacity_from_sweep([(4, 100.0), (6, 88.0), (8, 92.0), (10, 60.0)])
    assert r.capacity == pytest.approx(8.0)


@given(st.lists(st.floats(0, 100), min_size=2, max_size=8))
def test_capacity_within_tested_range(happy):
    pts = [(2 * (i + 1), h) for i, h in enumerate(happy)]
    c = capacity_from_sweep(pts).capacity
    assert c == 0.0 or 2 <= c <= 2 * len(happy)


def make_drop(delays_by_ue, drop=0):
    recs = [UeRecord(i, 0, list(d), len(d), sum(map(math.isfinite, d)), 0, 0)
            for i, d in enumerate(delays_by_ue)]
    return DropResult(drop, recs)


@given(st.lists(st.lists(st.one_of(st.floats(0, 30), st.just(math.inf)), min_size=1, max_size=50),
                min_size=1, max_size=10))
def test_relaxing_pdb_never_lowers_capacity(ues):
    res = [make_drop(ues)]
    strict, relaxed = happy_percent(res, 10.0), happy_percent(res, 15.0)
    assert relaxed >= strict
    pts_s = [(n, happy_percent([make_drop(ues[:n])], 10.0)) for n in range(1, len(ues) + 1)]
    pts_r = [(n, happy_percent([make_drop(ues[:n])], 15.0)) for n in range(1, len(ues) + 1)]
    if len(ues) > 1:
        assert capacity_from_sweep(pts_r).capacity >= capacity_from_sweep(pts_s).capacity


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_ecdf_round_trip(xs):
    e = Ecdf(xs)
    for x in xs:
        k = e.rank(x)
        assert e.percentile(100.0 * k / len(e)) == x
        assert e.ccdf(x) == pytest.approx(1 - e.cdf(x))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=100), st.floats(0, 100), st.floats(0, 100))
def test_percentile_monotone(xs, p, q):
    e = Ecdf(xs)
    lo, hi = sorted((p, q))
    assert e.percentile(lo) <= e.percentile(hi)


def test_ecdf_errors():
    with pytest.raises(ValueError):
        Ecdf([])
    with pytest.raises(ValueError):
        Ecdf([1.0]).percentile(101)


def test_harq_load_examples():
    pool = SawChannelPool(16)
    assert harq_load_sample(pool) == 0
    pool.allocate(), pool.allocate()
    assert harq_load_sample(pool) == 0.125


def sample_drop(drop):
    rnd = random.Random(drop)
    res = make_drop([[rnd.uniform(0, 20) for _ in range(30)] + [math.inf] for _ in range(3)], drop)
    res.prb_util = [(0, rnd.random()), (1, rnd.random())]
    res.rank_counts = [rnd.randint(0, 9) for _ in range(4)]
    res.tl_delays_ms = [rnd.uniform(0, 5) for _ in range(10)]
    res.harq_hist = [rnd.randint(0, 50) for _ in range(17)]
    res.scenario_counts = {"dx": rnd.randint(0, 9), "dsc": rnd.randint(0, 9)}
    return res


def test_summary_is_order_independent():
    drops = [sample_drop(d) for d in range(4)]
    a = summarize_point(drops, 10.0, 16)
    b = summarize_point(list(reversed(drops)), 10.0, 16)
    assert a == b


def test_files_round_trip(tmp_path):
    drops = [sample_drop(d) for d in range(2)]
    write_metrics_csv(tmp_path / "m.csv", {"demo": {4: drops}}, 16)
    with open(tmp_path / "m.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    delays = sorted(float(r[5]) for r in rows[1:] if r[3] == "app_delay_ms")
    expected = sorted(d for r in drops for u in r.ue_records for d in u.frame_delays_ms)
    assert delays == expected and math.isinf(delays[-1])
    assert Ecdf(delays).percentile(50) == Ecdf(expected).percentile(50)
    summary = summarize_point(drops, 10.0, 16)
    write_summary_json(tmp_path / "s.json", summary)
    back = json.loads((tmp_path / "s.json").read_text())
    assert back["app_delay_ms"]["p100"] == "inf"
    assert back["happy_pct"] == summary["happy_pct"]
