import numpy as np
import pytest
from hypothesis import given, strategies as st

from tgrsim.config import TetherConfig, TlMode
from tgrsim.engine import SYMBOL_S
from tgrsim.tethering import (US, WifiParams, ampdu_airtime, collision_time, contention_window,
                              data_time, expected_collisions, expected_service_time, fixed_overhead,
                              lindley_step, sample_backoff, sample_service_time, TetherQueue)


def fifo_waits(arrivals, services):
    """Event-driven single-server FIFO: each job starts when it arrives or the server frees up."""
    free_at, waits = 0.0, []
    for a, s in zip(arrivals, services):
        start = max(a, free_at)
        waits.append(start - a)
        free_at = start + s
    return waits


def test_lindley_examples():
    assert lindley_step(0.0, 1e-3, 2e-3) == 0.0
    assert lindley_step(2e-3, 5e-3, 3e-3) == pytest.approx(4e-3)


@given(st.lists(st.tuples(st.floats(0, 5e-3), st.floats(1e-5, 5e-3)), min_size=1, max_size=60))
def test_lindley_matches_fifo_server(jobs):
    gaps, services = zip(*jobs)
    arrivals = np.cumsum(gaps).tolist()
    w = [0.0]
    for n in range(1, len(jobs)):
        w.append(lindley_step(w[-1], services[n - 1], arrivals[n] - arrivals[n - 1]))
    assert w == pytest.approx(fifo_waits(arrivals, services), abs=1e-12)


def test_queue_waits_match_fifo(rngs):
    q = TetherQueue(WifiParams())
    rng = rngs.stream("tether")
    ticks = [0, 1, 2, 3, 200, 201, 5000]
    delays = [q.enqueue(t, 7_200_000, rng) for t in ticks]
    arrivals = [t * SYMBOL_S for t in ticks]
    services = [r.service for r in q.records]
    assert [r.wait for r in q.records] == pytest.approx(fifo_waits(arrivals, services), abs=1e-12)
    assert delays == pytest.approx([r.wait + r.service for r in q.records])
    assert q.records[1].wait > 0 and q.records[-1].wait == 0


def test_queue_rejects_out_of_order(rngs):
    q = TetherQueue(WifiParams())
    q.enqueue(10, 100, rngs.stream("tether"))
    with pytest.raises(ValueError):
        q.enqueue(9, 100, rngs.stream("tether"))


def test_ideal_tether_has_no_delay(rngs):
    q = TetherQueue(None)
    assert all(q.enqueue(t, 10**7, rngs.stream("tether")) == 0.0 for t in range(0, 100, 7))


def test_backoff_distribution(rngs):
    p = WifiParams()
    rng = rngs.stream("backoff")
    draws = np.array([sample_backoff(0, rng, p) for _ in range(50_000)]) / US
    assert set(np.round(draws / 9).astype(int)) == set(range(15))
    assert draws.mean() == pytest.approx(63.0, rel=0.02)
    assert contention_window(7, p) == 1023
    assert (contention_window(7, p) - 1) * p.slot == pytest.approx(9.198e-3)
    with pytest.raises(ValueError):
        sample_backoff(-1, rng, p)


def test_frame_exchange_constants():
    p = WifiParams(dbps=65280)
    assert data_time(744000, p) == pytest.approx(283.2 * US)
    assert fixed_overhead(p) == pytest.approx(137 * US)
    assert collision_time(p) == pytest.approx(105 * US)
    assert ampdu_airtime(744000, p) == pytest.approx((137 + 283.2 + 32) * US)
    assert expected_collisions(p) == pytest.approx(0.111)


def test_presets_map_to_phy_rates():
    for mode, gbps in ((TlMode.WIFI5, 1.2), (TlMode.WIFI6, 2.4), (TlMode.WIFI7, 4.8)):
        assert WifiParams.from_config(TetherConfig(), mode).phy_rate == pytest.approx(gbps * 1e9)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        WifiParams(p_c=1.0)
    with pytest.raises(ValueError):
        WifiParams(dbps=0)
    with pytest.raises(ValueError):
        ampdu_airtime(-1, WifiParams())


def test_service_time_mean(rngs):
    p = WifiParams()
    rng = rngs.stream("service")
    n = 100_000
    samples = [sample_service_time(800_000, p, rng) for _ in range(n)]
    assert np.mean([s.collisions for s in samples]) == pytest.approx(0.111, rel=0.05)
    assert np.mean([s.total for s in samples]) == pytest.approx(expected_service_time(800_000, p),
                                                                 rel=0.01)


@given(st.integers(0, 10**7), st.integers(0, 10**6), st.sampled_from([16320, 32640, 65280]))
def test_service_time_monotone(payload, extra, dbps):
    p_slow, p_fast = WifiParams(dbps=dbps), WifiParams(dbps=2 * dbps)
    assert ampdu_airtime(payload + extra, p_slow) >= ampdu_airtime(payload, p_slow)
    assert ampdu_airtime(payload, p_fast) <= ampdu_airtime(payload, p_slow)
    assert expected_service_time(payload, p_fast) <= expected_service_time(payload, p_slow)


def test_common_random_numbers_keep_service_ordered(rngs):
    # the draws do not depend on payload, so the same stream orders samples pointwise
    a = sample_service_time(10**5, WifiParams(), rngs.stream("crn"))
    b = sample_service_time(10**6, WifiParams(), rngs.stream("crn"))
    assert a.backoffs == b.backoffs and a.total < b.total
