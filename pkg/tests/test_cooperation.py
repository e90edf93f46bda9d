import itertools
import math

import pytest

from tgrsim.cooperation import (Scenario, classify, joint_feedback, receive_ptm, soft_combine_attempt,
                                tl_payload)
from tgrsim.radio import bler, soft_combined_sinr

# per member: 0 = PDCCH missed, 1 = control only, 2 = PDSCH decoded
EXPECTED = {
    (2, 2): Scenario.DX, (2, 1): Scenario.DX, (2, 0): Scenario.DX,
    (1, 2): Scenario.DSC, (0, 2): Scenario.DSC,
    (1, 1): Scenario.DSOFTC,
    (1, 0): Scenario.FAIL, (0, 1): Scenario.FAIL, (0, 0): Scenario.FAIL,
}


@pytest.mark.parametrize("x,t", sorted(EXPECTED))
def test_classification_truth_table(x, t):
    assert classify(x == 2, t == 2, x >= 1, t >= 1) is EXPECTED[(x, t)]


def test_pdsch_without_pdcch_rejected():
    with pytest.raises(ValueError):
        classify(True, False, False, True)


def test_tether_payloads():
    assert tl_payload(Scenario.DSC, 744000, 1_440_000) == 744000
    assert tl_payload(Scenario.DSOFTC, 744000, 1_440_000) == 7_200_000
    for sc in (Scenario.DX, Scenario.FAIL):
        with pytest.raises(ValueError):
            tl_payload(sc, 1, 1)


@pytest.mark.parametrize("x1,t1,x2", list(itertools.product([False, True], [False, True],
                                                            [None, False, True])))
def test_joint_feedback_is_any_ack(x1, t1, x2):
    assert joint_feedback(x1, t1, x2) == (x1 or t1 or x2 is True)


def test_soft_combining_example(table, rngs):
    g = table.threshold_db[12]
    assert bler(g, 12, table) == pytest.approx(0.5)
    comb = soft_combined_sinr(g, g)
    assert comb - g == pytest.approx(3.0103, abs=1e-4)
    assert bler(comb, 12, table) == pytest.approx(1 / (1 + math.exp(1.5 * 3.0103)), rel=1e-3)
    assert bler(comb, 12, table) == pytest.approx(0.0107, abs=2e-4)
    rng = rngs.stream("soft")
    fails = sum(not soft_combine_attempt(g, g, 12, table, rng) for _ in range(40_000))
    assert fails / 40_000 == pytest.approx(0.0108, abs=0.003)


class Scripted:
    def __init__(self, values):
        self.values = list(values)
        self.calls = 0

    def random(self):
        self.calls += 1
        return self.values.pop(0)


def draw(table, u, gx=0.0, gt=0.0):
    m = 5
    rng = Scripted(u)
    out = receive_ptm(gx, gt, 50.0, 50.0, m, table, 1.5, rng, 1000, 2000)
    return out, rng.calls


def test_receive_ptm_scenarios(table):
    th = table.threshold_db[5]
    out, calls = draw(table, [0.9, 0.9, 0.9, 0.1, 0.9], th, th)
    assert calls == 5 and out.scenario is Scenario.DX and out.tl_payload_bits == 0
    out, calls = draw(table, [0.9, 0.9, 0.1, 0.9, 0.0], th, th)
    assert calls == 5 and out.scenario is Scenario.DSC and out.tl_payload_bits == 1000
    assert out.joint_ack and out.soft_ok is None
    out, _ = draw(table, [0.9, 0.9, 0.1, 0.1, 0.5], th, th)
    assert out.scenario is Scenario.DSOFTC and out.soft_ok and out.tl_payload_bits == 10_000
    out, _ = draw(table, [0.9, 0.9, 0.1, 0.1, 0.001], th, th)
    assert out.scenario is Scenario.DSOFTC and out.soft_ok is False and not out.joint_ack


def test_missed_control_blocks_cooperation(table):
    out = receive_ptm(60.0, -30.0, 60.0, -30.0, 0, table, 1.5, Scripted([0.5] * 5), 1, 1)
    assert out.scenario is Scenario.DX
    out = receive_ptm(-30.0, 60.0, -30.0, 60.0, 0, table, 1.5, Scripted([0.5] * 5), 1, 1)
    assert out.scenario is Scenario.DSC
    out = receive_ptm(-30.0, -30.0, -30.0, 60.0, 0, table, 1.5, Scripted([0.5] * 5), 1, 1)
    assert out.scenario is Scenario.FAIL and not out.joint_ack
