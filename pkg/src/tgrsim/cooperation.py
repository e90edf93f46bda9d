"""Cooperative reception inside a tethered group (UE-X + UE-T).

Outcomes of one PTM transmission:

* ``DX``     UE-X decodes on its own; nothing crosses the tether.
* ``DSC``    UE-X fails, UE-T decodes and forwards the decoded TB.
* ``DSOFTC`` both fail PDSCH but read PDCCH; UE-T forwards quantised LLRs and
  UE-X retries after combining them with its own.
* ``FAIL``   no cooperative path (a PDCCH was missed); the gNB must retransmit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .radio import McsTable, bler, soft_combined_sinr
from .rng import RngStream


class Scenario(enum.Enum):
    DX = "dx"
    DSC = "dsc"
    DSOFTC = "dsoftc"
    FAIL = "fail"


def classify(pdsch_x: bool, pdsch_t: bool, pdcch_x: bool, pdcch_t: bool) -> Scenario:
    if (pdsch_x and not pdcch_x) or (pdsch_t and not pdcch_t):
        raise ValueError("PDSCH cannot be decoded without its PDCCH")
    if pdsch_x:
        return Scenario.DX
    if pdsch_t:
        return Scenario.DSC
    if pdcch_x and pdcch_t:
        return Scenario.DSOFTC
    return Scenario.FAIL


def soft_combine_attempt(gamma_x_db: float, gamma_t_db: float, mcs: int, table: McsTable,
                         rng: RngStream, slope: float = 1.5) -> bool:
    return rng.random() >= bler(soft_combined_sinr(gamma_x_db, gamma_t_db), mcs, table, slope)


def tl_payload(scenario: Scenario, info_bits: int, coded_bits: int, llr_bits: int = 5) -> int:
    """Bits UE-T pushes over the tether for this outcome."""
    if scenario is Scenario.DSC:
        return info_bits
    if scenario is Scenario.DSOFTC:
        return coded_bits * llr_bits
    raise ValueError(f"nothing is forwarded in scenario {scenario.name}")


def joint_feedback(hf_x1: bool, hf_t1: bool, hf_x2: bool | None = None) -> bool:
    """Group ACK if any member ACKs; an absent second feedback counts as NACK."""
    return hf_x1 or hf_t1 or bool(hf_x2)


@dataclass(frozen=True)
class TgrDecodeOutcome:
    scenario: Scenario
    x_first: bool                 # HF_X1
    t_first: bool                 # HF_T1
    soft_ok: bool | None          # HF_X2, None when no soft combining happened
    tl_payload_bits: int = 0

    @property
    def joint_ack(self) -> bool:
        return joint_feedback(self.x_first, self.t_first, self.soft_ok)


def receive_ptm(gamma_x_db: float, gamma_t_db: float, pdcch_x_db: float, pdcch_t_db: float,
                mcs: int, table: McsTable, slope: float, rng: RngStream,
                info_bits: int, coded: int, llr_bits: int = 5) -> TgrDecodeOutcome:
    """Draw one cooperative reception.

    ``gamma_*`` are the (chase-accumulated) PDSCH SINRs per layer; ``pdcch_*``
    are the SINRs at which control is decoded on MCS 0. Five uniforms are drawn
    every call so the stream stays aligned regardless of the outcome.
    """
    u = [rng.random() for _ in range(5)]
    pdcch_x = u[0] >= bler(pdcch_x_db, 0, table, slope)
    pdcch_t = u[1] >= bler(pdcch_t_db, 0, table, slope)
    pdsch_x = pdcch_x and u[2] >= bler(gamma_x_db, mcs, table, slope)
    pdsch_t = pdcch_t and u[3] >= bler(gamma_t_db, mcs, table, slope)
    sc = classify(pdsch_x, pdsch_t, pdcch_x, pdcch_t)
    soft_ok = None
    payload = 0
    if sc is Scenario.DSOFTC:
        soft_ok = u[4] >= bler(soft_combined_sinr(gamma_x_db, gamma_t_db), mcs, table, slope)
        payload = tl_payload(sc, info_bits, coded, llr_bits)
    elif sc is Scenario.DSC:
        payload = tl_payload(sc, info_bits, coded, llr_bits)
    return TgrDecodeOutcome(sc, pdsch_x, pdsch_t, soft_ok, payload)
