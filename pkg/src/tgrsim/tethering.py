"""Wi-Fi tethering-link delay: G/G/1 waiting time plus DCF service time.

Per forwarded payload ``D = W + S``. ``W`` follows Lindley's recursion over the
payload stream of one group; ``S`` adds binary-exponential backoff per attempt,
a fixed RTS/CTS collision cost per failed attempt and the RTS/CTS/A-MPDU/BA
exchange of the successful one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import TetherConfig, TlMode
from .engine import SYMBOL_S
from .rng import RngStream

US = 1e-6

# data bits per OFDM symbol at 13.6 us symbols -> 1.2 / 2.4 / 4.8 Gbps
DBPS_PRESETS = {
    TlMode.WIFI5: 16320,
    TlMode.WIFI6: 32640,
    TlMode.WIFI7: 65280,
}


@dataclass(frozen=True)
class WifiParams:
    cw_min: int = 15
    cw_max: int = 1023
    n_max: int = 3
    slot: float = 9 * US
    sifs: float = 16 * US
    difs: float = 34 * US
    t_rts: float = 27 * US
    t_cts: float = 19 * US
    t_phy: float = 120 * US
    t_ack: float = 32 * US
    header_bytes: int = 36
    p_c: float = 0.10
    dbps: int = 16320
    t_ofdm: float = 13.6 * US

    def __post_init__(self):
        durations = (self.slot, self.sifs, self.difs, self.t_rts, self.t_cts, self.t_phy,
                     self.t_ack, self.t_ofdm)
        if any(d <= 0 for d in durations):
            raise ValueError("Wi-Fi durations must be positive")
        if not 0 <= self.p_c < 1:
            raise ValueError("collision probability must be in [0, 1)")
        if self.dbps <= 0:
            raise ValueError("DBPS must be positive")

    @property
    def phy_rate(self) -> float:
        return self.dbps / self.t_ofdm

    @classmethod
    def from_config(cls, cfg: TetherConfig, mode: TlMode) -> "WifiParams":
        dbps = cfg.dbps if cfg.dbps is not None else DBPS_PRESETS.get(mode, DBPS_PRESETS[TlMode.WIFI7])
        return cls(cfg.cw_min, cfg.cw_max, cfg.n_max, cfg.slot_us * US, cfg.sifs_us * US,
                   cfg.difs_us * US, cfg.t_rts_us * US, cfg.t_cts_us * US, cfg.t_phy_us * US,
                   cfg.t_ack_us * US, cfg.header_bytes, cfg.p_collision, dbps, cfg.t_ofdm_us * US)


def lindley_step(w_prev: float, s_prev: float, a_prev: float) -> float:
    return max(0.0, w_prev + s_prev - a_prev)


def contention_window(stage: int, p: WifiParams) -> int:
    return min((2 ** stage) * p.cw_min, p.cw_max)


def sample_backoff(stage: int, rng: RngStream, p: WifiParams) -> float:
    if stage < 0:
        raise ValueError("backoff stage must be >= 0")
    return rng.integers(0, contention_window(stage, p)) * p.slot


def data_time(payload_bits: int, p: WifiParams) -> float:
    n_sym = math.ceil((p.header_bytes * 8 + payload_bits) / p.dbps)
    return p.t_phy + n_sym * p.t_ofdm


def fixed_overhead(p: WifiParams) -> float:
    """RTS + 3 SIFS + CTS + DIFS + slot: the exchange cost apart from data and BA."""
    return p.t_rts + 3 * p.sifs + p.t_cts + p.difs + p.slot


def ampdu_airtime(payload_bits: int, p: WifiParams) -> float:
    if payload_bits < 0:
        raise ValueError("payload must be >= 0 bits")
    return fixed_overhead(p) + data_time(payload_bits, p) + p.t_ack


def collision_time(p: WifiParams) -> float:
    return p.t_rts + p.sifs + p.t_cts + p.difs + p.slot


@dataclass(frozen=True)
class ServiceSample:
    collisions: int
    backoffs: tuple[float, ...]
    t_collision: float
    t_success: float

    @property
    def total(self) -> float:
        return sum(self.backoffs) + self.collisions * self.t_collision + self.t_success


def sample_service_time(payload_bits: int, p: WifiParams, rng: RngStream) -> ServiceSample:
    """One DCF service time. The draws consumed do not depend on payload or PHY rate."""
    n = 0
    while n < p.n_max and rng.random() < p.p_c:
        n += 1
    backoffs = tuple(sample_backoff(i, rng, p) for i in range(n + 1))
    return ServiceSample(n, backoffs, collision_time(p), ampdu_airtime(payload_bits, p))


def expected_collisions(p: WifiParams) -> float:
    return sum(p.p_c ** k for k in range(1, p.n_max + 1))


def expected_service_time(payload_bits: int, p: WifiParams) -> float:
    """Closed form: backoff stage i is reached with probability p_c**i."""
    backoff = sum((p.p_c ** i) * (contention_window(i, p) - 1) / 2 * p.slot
                  for i in range(p.n_max + 1))
    return backoff + expected_collisions(p) * collision_time(p) + ampdu_airtime(payload_bits, p)


@dataclass
class TetherRecord:
    arrival: float
    wait: float
    service: float

    @property
    def delay(self) -> float:
        return self.wait + self.service


@dataclass
class TetherQueue:
    """FIFO tether of one group, advanced lazily at each enqueue."""

    params: WifiParams | None          # None -> ideal tether (zero delay)
    records: list[TetherRecord] = field(default_factory=list)
    _last_tick: int = -1

    def enqueue(self, arrival_tick: int, bits: int, rng: RngStream) -> float:
        """Delay in seconds of a payload handed to the tether at ``arrival_tick``."""
        if arrival_tick < self._last_tick:
            raise ValueError(f"out-of-order arrival {arrival_tick} < {self._last_tick}")
        self._last_tick = arrival_tick
        if self.params is None:
            return 0.0
        t = arrival_tick * SYMBOL_S
        if self.records:
            prev = self.records[-1]
            wait = lindley_step(prev.wait, prev.service, t - prev.arrival)
        else:
            wait = 0.0
        service = sample_service_time(bits, self.params, rng).total
        self.records.append(TetherRecord(t, wait, service))
        return wait + service
