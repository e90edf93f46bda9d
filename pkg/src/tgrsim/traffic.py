"""XR downlink traffic: 60 fps frames with truncated-normal size and jitter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import ndtr, ndtri

from .config import TrafficConfig, TruncNormalParams
from .engine import seconds_to_ticks
from .rng import RngStream


def truncnorm_mean(p: TruncNormalParams) -> float:
    """Closed-form mean of N(mean, std) truncated to [low, high]."""
    if p.std == 0:
        return min(max(p.mean, p.low), p.high)
    a = (p.low - p.mean) / p.std
    b = (p.high - p.mean) / p.std
    z = ndtr(b) - ndtr(a)
    phi = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    return p.mean + p.std * (phi(a) - phi(b)) / z


def sample_truncnorm(p: TruncNormalParams, rng: RngStream) -> float:
    """Inverse-CDF draw from the truncated normal; always inside [low, high]."""
    if p.std == 0:
        return min(max(p.mean, p.low), p.high)
    lo = float(ndtr((p.low - p.mean) / p.std))
    hi = float(ndtr((p.high - p.mean) / p.std))
    u = lo + (hi - lo) * rng.random()
    x = p.mean + p.std * float(ndtri(u))
    return min(max(x, p.low), p.high)


def sample_frame_size(params: TruncNormalParams, rng: RngStream) -> int:
    """Frame size in bytes; ``params`` are in kB (1 kB = 1000 B)."""
    kb = sample_truncnorm(params, rng)
    lo, hi = math.ceil(params.low * 1000), math.floor(params.high * 1000)
    return min(max(int(round(kb * 1000)), lo), hi)


@dataclass
class XrFrame:
    frame_id: int
    owner: int
    arrival_tick: int
    size_bytes: int
    deadline_tick: int
    delivered_bytes: int = 0
    delivered_tick: int = -1
    lost: bool = False

    @property
    def complete(self) -> bool:
        return not self.lost and self.delivered_bytes >= self.size_bytes


@dataclass
class Packet:
    frame: XrFrame
    size: int
    remaining: int = field(init=False)

    def __post_init__(self):
        self.remaining = self.size

    @property
    def deadline_tick(self) -> int:
        return self.frame.deadline_tick


def segment_frame(frame: XrFrame, max_sdu: int) -> list[Packet]:
    if max_sdu <= 0:
        raise ValueError("max_sdu must be > 0")
    full, rest = divmod(frame.size_bytes, max_sdu)
    sizes = [max_sdu] * full + ([rest] if rest else [])
    return [Packet(frame, s) for s in sizes]


def next_frame_arrival(index: int, start_s: float, rng: RngStream,
                       cfg: TrafficConfig) -> tuple[float, int]:
    """Nominal time and jittered arrival tick of the ``index``-th frame.

    The nominal grid is ``start_s + index / fps`` so jitter never accumulates.
    """
    nominal = start_s + index / cfg.fps
    jitter_s = sample_truncnorm(cfg.jitter_ms, rng) * 1e-3
    return nominal, seconds_to_ticks(max(0.0, nominal + jitter_s))


class FrameSource:
    """Per-user frame generator; one RNG stream drives jitter and size."""

    def __init__(self, owner: int, cfg: TrafficConfig, pdb_ms: float, rng: RngStream):
        self.owner = owner
        self.cfg = cfg
        self.pdb_ticks = seconds_to_ticks(pdb_ms * 1e-3)
        self.rng = rng
        self.start_s = rng.random() / cfg.fps
        self.index = 1
        self.next_id = 0

    def next(self) -> tuple[int, int]:
        """(arrival tick, size bytes) of the next frame, advancing the grid."""
        _, tick = next_frame_arrival(self.index, self.start_s, self.rng, self.cfg)
        size = sample_frame_size(self.cfg.frame_kb, self.rng)
        self.index += 1
        return tick, size

    def make_frame(self, tick: int, size: int) -> XrFrame:
        frame = XrFrame(self.next_id, self.owner, tick, size, tick + self.pdb_ticks)
        self.next_id += 1
        return frame

