"""Simulation configuration.

Every knob of a drop lives in :class:`SimConfig` and its nested sections.
Defaults follow the indoor-hotspot evaluation setup; anything can be
overridden from a YAML file or ``key=value`` strings (dotted keys address
nested sections, e.g. ``tethering.p_collision=0.2``).
"""

from __future__ import annotations

import dataclasses
import enum
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending (dotted) key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class DeviceMode(str, enum.Enum):
    LEGACY = "legacy"
    TGR = "tgr"


class TlMode(str, enum.Enum):
    IDEAL = "ideal"
    WIFI5 = "wifi5"
    WIFI6 = "wifi6"
    WIFI7 = "wifi7"


class LaMode(str, enum.Enum):
    SINGLE_OLLA = "single_olla"
    MOOLLA = "moolla"


class CsiScheme(str, enum.Enum):
    CSI_BEST = "csi_best"
    CSI_UE_X = "csi_ue_x"


@dataclass(frozen=True)
class TruncNormalParams:
    mean: float
    std: float
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ConfigError("low", f"low ({self.low}) must be < high ({self.high})")
        if self.std < 0:
            raise ConfigError("std", "must be >= 0")


@dataclass
class RadioConfig:
    carrier_ghz: float = 4.0
    isd_m: float = 20.0
    gnb_height_m: float = 3.0
    ue_height_m: float = 1.5
    intra_tgr_distance_m: float = 1.0
    tx_power_dbm: float = 31.0
    bandwidth_hz: float = 100e6
    noise_figure_db: float = 7.0
    # Serving-link array gain relative to interferer side lobes (calibration knob).
    bf_gain_db: float = 12.0
    # None -> free-space intercept at 1 m for carrier_ghz.
    pl0_db: float | None = None
    pl_exponent: float = 1.73
    shadowing_std_db: float = 3.0
    tgr_shadow_corr: float = 0.8
    fading_std_db: float = 2.0
    fading_ar: float = 0.95
    bler_slope: float = 1.5
    mcs_table: str | None = None
    rank_penalty_legacy: tuple[float, ...] = (0.0, 1.0, 2.5, 4.5)
    rank_penalty_tgr: tuple[float, ...] = (0.0, 0.5, 1.25, 2.25)
    # Share of the receiver rank penalty that the UE sees when it measures CSI.
    cqi_penalty_visibility: float = 1.0
    # Transmitter/receiver implementation limit on any SINR; None disables it.
    sinr_cap_db: float | None = 20.0

    @property
    def pathloss_intercept_db(self) -> float:
        if self.pl0_db is not None:
            return self.pl0_db
        return 32.4 + 20.0 * math.log10(self.carrier_ghz)


@dataclass
class TrafficConfig:
    fps: float = 60.0
    jitter_ms: TruncNormalParams = TruncNormalParams(0.0, 2.0, -4.0, 4.0)
    frame_kb: TruncNormalParams = TruncNormalParams(93.0, 10.0, 46.0, 141.0)
    max_sdu_bytes: int = 1500
    # Drop buffered bytes at the gNB once their frame deadline has passed.
    discard_expired: bool = True


@dataclass
class SchedulerConfig:
    total_prbs: int = 273
    pf_tau_slots: float = 100.0
    pf_epsilon: float = 1.0
    tdd_pattern: str = "DDDSU"
    s_slot_symbols: int = 10
    re_per_prb: int = 120
    buffer_cap_bytes: int | None = None


@dataclass
class HarqConfig:
    processes: int = 16
    max_retx: int = 3
    ue_proc_symbols: int = 6
    gnb_proc_symbols: float = 2.75


@dataclass
class LaConfig:
    delta_up_db: float = 0.5
    tbler_target: float = 0.1
    initial_offset_db: float = 0.0
    offset_min_db: float = -10.0
    offset_max_db: float = 10.0
    csi_scheme: CsiScheme = CsiScheme.CSI_UE_X
    cqi_period_ms: float = 2.0
    cqi_delay_ms: float = 2.0


@dataclass
class TetherConfig:
    cw_min: int = 15
    cw_max: int = 1023
    n_max: int = 3
    slot_us: float = 9.0
    sifs_us: float = 16.0
    difs_us: float = 34.0
    t_rts_us: float = 27.0
    t_cts_us: float = 19.0
    t_phy_us: float = 120.0
    t_ack_us: float = 32.0
    header_bytes: int = 36
    p_collision: float = 0.10
    t_ofdm_us: float = 13.6
    # Explicit data bits per OFDM symbol; None -> taken from the tl_mode preset.
    dbps: int | None = None


@dataclass
class CoopConfig:
    llr_bits: int = 5
    pdcch_margin_db: float = 6.0


@dataclass
class MetricsConfig:
    prb_util_window_slots: int = 20
    happy_frame_ratio: float = 0.99
    happy_user_ratio: float = 0.90


@dataclass
class SimConfig:
    num_cells: int = 12
    ues_per_cell: int = 5
    device_mode: DeviceMode = DeviceMode.LEGACY
    tl_mode: TlMode = TlMode.IDEAL
    la_mode: LaMode = LaMode.SINGLE_OLLA
    max_rank: int = 4
    warmup_s: float = 9.0
    measure_s: float = 9.0
    drops: int = 10
    pdb_ms: float = 10.0
    master_seed: int = 0
    radio: RadioConfig = field(default_factory=RadioConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    harq: HarqConfig = field(default_factory=HarqConfig)
    la: LaConfig = field(default_factory=LaConfig)
    tethering: TetherConfig = field(default_factory=TetherConfig)
    coop: CoopConfig = field(default_factory=CoopConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> "SimConfig":
        checks = [
            ("num_cells", self.num_cells >= 1, "must be >= 1"),
            ("ues_per_cell", self.ues_per_cell >= 0, "must be >= 0"),
            ("max_rank", 1 <= self.max_rank <= 4, "must be in [1, 4]"),
            ("warmup_s", self.warmup_s >= 0, "must be >= 0"),
            ("measure_s", self.measure_s > 0, "must be > 0"),
            ("drops", self.drops >= 1, "must be >= 1"),
            ("pdb_ms", self.pdb_ms > 0, "must be > 0"),
            ("la.tbler_target", 0 < self.la.tbler_target < 1, "must be in (0, 1)"),
            ("la.delta_up_db", self.la.delta_up_db > 0, "must be > 0"),
            ("tethering.p_collision", 0 <= self.tethering.p_collision < 1, "must be in [0, 1)"),
            ("tethering.n_max", self.tethering.n_max >= 0, "must be >= 0"),
            ("harq.processes", self.harq.processes >= 1, "must be >= 1"),
            ("harq.max_retx", self.harq.max_retx >= 0, "must be >= 0"),
            ("scheduler.total_prbs", self.scheduler.total_prbs >= 1, "must be >= 1"),
            ("scheduler.tdd_pattern", set(self.scheduler.tdd_pattern) <= set("DSU")
             and "U" in self.scheduler.tdd_pattern, "letters D/S/U with at least one U"),
            ("scheduler.s_slot_symbols", 0 <= self.scheduler.s_slot_symbols <= 14, "must be in [0, 14]"),
            ("traffic.max_sdu_bytes", self.traffic.max_sdu_bytes > 0, "must be > 0"),
            ("radio.tgr_shadow_corr", -1 <= self.radio.tgr_shadow_corr <= 1, "must be in [-1, 1]"),
            ("radio.fading_ar", 0 <= self.radio.fading_ar < 1, "must be in [0, 1)"),
            ("radio.cqi_penalty_visibility", 0 <= self.radio.cqi_penalty_visibility <= 1,
             "must be in [0, 1]"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(key, msg)
        for key in ("rank_penalty_legacy", "rank_penalty_tgr"):
            pen = getattr(self.radio, key)
            if len(pen) < self.max_rank:
                raise ConfigError(f"radio.{key}", f"needs {self.max_rank} entries")
            if pen[0] != 0 or any(b < a for a, b in zip(pen, pen[1:])):
                raise ConfigError(f"radio.{key}", "must start at 0 and be non-decreasing")
        return self

    def to_dict(self) -> dict[str, Any]:
        return _to_plain(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        return _build(cls, data, "").validate()


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def _resolve_hints(cls) -> dict[str, Any]:
    return typing.get_type_hints(cls)


def _coerce(tp: Any, value: Any, key: str) -> Any:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, key)
    if dataclasses.is_dataclass(tp):
        if isinstance(value, tp):
            return value
        if not isinstance(value, dict):
            raise ConfigError(key, f"expected a mapping, got {value!r}")
        try:
            return _build(tp, value, key + ".")
        except ConfigError as exc:
            if exc.key.startswith(key + "."):
                raise
            # raised from __post_init__ with a bare field name
            raise ConfigError(f"{key}.{exc.key}", str(exc).split(": ", 1)[-1]) from None
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(value.lower() if isinstance(value, str) else value)
        except ValueError:
            allowed = ", ".join(m.value for m in tp)
            raise ConfigError(key, f"{value!r} not one of {allowed}") from None
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return tuple(float(v) for v in value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, data: dict[str, Any], prefix: str):
    hints = _resolve_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(prefix + str(key), "unknown key")
    kwargs = {k: _coerce(hints[k], v, prefix + k) for k, v in data.items()}
    return cls(**kwargs)


def merge_dicts(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_dicts(out[k], v)
        else:
            out[k] = v
    return out


def parse_override(text: str) -> dict[str, Any]:
    """``"a.b=3"`` -> ``{"a": {"b": 3}}`` with YAML scalar typing."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw) if raw.strip() else None
    node: dict[str, Any] = {}
    cur = node
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value
    return node


def load_config(path: str | Path, overrides: list[str] = ()) -> SimConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    for ov in overrides:
        data = merge_dicts(data, parse_override(ov))
    return SimConfig.from_dict(data)
