"""Parametric downlink radio abstraction.

Replaces a geometric MIMO channel with: log-distance pathloss plus lognormal
shadowing on a hall deployment, a first-order autoregressive fast-fading term
on the wideband SINR, interference scaled by each neighbour cell's recent PRB
activity, a per-rank receiver penalty, and a logistic SINR->BLER curve per MCS.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .config import RadioConfig, SimConfig
from .rng import RngFactory, RngStream


@dataclass(frozen=True)
class McsTable:
    mod_order: tuple[int, ...]
    code_rate: tuple[float, ...]
    efficiency: tuple[float, ...]
    threshold_db: tuple[float, ...]

    def __post_init__(self):
        n = len(self.efficiency)
        if not (len(self.mod_order) == len(self.code_rate) == len(self.threshold_db) == n):
            raise ValueError("MCS table columns have different lengths")
        if any(b <= a for a, b in zip(self.efficiency, self.efficiency[1:])):
            raise ValueError("efficiency must be strictly increasing in MCS index")
        if any(b <= a for a, b in zip(self.threshold_db, self.threshold_db[1:])):
            raise ValueError("SINR thresholds must be strictly increasing in MCS index")
        if any(q not in (2, 4, 6, 8) for q in self.mod_order):
            raise ValueError("modulation order must be one of 2, 4, 6, 8")

    def __len__(self) -> int:
        return len(self.efficiency)

    @classmethod
    def from_csv(cls, path: str | Path | None = None) -> "McsTable":
        if path is None:
            text = resources.files("tgrsim").joinpath("data/mcs_table.csv").read_text()
        else:
            text = Path(path).read_text()
        rows = sorted(csv.DictReader(text.splitlines()), key=lambda r: int(r["index"]))
        return cls(
            mod_order=tuple(int(r["mod_order"]) for r in rows),
            code_rate=tuple(float(r["code_rate"]) for r in rows),
            efficiency=tuple(float(r["efficiency"]) for r in rows),
            threshold_db=tuple(float(r["sinr_threshold_db"]) for r in rows),
        )


def bler(gamma_db: float, mcs: int, table: McsTable, slope: float = 1.5) -> float:
    """Logistic block error rate; 0.5 exactly at the MCS threshold."""
    x = slope * (gamma_db - table.threshold_db[mcs])
    if x > 700:
        return 0.0
    if x < -700:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def per_layer_sinr(wideband_db: float, rank: int, penalty: tuple[float, ...]) -> float:
    """Equal power split over ``rank`` layers plus the receiver penalty for that rank."""
    return wideband_db - 10.0 * math.log10(rank) - penalty[rank - 1]


def tb_size(prbs: int, mcs: int, rank: int, table: McsTable, re_per_prb: int = 120) -> int:
    """Information bits of a TB spanning ``prbs`` PRBs on ``rank`` layers."""
    return math.floor(prbs * re_per_prb * table.efficiency[mcs] * rank)


def coded_bits(prbs: int, mcs: int, rank: int, table: McsTable, re_per_prb: int = 120) -> int:
    return prbs * re_per_prb * table.mod_order[mcs] * rank


def soft_combined_sinr(gamma_x_db: float, gamma_t_db: float) -> float:
    """Chase-style combining: linear SINRs add."""
    lin = 10.0 ** (gamma_x_db / 10.0) + 10.0 ** (gamma_t_db / 10.0)
    return 10.0 * math.log10(lin) if lin > 0 else -math.inf


def db_to_lin(x):
    return 10.0 ** (np.asarray(x) / 10.0)


def lin_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def pathloss_db(d3d_m, cfg: RadioConfig):
    d = np.maximum(np.asarray(d3d_m, dtype=float), 1.0)
    return cfg.pathloss_intercept_db + 10.0 * cfg.pl_exponent * np.log10(d)


def noise_dbm(cfg: RadioConfig) -> float:
    return -174.0 + 10.0 * math.log10(cfg.bandwidth_hz) + cfg.noise_figure_db


def cell_layout(num_cells: int, isd_m: float) -> tuple[np.ndarray, tuple[float, float]]:
    """Cells on a two-row grid; 12 cells at 20 m ISD gives the 120 m x 50 m hall."""
    rows = 1 if num_cells == 1 else 2
    cols = math.ceil(num_cells / rows)
    pos = [((c + 0.5) * isd_m, 5.0 + (r + 0.5) * isd_m)
           for r in range(rows) for c in range(cols)][:num_cells]
    hall = (cols * isd_m, rows * isd_m + 10.0)
    return np.array(pos), hall


@dataclass
class Deployment:
    cell_xy: np.ndarray          # (cells, 2)
    hall: tuple[float, float]
    ue_xy: np.ndarray            # (devices, 2)
    serving: np.ndarray          # (devices,) serving cell index
    shadow_db: np.ndarray        # (devices, cells)
    partner: np.ndarray          # (devices,) index of TGr partner, -1 if none
    is_xr: np.ndarray            # (devices,) True for UE-X / legacy XR UE

    @property
    def num_devices(self) -> int:
        return len(self.serving)


def _distances(ue_xy: np.ndarray, cell_xy: np.ndarray, cfg: RadioConfig) -> np.ndarray:
    d2 = np.linalg.norm(ue_xy[:, None, :] - cell_xy[None, :, :], axis=-1)
    return np.sqrt(d2 ** 2 + (cfg.gnb_height_m - cfg.ue_height_m) ** 2)


def build_deployment(config: SimConfig, rngs: RngFactory) -> Deployment:
    """Drop ``ues_per_cell`` XR users into every cell (strongest-cell association).

    In TGr mode each XR UE gets a partner ``intra_tgr_distance_m`` away at a
    uniform bearing, with shadowing correlated to its own and the same serving
    cell. Device order: the XR UE of user ``k`` is device ``k`` (legacy) or
    ``2k`` with the partner at ``2k + 1`` (TGr).
    """
    cfg = config.radio
    tgr = config.device_mode.value == "tgr"
    cell_xy, hall = cell_layout(config.num_cells, cfg.isd_m)
    n_cells = config.num_cells
    rng = rngs.stream("deployment").gen

    quota = [config.ues_per_cell] * n_cells
    xs, shadows, serving = [], [], []
    need = config.ues_per_cell * n_cells
    attempts = 0
    while len(xs) < need:
        attempts += 1
        if attempts > 10000 * max(need, 1):
            raise RuntimeError("could not fill cell quotas; check layout parameters")
        p = rng.uniform((0.0, 0.0), hall)
        sh = rng.standard_normal(n_cells) * cfg.shadowing_std_db
        d = _distances(p[None, :], cell_xy, cfg)[0]
        rx = -pathloss_db(d, cfg) - sh
        best = int(np.argmax(rx))
        if quota[best] == 0:
            continue
        quota[best] -= 1
        xs.append(p)
        shadows.append(sh)
        serving.append(best)
    # order users by serving cell so per-cell ids are contiguous and stable
    order = sorted(range(need), key=lambda i: (serving[i], i))
    xs = [xs[i] for i in order]
    shadows = [shadows[i] for i in order]
    serving = [serving[i] for i in order]

    if not tgr:
        return Deployment(cell_xy, hall, np.array(xs).reshape(-1, 2), np.array(serving, dtype=int),
                          np.array(shadows).reshape(-1, n_cells), np.full(need, -1),
                          np.ones(need, dtype=bool))

    ue_xy, sh_all, serv_all, partner, is_xr = [], [], [], [], []
    rho = cfg.tgr_shadow_corr
    for k, (p, sh, s) in enumerate(zip(xs, shadows, serving)):
        for _ in range(100):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            q = p + cfg.intra_tgr_distance_m * np.array([math.cos(theta), math.sin(theta)])
            if 0.0 <= q[0] <= hall[0] and 0.0 <= q[1] <= hall[1]:
                break
        sh_t = rho * sh + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n_cells) * cfg.shadowing_std_db
        ue_xy += [p, q]
        sh_all += [sh, sh_t]
        serv_all += [s, s]
        partner += [2 * k + 1, 2 * k]
        is_xr += [True, False]
    return Deployment(cell_xy, hall, np.array(ue_xy), np.array(serv_all, dtype=int),
                      np.array(sh_all), np.array(partner), np.array(is_xr))


class RadioState:
    """Per-drop link gains and fading; produces wideband SINR per slot."""

    def __init__(self, config: SimConfig, deployment: Deployment, n_slots: int,
                 rngs: RngFactory | None = None, fading: bool = True):
        cfg = config.radio
        self.cfg = cfg
        self.dep = deployment
        n_dev = deployment.num_devices
        d = _distances(deployment.ue_xy, deployment.cell_xy, cfg)
        rx_dbm = cfg.tx_power_dbm - pathloss_db(d, cfg) - deployment.shadow_db
        gain = db_to_lin(rx_dbm)                                    # mW
        idx = np.arange(n_dev)
        self.serving_mw = gain[idx, deployment.serving] * db_to_lin(cfg.bf_gain_db)
        self.interf_mw = gain.copy()
        self.interf_mw[idx, deployment.serving] = 0.0
        self.noise_mw = float(db_to_lin(noise_dbm(cfg)))
        self.n_slots = n_slots
        if fading and cfg.fading_std_db > 0 and rngs is not None:
            self.fading_db = self._ar1_fading(n_dev, n_slots, rngs)
        else:
            self.fading_db = np.zeros((n_slots, n_dev))

    def _ar1_fading(self, n_dev: int, n_slots: int, rngs: RngFactory) -> np.ndarray:
        a, sigma = self.cfg.fading_ar, self.cfg.fading_std_db
        cell = self.dep.serving
        noise = np.empty((n_slots, n_dev))
        for i in range(n_dev):
            noise[:, i] = rngs.stream("fading", int(cell[i]), i).normal(n_slots)
        drive = noise * sigma * math.sqrt(1.0 - a * a)
        drive[0] = noise[0] * sigma  # start in the stationary distribution
        return lfilter([1.0], [1.0, -a], drive, axis=0)

    def snr_db(self) -> np.ndarray:
        """Noise-only SNR per device (no interference, no fading)."""
        return lin_to_db(self.serving_mw / self.noise_mw)

    def sinr_db(self, slot: int, activity: np.ndarray) -> np.ndarray:
        """Wideband SINR of every device given per-cell activity factors in [0, 1]."""
        interference = self.interf_mw @ activity
        base = lin_to_db(self.serving_mw / (interference + self.noise_mw))
        out = base + self.fading_db[min(slot, self.n_slots - 1)]
        if self.cfg.sinr_cap_db is not None:
            np.minimum(out, self.cfg.sinr_cap_db, out=out)
        return out

    def wideband_sinr(self, ue: int, slot: int, activity: np.ndarray) -> float:
        return float(self.sinr_db(slot, activity)[ue])


def sample_bernoulli_success(gamma_db: float, mcs: int, table: McsTable, slope: float,
                             rng: RngStream) -> bool:
    return rng.random() >= bler(gamma_db, mcs, table, slope)
