"""Scenario files, built-in presets and sweep execution."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .config import ConfigError, SimConfig, merge_dicts, parse_override
from .metrics import (DropResult, capacity_from_sweep, summarize_point, write_metrics_csv,
                      write_summary_json)
from .simulation import run_drop

log = logging.getLogger(__name__)

_SCENARIO_KEYS = {"name", "description", "base", "config", "sweep", "output"}


@dataclass
class ScenarioSpec:
    name: str
    config: dict[str, Any]
    sweep: dict[str, list[Any]] = field(default_factory=dict)
    description: str = ""
    output: str | None = None

    def __post_init__(self):
        if not isinstance(self.sweep, dict):
            raise ConfigError("sweep", "must be a mapping of config key to value list")
        for key, values in self.sweep.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.{key}", "must be a non-empty list")
        self.points()

    def base_config(self) -> SimConfig:
        return SimConfig.from_dict(self.config)

    def points(self) -> list[tuple[dict[str, Any], SimConfig]]:
        """Cartesian product of the sweep axes, each as (axis values, config)."""
        keys = sorted(self.sweep)
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            values = dict(zip(keys, combo))
            data = self.config
            for k, v in values.items():
                data = merge_dicts(data, _nested(k, v))
            out.append((values, SimConfig.from_dict(data)))
        return out


def _nested(key: str, value: Any) -> dict[str, Any]:
    node: dict[str, Any] = {}
    cur = node
    parts = key.split(".")
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value
    return node


def list_presets() -> list[str]:
    files = resources.files("tgrsim").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def _preset_text(name: str) -> str:
    path = resources.files("tgrsim").joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ConfigError("scenario", f"no preset or file named {name!r}")
    return path.read_text()


def scenario_from_dict(data: dict[str, Any], default_name: str = "scenario") -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ConfigError("scenario", "top level must be a mapping")
    for key in data:
        if key not in _SCENARIO_KEYS:
            raise ConfigError(str(key), "unknown scenario key")
    config = data.get("config") or {}
    if data.get("base"):
        base = yaml.safe_load(_preset_text(data["base"]))
        config = merge_dicts(base.get("config") or {}, config)
        sweep = data.get("sweep", base.get("sweep", {}))
    else:
        sweep = data.get("sweep", {})
    return ScenarioSpec(str(data.get("name", default_name)), config, sweep or {},
                        data.get("description", ""), data.get("output"))


def load_scenario(ref: str, overrides: list[str] = ()) -> ScenarioSpec:
    """Load a scenario from a YAML file or a preset name, then apply ``key=value`` overrides.

    Overrides starting with ``sweep.`` replace a sweep axis; the rest patch the config.
    """
    path = Path(ref)
    if path.is_file():
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
        default_name = path.stem
    else:
        data = yaml.safe_load(_preset_text(ref))
        default_name = ref
    if not isinstance(data, dict):
        raise ConfigError("scenario", "top level must be a mapping")
    data = dict(data)
    for ov in overrides:
        patch = parse_override(ov)
        if "sweep" in patch:
            data["sweep"] = merge_dicts(data.get("sweep") or {}, patch.pop("sweep"))
        if patch:
            data["config"] = merge_dicts(data.get("config") or {}, patch)
    return scenario_from_dict(data, default_name)


def _run_job(args: tuple[int, SimConfig, int]) -> tuple[int, DropResult]:
    idx, cfg, drop = args
    return idx, run_drop(cfg, drop)


def run_scenario(spec: ScenarioSpec, out_dir: Path, *, seed: int | None = None,
                 drops: int | None = None, parallel: int = 1) -> dict[str, Any]:
    """Run every sweep point and drop, write the CSV and JSON, return the summary."""
    points = spec.points()
    cfgs = []
    for _, cfg in points:
        if seed is not None:
            cfg.master_seed = seed
        if drops is not None:
            cfg.drops = drops
        cfgs.append(cfg.validate())
    jobs = [(i, cfg, d) for i, cfg in enumerate(cfgs) for d in range(cfg.drops)]
    log.info("scenario %s: %d points, %d drops", spec.name, len(cfgs), len(jobs))

    results: dict[int, list[DropResult]] = {i: [] for i in range(len(cfgs))}
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            for idx, res in pool.map(_run_job, jobs):
                results[idx].append(res)
    else:
        for job in jobs:
            idx, res = _run_job(job)
            results[idx].append(res)
    for lst in results.values():
        lst.sort(key=lambda r: r.drop)

    out_dir.mkdir(parents=True, exist_ok=True)
    summary = build_summary(spec, points, cfgs, results)
    _write_outputs(spec, out_dir, points, cfgs, results, summary)
    return summary


def _group_label(values: dict[str, Any]) -> str:
    rest = {k: v for k, v in values.items() if k != "ues_per_cell"}
    return ",".join(f"{k}={v}" for k, v in sorted(rest.items()))


def build_summary(spec, points, cfgs, results) -> dict[str, Any]:
    point_entries = []
    groups: dict[str, list[tuple[float, float]]] = {}
    for i, ((values, _), cfg) in enumerate(zip(points, cfgs)):
        s = summarize_point(results[i], cfg.pdb_ms, cfg.harq.processes,
                            cfg.metrics.happy_frame_ratio)
        s["sweep"] = values
        s["ues_per_cell"] = cfg.ues_per_cell
        point_entries.append(s)
        groups.setdefault(_group_label(values), []).append((cfg.ues_per_cell, s["happy_pct"]))
    capacity = {}
    for label, pts in sorted(groups.items()):
        target = 100.0 * cfgs[0].metrics.happy_user_ratio
        cap = capacity_from_sweep(pts, target)
        capacity[label or "all"] = {"users_per_cell": cap.capacity, "approximate": cap.approximate}
    return {
        "scenario": spec.name,
        "config": cfgs[0].to_dict() if cfgs else {},
        "points": point_entries,
        "capacity": capacity,
    }


def _write_outputs(spec, out_dir, points, cfgs, results, summary) -> None:
    by_group: dict[str, dict[int, list[DropResult]]] = {}
    for i, ((values, _), cfg) in enumerate(zip(points, cfgs)):
        label = _group_label(values)
        by_group.setdefault(label, {})[cfg.ues_per_cell] = results[i]
    processes = cfgs[0].harq.processes if cfgs else 16
    # scenario column carries the non-load sweep values when there are any
    tagged = {(f"{spec.name}[{label}]" if label else spec.name): loads
              for label, loads in sorted(by_group.items())}
    write_metrics_csv(out_dir / f"metrics_{spec.name}.csv", tagged, processes)
    write_summary_json(out_dir / f"summary_{spec.name}.json", summary)
