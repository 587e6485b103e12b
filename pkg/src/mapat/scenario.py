"""Scenario files: one map, one BS, labelled UE ground truths and run settings.

Layout (UTF-8, JSON)::

    {
      "map": "office_map.json",          # relative to this file, or "builtin:office"
      "bs": [16.0, 8.0],
      "ues": [{"label": "corridor-10m", "pos": [16.5, 18.0]}],
      "trace": {"max_reflections": 3, "max_transmissions": 1, "frequency_hz": 28e9,
                "reflection_loss_db": 7.0, "transmission_loss_db": 10.0, "max_paths": null},
      "map_at": {"max_interactions": 3, "cluster_radius_m": 0.5, "min_leg_m": 0.001},
      "noise": {"sigma_t_ns": 0.25, "sigma_theta_deg": 0.5, "seed": 0},
      "runs": 1000
    }

Everything except ``map``, ``bs`` and ``ues`` is optional.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .core import MapAtParams
from .error_model import NoiseParams
from .exceptions import MapParseError, PreconditionError
from .floormap import FloorMap, bundled_office_map, read_map
from .geometry import Point
from .tracer import TraceParams

BUILTIN_MAPS = {"builtin:office": bundled_office_map}


@dataclass(frozen=True)
class ScenarioConfig:
    floor_map: FloorMap
    bs: Point
    ues: tuple[tuple[str, Point], ...]
    trace_params: TraceParams = TraceParams()
    map_at_params: MapAtParams = MapAtParams()
    noise: NoiseParams = NoiseParams()
    runs: int = 1000

    def __post_init__(self):
        if not self.ues:
            raise PreconditionError("scenario needs at least one UE")
        if self.runs < 1:
            raise PreconditionError("runs must be >= 1")
        labels = [lab for lab, _ in self.ues]
        if len(set(labels)) != len(labels):
            raise PreconditionError("UE labels must be unique")
        for lab, p in (("bs", self.bs), *self.ues):
            if not self.floor_map.bounds.contains(p):
                raise PreconditionError(f"{lab} lies outside the map bounds")

    def ue(self, label: str) -> Point:
        for lab, p in self.ues:
            if lab == label:
                return p
        raise KeyError(f"no UE labelled {label!r}; known: {', '.join(l for l, _ in self.ues)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise MapParseError("must be a finite number", field=where)
    return float(value)


def _point(value, where: str) -> Point:
    if not isinstance(value, list) or len(value) != 2:
        raise MapParseError("expected [x, y]", field=where)
    return Point(_number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]"))


def _section(doc: dict, key: str, allowed: set[str]) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise MapParseError("must be an object", field=key)
    unknown = set(sec) - allowed
    if unknown:
        raise MapParseError(f"unknown keys {sorted(unknown)}", field=key)
    return sec


def _build(cls, sec: dict, where: str):
    try:
        return cls(**sec)
    except (TypeError, PreconditionError) as exc:
        raise MapParseError(str(exc), field=where) from None


def scenario_from_dict(doc: dict, base_dir: Path = Path(".")) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise MapParseError("scenario document must be a JSON object")
    unknown = set(doc) - {"map", "bs", "ues", "trace", "map_at", "noise", "runs"}
    if unknown:
        raise MapParseError(f"unknown keys {sorted(unknown)}")
    for key in ("map", "bs", "ues"):
        if key not in doc:
            raise MapParseError("missing", field=key)

    ref = doc["map"]
    if not isinstance(ref, str):
        raise MapParseError("must be a path string", field="map")
    if ref in BUILTIN_MAPS:
        floor_map = BUILTIN_MAPS[ref]()
    else:
        floor_map = read_map(base_dir / ref)

    if not isinstance(doc["ues"], list):
        raise MapParseError("must be a list", field="ues")
    ues = []
    for i, rec in enumerate(doc["ues"]):
        where = f"ues[{i}]"
        if not isinstance(rec, dict) or set(rec) != {"label", "pos"}:
            raise MapParseError("expected {\"label\": ..., \"pos\": [x, y]}", field=where)
        if not isinstance(rec["label"], str) or not rec["label"]:
            raise MapParseError("must be a non-empty string", field=f"{where}.label")
        ues.append((rec["label"], _point(rec["pos"], f"{where}.pos")))

    trace = _build(TraceParams, _section(doc, "trace", {f.name for f in fields(TraceParams)}), "trace")
    map_at = _build(MapAtParams, _section(doc, "map_at", {f.name for f in fields(MapAtParams)}), "map_at")
    nsec = _section(doc, "noise", {"sigma_t_ns", "sigma_theta_deg", "seed"})
    defaults = NoiseParams()
    noise_kw = {
        "sigma_t": _number(nsec["sigma_t_ns"], "noise.sigma_t_ns") * 1e-9
        if "sigma_t_ns" in nsec else defaults.sigma_t,
        "sigma_theta": math.radians(_number(nsec["sigma_theta_deg"], "noise.sigma_theta_deg"))
        if "sigma_theta_deg" in nsec else defaults.sigma_theta,
    }
    if "seed" in nsec:
        if isinstance(nsec["seed"], bool) or not isinstance(nsec["seed"], int):
            raise MapParseError("must be an integer", field="noise.seed")
        noise_kw["seed"] = nsec["seed"]
    noise = _build(NoiseParams, noise_kw, "noise")

    runs = doc.get("runs", 1000)
    if isinstance(runs, bool) or not isinstance(runs, int):
        raise MapParseError("must be an integer", field="runs")
    try:
        return ScenarioConfig(floor_map, _point(doc["bs"], "bs"), tuple(ues), trace, map_at, noise, runs)
    except PreconditionError as exc:
        raise MapParseError(str(exc)) from None


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file; a relative map path is resolved against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MapParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return scenario_from_dict(doc, path.parent)


def bundled_office_scenario_path() -> Path:
    return Path(str(resources.files("mapat").joinpath("data/office_scenario.json")))


def bundled_office_scenario() -> ScenarioConfig:
    return load_scenario(bundled_office_scenario_path())
