"""Random floor plans and BS/UE placements for property tests and benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .floormap import FloorMap
from .geometry import Point, Wall


@dataclass(frozen=True)
class Scenario:
    floor_map: FloorMap
    bs: Point
    ue: Point


def random_floor_map(
    rng: np.random.Generator,
    n_walls: int,
    extent: float = 30.0,
    length_range: tuple[float, float] = (3.0, 12.0),
    p_transmissive: float = 0.3,
    margin_m: float = 1.0,
) -> FloorMap:
    """Independent segments with uniform centers in ``[0, extent]^2`` and random headings."""
    walls = []
    for _ in range(n_walls):
        cx, cy = rng.uniform(0.0, extent, 2)
        half = rng.uniform(*length_range) / 2
        phi = rng.uniform(0.0, math.pi)
        dx, dy = half * math.cos(phi), half * math.sin(phi)
        walls.append(
            Wall(
                Point(cx - dx, cy - dy),
                Point(cx + dx, cy + dy),
                bool(rng.random() < p_transmissive),
            )
        )
    return FloorMap(tuple(walls), margin_m)


def _clear_of_walls(floor_map: FloorMap, p: Point, clearance: float) -> bool:
    for w in floor_map.walls:
        ex, ey = w.b.x - w.a.x, w.b.y - w.a.y
        t = ((p.x - w.a.x) * ex + (p.y - w.a.y) * ey) / (ex * ex + ey * ey)
        t = min(1.0, max(0.0, t))
        if math.hypot(p.x - (w.a.x + t * ex), p.y - (w.a.y + t * ey)) < clearance:
            return False
    return True


def random_point(rng: np.random.Generator, floor_map: FloorMap, clearance: float = 0.1) -> Point:
    """Uniform point in the map bounds at least ``clearance`` from every wall."""
    b = floor_map.bounds
    while True:
        p = Point(rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax))
        if _clear_of_walls(floor_map, p, clearance):
            return p


def random_scenario(
    rng: np.random.Generator, min_walls: int = 4, max_walls: int = 20, extent: float = 30.0,
    min_separation: float = 1.0,
) -> Scenario:
    fm = random_floor_map(rng, int(rng.integers(min_walls, max_walls + 1)), extent)
    bs = random_point(rng, fm)
    while True:
        ue = random_point(rng, fm)
        if ue.distance_to(bs) >= min_separation:
            return Scenario(fm, bs, ue)
