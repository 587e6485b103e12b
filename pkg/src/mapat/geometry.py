"""Exact 2-D primitives: points, walls, rays, mirroring and ray/wall intersection.

Azimuths are radians measured counter-clockwise from the +x axis and kept in
``[0, 2*pi)``. Degrees appear only at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

from . import _kernels
from .constants import GEOM_EPS, TWO_PI
from .exceptions import InvalidMapError

if TYPE_CHECKING:
    from .floormap import FloorMap


def normalize_azimuth(angle: float) -> float:
    """Wrap an angle in radians to ``[0, 2*pi)``."""
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    if a >= TWO_PI:
        a = 0.0
    return a


def normalize_azimuths(angles: np.ndarray) -> np.ndarray:
    """Array version of :func:`normalize_azimuth`, bit-identical element-wise."""
    a = np.fmod(np.asarray(angles, dtype=np.float64), TWO_PI)
    a = np.where(a < 0.0, a + TWO_PI, a)
    return np.where(a >= TWO_PI, 0.0, a)


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"point coordinates must be finite, got ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def distance_to(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def azimuth_to(self, other: Point) -> float:
        return normalize_azimuth(math.atan2(other.y - self.y, other.x - self.x))

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, slots=True)
class Wall:
    """A closed wall segment from ``a`` to ``b``.

    ``transmissive`` only matters to the forward tracer: a transmissive wall
    lets a path through (counted as a transmission), an opaque one blocks it.
    """

    a: Point
    b: Point
    transmissive: bool = False

    def __post_init__(self):
        if self.length <= GEOM_EPS:
            raise InvalidMapError("wall endpoints coincide (zero-length wall)")

    @property
    def length(self) -> float:
        return self.a.distance_to(self.b)

    @property
    def direction(self) -> tuple[float, float]:
        """Unit vector from ``a`` to ``b``."""
        L = self.length
        return (self.b.x - self.a.x) / L, (self.b.y - self.a.y) / L

    @property
    def normal(self) -> tuple[float, float]:
        """Unit normal pointing into the +1 half-plane of :func:`side_of`."""
        ux, uy = self.direction
        return -uy, ux


@dataclass(frozen=True, slots=True)
class Ray:
    origin: Point
    azimuth: float

    def __post_init__(self):
        if not math.isfinite(self.azimuth):
            raise ValueError("ray azimuth must be finite")
        object.__setattr__(self, "azimuth", normalize_azimuth(self.azimuth))

    @property
    def direction(self) -> tuple[float, float]:
        return math.cos(self.azimuth), math.sin(self.azimuth)

    def at(self, distance: float) -> Point:
        dx, dy = self.direction
        return Point(self.origin.x + distance * dx, self.origin.y + distance * dy)


@dataclass(frozen=True, slots=True)
class Hit:
    wall: Wall
    wall_index: int
    point: Point
    distance: float
    side: int


def side_of(w: Wall, p: Point) -> int:
    """Sign of the cross product ``(b - a) x (p - a)``; 0 when ``p`` is on the wall line."""
    ex = w.b.x - w.a.x
    ey = w.b.y - w.a.y
    cross = ex * (p.y - w.a.y) - ey * (p.x - w.a.x)
    if abs(cross) < GEOM_EPS * math.hypot(ex, ey):
        return 0
    return 1 if cross > 0 else -1


def mirror_point(p: Point, w: Wall) -> Point:
    """Image of ``p`` through the infinite line containing ``w``."""
    ex = w.b.x - w.a.x
    ey = w.b.y - w.a.y
    L2 = ex * ex + ey * ey
    if L2 <= GEOM_EPS * GEOM_EPS:
        raise InvalidMapError("cannot mirror through a zero-length wall")
    t = ((p.x - w.a.x) * ex + (p.y - w.a.y) * ey) / L2
    fx = w.a.x + t * ex
    fy = w.a.y + t * ey
    return Point(2.0 * fx - p.x, 2.0 * fy - p.y)


def reflect_direction(dx: float, dy: float, w: Wall) -> tuple[float, float]:
    """Specular reflection of a direction vector off the line of ``w``."""
    ex, ey = w.direction
    along = dx * ex + dy * ey
    return 2.0 * along * ex - dx, 2.0 * along * ey - dy


def reflect_ray(r: Ray, h: Hit) -> Ray:
    """Continue ``r`` specularly from the hit point.

    The tangential component of the direction is kept and the normal one negated.
    """
    dx, dy = reflect_direction(*r.direction, h.wall)
    return Ray(h.point, math.atan2(dy, dx))


def first_hit(
    r: Ray, floor_map: FloorMap, exclude: Optional[Union[int, Wall]] = None
) -> Optional[Hit]:
    """Nearest wall struck by ``r`` at positive distance, or ``None``.

    ``exclude`` (a wall or its index) is skipped, which is how a ray leaving a
    wall avoids re-hitting it. Segment endpoints count as hits.
    """
    if isinstance(exclude, Wall):
        exclude = floor_map.index_of(exclude)
    dx, dy = r.direction
    idx, t = _kernels.first_hit(
        floor_map.wall_array, r.origin.x, r.origin.y, dx, dy,
        -1 if exclude is None else int(exclude), GEOM_EPS,
    )
    if idx < 0:
        return None
    wall = floor_map.walls[idx]
    return Hit(
        wall=wall,
        wall_index=int(idx),
        point=r.at(t),
        distance=float(t),
        side=side_of(wall, r.origin) or 1,
    )


def segment_crossing(p: Point, q: Point, w: Wall) -> Optional[float]:
    """Fraction along ``p -> q`` where the segment crosses wall ``w``.

    Returns ``None`` for parallel or non-crossing pairs. The wall is closed
    (endpoints count); the returned fraction may be anywhere in ``[0, 1]`` and
    callers decide whether contact at ``p`` or ``q`` counts.
    """
    dx = q.x - p.x
    dy = q.y - p.y
    ex = w.b.x - w.a.x
    ey = w.b.y - w.a.y
    denom = dx * ey - dy * ex
    if abs(denom) <= 1e-12 * math.hypot(dx, dy) * math.hypot(ex, ey):
        return None
    wx = w.a.x - p.x
    wy = w.a.y - p.y
    u = (wx * ey - wy * ex) / denom
    s = (wx * dy - wy * dx) / denom
    if u < 0.0 or u > 1.0 or s < -1e-12 or s > 1.0 + 1e-12:
        return None
    return u
