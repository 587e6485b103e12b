"""Floor-plan container and JSON map files.

Map file layout (UTF-8, JSON)::

    {
      "margin_m": 1.0,
      "walls": [
        {"a": [0.0, 0.0], "b": [10.0, 0.0], "transmissive": false},
        ...
      ]
    }

``margin_m`` and ``transmissive`` are optional (defaults 1.0 and false).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import InvalidMapError, MapParseError
from .geometry import Point, Wall
from .constants import GEOM_EPS

DEFAULT_MARGIN_M = 1.0


@dataclass(frozen=True)
class Bounds:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, p: Point) -> bool:
        # closed rectangle, widened by the geometric tolerance
        return (
            self.xmin - GEOM_EPS <= p.x <= self.xmax + GEOM_EPS
            and self.ymin - GEOM_EPS <= p.y <= self.ymax + GEOM_EPS
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.xmin, self.ymin, self.xmax, self.ymax], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FloorMap:
    """Immutable set of wall segments plus an axis-aligned bounding box.

    Parameters
    ----------
    walls : sequence of Wall
        Ordered walls; a wall's position in this sequence is its index
        everywhere else in the package.
    margin_m : float
        Padding added around the tight bounding box of the wall endpoints.
    """

    walls: tuple[Wall, ...]
    margin_m: float = DEFAULT_MARGIN_M
    bounds: Bounds = field(init=False)

    def __post_init__(self):
        walls = tuple(self.walls)
        if not walls:
            raise InvalidMapError("a floor map needs at least one wall")
        for i, w in enumerate(walls):
            if not isinstance(w, Wall):
                raise InvalidMapError(f"expected Wall, got {type(w).__name__}", i)
        if not (math.isfinite(self.margin_m) and self.margin_m >= 0):
            raise InvalidMapError(f"margin_m must be finite and >= 0, got {self.margin_m}")
        object.__setattr__(self, "walls", walls)
        xs = [c for w in walls for c in (w.a.x, w.b.x)]
        ys = [c for w in walls for c in (w.a.y, w.b.y)]
        m = self.margin_m
        object.__setattr__(
            self, "bounds", Bounds(min(xs) - m, min(ys) - m, max(xs) + m, max(ys) + m)
        )

    def __eq__(self, other):
        if not isinstance(other, FloorMap):
            return NotImplemented
        return self.walls == other.walls and self.margin_m == other.margin_m

    def __hash__(self):
        return hash((self.walls, self.margin_m))

    def __len__(self):
        return len(self.walls)

    @cached_property
    def wall_array(self) -> np.ndarray:
        """``(W, 4)`` array of ``[ax, ay, bx, by]`` rows, read-only."""
        arr = np.array(
            [[w.a.x, w.a.y, w.b.x, w.b.y] for w in self.walls], dtype=np.float64
        )
        arr.setflags(write=False)
        return arr

    @cached_property
    def bounds_array(self) -> np.ndarray:
        arr = self.bounds.as_array()
        arr.setflags(write=False)
        return arr

    def index_of(self, wall: Wall) -> int:
        for i, w in enumerate(self.walls):
            if w is wall:
                return i
        return self.walls.index(wall)

    def to_dict(self) -> dict:
        return {
            "margin_m": self.margin_m,
            "walls": [
                {"a": [w.a.x, w.a.y], "b": [w.b.x, w.b.y], "transmissive": w.transmissive}
                for w in self.walls
            ],
        }


def validate_point_in_bounds(floor_map: FloorMap, p: Point) -> bool:
    """True iff ``p`` lies in the map's closed bounding rectangle."""
    return floor_map.bounds.contains(p)


def _coord_pair(value, where: str) -> tuple[float, float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise MapParseError("expected a pair of numbers [x, y]", field=where)
    return float(value[0]), float(value[1])


def walls_from_records(records: Iterable[dict]) -> list[Wall]:
    walls = []
    for i, rec in enumerate(records):
        where = f"walls[{i}]"
        if not isinstance(rec, dict):
            raise MapParseError("wall entry must be an object", field=where)
        unknown = set(rec) - {"a", "b", "transmissive"}
        if unknown:
            raise MapParseError(f"unknown keys {sorted(unknown)}", field=where)
        for key in ("a", "b"):
            if key not in rec:
                raise MapParseError("missing endpoint", field=f"{where}.{key}")
        ax, ay = _coord_pair(rec["a"], f"{where}.a")
        bx, by = _coord_pair(rec["b"], f"{where}.b")
        transmissive = rec.get("transmissive", False)
        if not isinstance(transmissive, bool):
            raise MapParseError("must be true or false", field=f"{where}.transmissive")
        if not all(math.isfinite(v) for v in (ax, ay, bx, by)):
            raise InvalidMapError("non-finite coordinate", i)
        try:
            walls.append(Wall(Point(ax, ay), Point(bx, by), transmissive))
        except InvalidMapError as exc:
            raise InvalidMapError(str(exc), i) from None
    return walls


def map_from_dict(doc: dict) -> FloorMap:
    if not isinstance(doc, dict):
        raise MapParseError("map document must be a JSON object")
    unknown = set(doc) - {"margin_m", "walls"}
    if unknown:
        raise MapParseError(f"unknown keys {sorted(unknown)}")
    if "walls" not in doc or not isinstance(doc["walls"], list):
        raise MapParseError("expected a list of walls", field="walls")
    margin = doc.get("margin_m", DEFAULT_MARGIN_M)
    if isinstance(margin, bool) or not isinstance(margin, (int, float)):
        raise MapParseError("must be a number", field="margin_m")
    walls = walls_from_records(doc["walls"])
    return FloorMap(tuple(walls), float(margin))


def load_map(text: str) -> FloorMap:
    """Parse map-file content into a :class:`FloorMap`.

    Raises
    ------
    MapParseError
        Malformed JSON (with line/column) or a wrongly shaped field.
    InvalidMapError
        A zero-length wall or non-finite coordinate, naming the wall index.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return map_from_dict(doc)


def dump_map(floor_map: FloorMap, indent: Optional[int] = 2) -> str:
    """Serialize to the map-file format; ``load_map(dump_map(m)) == m``."""
    return json.dumps(floor_map.to_dict(), indent=indent)


def read_map(path) -> FloorMap:
    return load_map(Path(path).read_text(encoding="utf-8"))


def bundled_office_map() -> FloorMap:
    """Synthetic 35 m x 65.5 m office outline with corridor and room partitions."""
    text = resources.files("mapat").joinpath("data/office_map.json").read_text("utf-8")
    return load_map(text)


def rectangle_map(width: float, height: float, origin: Sequence[float] = (0.0, 0.0),
                  margin_m: float = DEFAULT_MARGIN_M) -> FloorMap:
    """Four opaque walls enclosing ``[x0, x0+width] x [y0, y0+height]``."""
    x0, y0 = origin
    c = [Point(x0, y0), Point(x0 + width, y0), Point(x0 + width, y0 + height), Point(x0, y0 + height)]
    return FloorMap(tuple(Wall(c[i], c[(i + 1) % 4]) for i in range(4)), margin_m)
