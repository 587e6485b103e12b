"""Image-method forward tracer producing exact ground-truth multipath components.

Paths are enumerated over ordered wall sequences (no wall twice in a row). For
each sequence the BS is mirrored successively and the reflection points are
recovered backwards from the UE; the sequence is kept when every reflection
point lies on its wall segment and every other wall crossed along the way is
transmissive (within the transmission budget). Transmissions do not bend the
ray.

Received power is a deliberately crude synthetic figure: free-space loss plus a
fixed loss per interaction. It exists only to give power-angle profiles
plausible weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .constants import GEOM_EPS, SPEED_OF_LIGHT
from .exceptions import PreconditionError
from .floormap import FloorMap
from .geometry import Point, mirror_point, normalize_azimuth, segment_crossing


class Interaction(str, Enum):
    REFLECTION = "R"
    TRANSMISSION = "T"


#: ``(wall index, kind)`` pairs in propagation order, starting at the BS.
InteractionSeq = tuple[tuple[int, Interaction], ...]


def format_interactions(seq: InteractionSeq) -> str:
    """Compact label such as ``"R3;T0"``; empty string for LOS."""
    return ";".join(f"{kind.value}{idx}" for idx, kind in seq)


@dataclass(frozen=True)
class Mpc:
    """One multipath component as observed at the base station.

    Parameters
    ----------
    aoa_at_bs : float
        Arrival azimuth at the BS in radians; normalized to ``[0, 2*pi)``.
    tof : float
        Absolute one-way time of flight in seconds.
    power_dbm : float, optional
        Received power.
    interaction_walls : tuple
        ``(wall index, Interaction)`` pairs from BS to UE. Empty for measured
        components whose history is unknown, and for LOS.
    vertices : tuple of Point
        Polyline BS, interaction points..., UE. Only set by the tracer.
    """

    aoa_at_bs: float
    tof: float
    power_dbm: Optional[float] = None
    interaction_walls: InteractionSeq = ()
    vertices: tuple[Point, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.tof) and self.tof > 0):
            raise PreconditionError(f"tof must be positive and finite, got {self.tof}")
        if not math.isfinite(self.aoa_at_bs):
            raise PreconditionError("aoa_at_bs must be finite")
        object.__setattr__(self, "aoa_at_bs", normalize_azimuth(self.aoa_at_bs))
        object.__setattr__(
            self,
            "interaction_walls",
            tuple((int(i), Interaction(k)) for i, k in self.interaction_walls),
        )

    @property
    def n_interactions(self) -> int:
        return len(self.interaction_walls)

    @property
    def path_length(self) -> float:
        return SPEED_OF_LIGHT * self.tof

    @property
    def n_reflections(self) -> int:
        return sum(k is Interaction.REFLECTION for _, k in self.interaction_walls)

    @property
    def n_transmissions(self) -> int:
        return sum(k is Interaction.TRANSMISSION for _, k in self.interaction_walls)


@dataclass(frozen=True)
class TraceParams:
    max_reflections: int = 3
    max_transmissions: int = 1
    frequency_hz: float = 28e9
    reflection_loss_db: float = 7.0
    transmission_loss_db: float = 10.0
    #: keep only the earliest ``max_paths`` components (None keeps all)
    max_paths: Optional[int] = None

    def __post_init__(self):
        if self.max_reflections < 0 or self.max_transmissions < 0:
            raise PreconditionError("interaction budgets must be >= 0")
        if not self.frequency_hz > 0:
            raise PreconditionError("frequency_hz must be positive")
        if self.reflection_loss_db < 0 or self.transmission_loss_db < 0:
            raise PreconditionError("losses must be >= 0 dB")
        if self.max_paths is not None and self.max_paths < 1:
            raise PreconditionError("max_paths must be >= 1 or None")


def free_space_path_loss_db(distance_m: float, frequency_hz: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_hz / SPEED_OF_LIGHT)


def _open_segment_crossings(floor_map: FloorMap, p: Point, q: Point) -> list[tuple[float, int]]:
    """Walls crossed strictly between ``p`` and ``q`` as ``(fraction, index)``, sorted."""
    L = p.distance_to(q)
    out = []
    for i, w in enumerate(floor_map.walls):
        u = segment_crossing(p, q, w)
        if u is None or u * L <= GEOM_EPS or (1.0 - u) * L <= GEOM_EPS:
            continue
        out.append((u, i))
    out.sort()
    return out


def los_visible(floor_map: FloorMap, p: Point, q: Point) -> tuple[bool, int]:
    """Whether the open segment ``p``-``q`` crosses only transmissive walls.

    Returns ``(visible, number of walls crossed)``.
    """
    if p.distance_to(q) <= GEOM_EPS:
        raise PreconditionError("los_visible needs two distinct points")
    crossed = _open_segment_crossings(floor_map, p, q)
    visible = all(floor_map.walls[i].transmissive for _, i in crossed)
    return visible, len(crossed)


def _reflection_sequences(n_walls: int, max_len: int) -> Iterator[tuple[int, ...]]:
    yield ()
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(max_len):
        nxt = []
        for seq in frontier:
            for w in range(n_walls):
                if seq and seq[-1] == w:
                    continue
                s = seq + (w,)
                nxt.append(s)
                yield s
        frontier = nxt


def _specular_points(
    floor_map: FloorMap, bs: Point, ue: Point, seq: tuple[int, ...]
) -> Optional[list[Point]]:
    walls = floor_map.walls
    images = [bs]
    for w in seq:
        images.append(mirror_point(images[-1], walls[w]))
    points: list[Point] = [ue] * len(seq)
    target = ue
    for i in range(len(seq) - 1, -1, -1):
        src = images[i + 1]
        L = src.distance_to(target)
        if L <= GEOM_EPS:
            return None
        u = segment_crossing(src, target, walls[seq[i]])
        if u is None or u * L <= GEOM_EPS or (1.0 - u) * L <= GEOM_EPS:
            return None
        target = Point(src.x + u * (target.x - src.x), src.y + u * (target.y - src.y))
        points[i] = target
    return points


def trace_paths(
    floor_map: FloorMap, bs: Point, ue: Point, params: TraceParams = TraceParams()
) -> list[Mpc]:
    """Enumerate every valid LOS, reflected and transmitted path from ``bs`` to ``ue``.

    Components are sorted by time of flight, then by interaction sequence.

    Raises
    ------
    PreconditionError
        If ``bs`` coincides with ``ue`` or either lies outside the map bounds.
    """
    if bs.distance_to(ue) <= GEOM_EPS:
        raise PreconditionError("bs and ue must be distinct")
    for name, p in (("bs", bs), ("ue", ue)):
        if not floor_map.bounds.contains(p):
            raise PreconditionError(f"{name} {tuple(p)} lies outside the map bounds")

    walls = floor_map.walls
    found = []
    for seq in _reflection_sequences(len(walls), params.max_reflections):
        refl_points = _specular_points(floor_map, bs, ue, seq)
        if refl_points is None:
            continue
        vertices = [bs, *refl_points, ue]
        interactions: list[tuple[int, Interaction]] = []
        n_trans = 0
        ok = True
        for leg in range(len(vertices) - 1):
            for _, i in _open_segment_crossings(floor_map, vertices[leg], vertices[leg + 1]):
                if not walls[i].transmissive:
                    ok = False
                    break
                interactions.append((i, Interaction.TRANSMISSION))
                n_trans += 1
            if not ok or n_trans > params.max_transmissions:
                ok = False
                break
            if leg < len(seq):
                interactions.append((seq[leg], Interaction.REFLECTION))
        if not ok:
            continue

        length = sum(vertices[j].distance_to(vertices[j + 1]) for j in range(len(vertices) - 1))
        power = (
            -free_space_path_loss_db(length, params.frequency_hz)
            - len(seq) * params.reflection_loss_db
            - n_trans * params.transmission_loss_db
        )
        found.append(
            Mpc(
                aoa_at_bs=bs.azimuth_to(vertices[1]),
                tof=length / SPEED_OF_LIGHT,
                power_dbm=power,
                interaction_walls=tuple(interactions),
                vertices=tuple(vertices),
            )
        )

    found.sort(key=lambda m: (m.tof, tuple((i, k.value) for i, k in m.interaction_walls)))
    if params.max_paths is not None:
        found = found[: params.max_paths]
    return found
