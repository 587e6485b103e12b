"""Candidate-location positioning from per-path angle and delay plus a floor map.

Every multipath component is back-propagated from the BS along its arrival
azimuth with a path-length budget of ``c * tof``. Whenever the ray meets a wall
with budget left, both hypotheses are followed: the path reflected there, or it
went straight through. Each branch whose budget runs out inside the map bounds
gives one candidate location. One branch per component lands on the true UE,
so the estimate is the centroid of the cluster supported by the most distinct
components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .constants import SPEED_OF_LIGHT
from .exceptions import NoCandidatesError, PreconditionError
from .floormap import FloorMap
from .geometry import Point, normalize_azimuths
from .tracer import Interaction, InteractionSeq, Mpc

_KINDS = (Interaction.REFLECTION, Interaction.TRANSMISSION)


@dataclass(frozen=True)
class MapAtParams:
    """Estimator settings.

    Parameters
    ----------
    max_interactions : int
        Reflections plus transmissions allowed along one back-propagated branch.
    cluster_radius_m : float
        Single-linkage distance below which two candidates are grouped.
    min_leg_m : float
        After an interaction, wall hits closer than this are ignored so a ray
        leaving a corner does not re-hit the adjoining wall at zero distance.
    """

    max_interactions: int = 3
    cluster_radius_m: float = 0.5
    min_leg_m: float = 1e-3

    def __post_init__(self):
        if int(self.max_interactions) != self.max_interactions or self.max_interactions < 0:
            raise PreconditionError("max_interactions must be a non-negative integer")
        if self.max_interactions > 20:
            raise PreconditionError("max_interactions above 20 would allocate 2**k candidates per path")
        if not self.cluster_radius_m > 0:
            raise PreconditionError("cluster_radius_m must be positive")
        if not self.min_leg_m > 0:
            raise PreconditionError("min_leg_m must be positive")


@dataclass(frozen=True)
class CandidateLocation:
    point: Point
    mpc_index: int
    interactions: InteractionSeq
    residual_path_m: float


@dataclass(frozen=True)
class Cluster:
    members: tuple[CandidateLocation, ...]
    centroid: Point
    distinct_mpc_count: int
    #: mean member-to-centroid distance
    spread_m: float

    @property
    def min_mpc_index(self) -> int:
        return min(c.mpc_index for c in self.members)

    @property
    def earliest_path_m(self) -> float:
        """Shortest path length among the member components (earliest arrival)."""
        return min(c.residual_path_m for c in self.members)


@dataclass(frozen=True)
class PositionEstimate:
    point: Point
    support: int
    n_candidates_total: int
    tie: bool
    clusters: tuple[Cluster, ...] = field(repr=False)

    @property
    def winner(self) -> Cluster:
        for c in self.clusters:
            if c.centroid == self.point and c.distinct_mpc_count == self.support:
                return c
        raise LookupError("winning cluster not among clusters")


def _candidate_buffers(n_rows: int, max_k: int):
    width = max(max_k, 1)
    return (
        np.empty((n_rows, 2)),
        np.empty((n_rows, width), np.int64),
        np.empty((n_rows, width), np.int64),
        np.empty(n_rows, np.int64),
    )


def generate_candidates(
    floor_map: FloorMap,
    bs: Point,
    mpc: Mpc,
    params: MapAtParams = MapAtParams(),
    mpc_index: int = 0,
) -> list[CandidateLocation]:
    """All candidate UE positions for one component, reflection branches first.

    At most ``2 ** params.max_interactions`` candidates are returned. A branch
    that reaches a wall with budget left after ``max_interactions``
    interactions, or whose budget runs out outside the map bounds, is dropped.
    """
    if not mpc.tof > 0:
        raise PreconditionError("mpc.tof must be positive")
    if not floor_map.bounds.contains(bs):
        raise PreconditionError("bs lies outside the map bounds")
    k = int(params.max_interactions)
    budget = SPEED_OF_LIGHT * mpc.tof
    pts, cw, ck, cd = _candidate_buffers(1 << k, k)
    n = _kernels.back_propagate(
        floor_map.wall_array, floor_map.bounds_array, bs.x, bs.y, mpc.aoa_at_bs,
        budget, k, params.min_leg_m, pts, cw, ck, cd, 0,
    )
    return [
        CandidateLocation(
            point=Point(float(pts[i, 0]), float(pts[i, 1])),
            mpc_index=mpc_index,
            interactions=tuple((int(cw[i, d]), _KINDS[ck[i, d]]) for d in range(cd[i])),
            residual_path_m=budget,
        )
        for i in range(n)
    ]


def _cluster_sort_key(c: Cluster):
    return (-c.distinct_mpc_count, c.centroid.x, c.centroid.y)


def cluster_candidates(
    candidates: Sequence[CandidateLocation], params: MapAtParams = MapAtParams()
) -> list[Cluster]:
    """Single-linkage grouping: connected components of the within-radius graph.

    Clusters come back ordered by descending distinct-MPC count, then centroid
    x, then y. Uses at most ``n*(n-1)/2`` distance evaluations.
    """
    n = len(candidates)
    if n == 0:
        return []
    pts = np.array([[c.point.x, c.point.y] for c in candidates], dtype=np.float64)
    mpc = np.array([c.mpc_index for c in candidates], dtype=np.int64)
    budget = np.array([c.residual_path_m for c in candidates], dtype=np.float64)
    labels, m, _ = _kernels.cluster_labels(pts, n, params.cluster_radius_m)
    cx, cy, _, distinct, spread, _ = _kernels.cluster_stats(pts, mpc, budget, labels, n, m)
    members: list[list[CandidateLocation]] = [[] for _ in range(m)]
    for cand, lab in zip(candidates, labels):
        members[lab].append(cand)
    clusters = [
        Cluster(
            members=tuple(members[j]),
            centroid=Point(float(cx[j]), float(cy[j])),
            distinct_mpc_count=int(distinct[j]),
            spread_m=float(spread[j]),
        )
        for j in range(m)
    ]
    clusters.sort(key=_cluster_sort_key)
    return clusters


def estimate_position(clusters: Sequence[Cluster]) -> PositionEstimate:
    """Centroid of the cluster backed by the most distinct components.

    Ties on that count go to the tighter cluster (smaller mean spread), then to
    the one holding the earliest-arriving component (shortest path length, so
    the result does not depend on list order), then to the smaller centroid x
    and y. ``tie`` reports whether the top count was shared at all.

    Raises
    ------
    NoCandidatesError
        If ``clusters`` is empty.
    """
    if not clusters:
        raise NoCandidatesError("no candidate locations: the UE cannot be located from these paths")
    best = min(
        clusters,
        key=lambda c: (
            -c.distinct_mpc_count, c.spread_m, c.earliest_path_m, c.centroid.x, c.centroid.y
        ),
    )
    top = sum(c.distinct_mpc_count == best.distinct_mpc_count for c in clusters)
    return PositionEstimate(
        point=best.centroid,
        support=best.distinct_mpc_count,
        n_candidates_total=sum(len(c.members) for c in clusters),
        tie=top >= 2,
        clusters=tuple(clusters),
    )


def locate(
    floor_map: FloorMap,
    bs: Point,
    mpcs: Sequence[Mpc],
    params: MapAtParams = MapAtParams(),
) -> PositionEstimate:
    """Estimate the UE position from the components observed at ``bs``."""
    if len(mpcs) == 0:
        raise PreconditionError("locate needs at least one multipath component")
    candidates: list[CandidateLocation] = []
    for j, mpc in enumerate(mpcs):
        candidates.extend(generate_candidates(floor_map, bs, mpc, params, mpc_index=j))
    return estimate_position(cluster_candidates(candidates, params))


def locate_many(
    floor_map: FloorMap,
    bs: Point,
    aoas: np.ndarray,
    tofs: np.ndarray,
    params: MapAtParams = MapAtParams(),
) -> dict[str, np.ndarray]:
    """Vectorized :func:`locate` over rows of an ``(R, M)`` aoa/tof measurement grid.

    Returns a dict with ``"xy"`` ``(R, 2)`` (NaN where no candidate survived),
    ``"support"``, ``"n_candidates"`` and ``"tie"``. Each row gives exactly the
    same numbers as :func:`locate` on the corresponding components.
    """
    aoas = np.ascontiguousarray(aoas, dtype=np.float64)
    tofs = np.ascontiguousarray(tofs, dtype=np.float64)
    if aoas.ndim != 2 or aoas.shape != tofs.shape:
        raise PreconditionError("aoas and tofs must be equal-shape (runs, mpcs) arrays")
    if aoas.shape[1] == 0:
        raise PreconditionError("locate needs at least one multipath component")
    if not np.all(tofs > 0):
        raise PreconditionError("all tofs must be positive")
    if not floor_map.bounds.contains(bs):
        raise PreconditionError("bs lies outside the map bounds")
    R = aoas.shape[0]
    out = {
        "xy": np.empty((R, 2)),
        "support": np.empty(R, np.int64),
        "n_candidates": np.empty(R, np.int64),
        "tie": np.empty(R, np.bool_),
    }
    _kernels.locate_batch(
        floor_map.wall_array, floor_map.bounds_array, bs.x, bs.y,
        normalize_azimuths(aoas), SPEED_OF_LIGHT * tofs,
        int(params.max_interactions), params.cluster_radius_m, params.min_leg_m,
        out["xy"], out["support"], out["n_candidates"], out["tie"],
    )
    return out
