import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from mapat import _kernels
from mapat.constants import SPEED_OF_LIGHT
from mapat.core import (
    CandidateLocation, Cluster, MapAtParams, cluster_candidates, estimate_position,
    generate_candidates, locate, locate_many,
)
from mapat.exceptions import NoCandidatesError, PreconditionError
from mapat.floormap import FloorMap
from mapat.geometry import Point, Wall, mirror_point
from mapat.synthetic import random_scenario
from mapat.tracer import Interaction, Mpc, TraceParams, trace_paths

from conftest import assert_point_close

R, T = Interaction.REFLECTION, Interaction.TRANSMISSION


def _cand(x, y, j=0, path_m=10.0):
    return CandidateLocation(Point(x, y), j, (), path_m)


class TestGenerateCandidates:
    def test_free_space_los(self):
        fm = FloorMap((Wall(Point(1000, 500), Point(1000, 600)),), margin_m=1000.0)
        (c,) = generate_candidates(fm, Point(0, 0), Mpc(0.0, 10 / SPEED_OF_LIGHT))
        assert_point_close(c.point, Point(10, 0), 1e-9)
        assert c.interactions == ()

    def test_single_wall_reflection_and_mirror(self, single_wall_map):
        mpc = trace_paths(single_wall_map, Point(0, 1), Point(4, 1), TraceParams(max_reflections=1))[1]
        cands = generate_candidates(single_wall_map, Point(0, 1), mpc, MapAtParams(max_interactions=1))
        assert [c.interactions for c in cands] == [((0, R),), ((0, T),)]
        assert_point_close(cands[0].point, Point(4, 1), 1e-9)
        assert_point_close(cands[1].point, mirror_point(Point(4, 1), single_wall_map.walls[0]), 1e-9)
        for c in cands:
            assert c.residual_path_m == pytest.approx(2 * math.sqrt(5), abs=1e-6)

    def test_no_interactions_left_discards_branch(self, single_wall_map):
        mpc = trace_paths(single_wall_map, Point(0, 1), Point(4, 1), TraceParams(max_reflections=1))[1]
        assert generate_candidates(single_wall_map, Point(0, 1), mpc, MapAtParams(max_interactions=0)) == []

    def test_out_of_bounds_branch_is_dropped(self, single_wall_map):
        # budget long enough to leave the 1 m margin
        cands = generate_candidates(single_wall_map, Point(0, 0.5), Mpc(math.pi / 2, 3 / SPEED_OF_LIGHT))
        assert cands == []

    def test_preconditions(self, single_wall_map):
        with pytest.raises(PreconditionError):
            generate_candidates(single_wall_map, Point(0, 50), Mpc(0.0, 1e-9))

    def test_transmissive_flag_is_ignored(self):
        opaque = FloorMap((Wall(Point(-10, 0), Point(10, 0)),))
        glass = FloorMap((Wall(Point(-10, 0), Point(10, 0), True),))
        mpc = Mpc(-math.pi / 4, 3 / SPEED_OF_LIGHT)
        a = generate_candidates(opaque, Point(0, 1), mpc)
        b = generate_candidates(glass, Point(0, 1), mpc)
        assert [c.point for c in a] == [c.point for c in b]


class TestCluster:
    def test_two_clusters(self):
        cl = cluster_candidates([_cand(0, 0), _cand(0.1, 0, 1), _cand(5, 5, 2)])
        assert [len(c.members) for c in cl] == [2, 1]
        assert_point_close(cl[0].centroid, Point(0.05, 0))
        assert cl[0].spread_m == pytest.approx(0.05)

    def test_empty(self):
        assert cluster_candidates([]) == []

    def test_chain_links_through_single_linkage(self):
        cl = cluster_candidates([_cand(0, 0), _cand(0.4, 0), _cand(0.8, 0)])
        assert len(cl) == 1

    def test_same_mpc_counts_once(self):
        (c,) = cluster_candidates([_cand(0, 0, 4), _cand(0.1, 0, 4)])
        assert c.distinct_mpc_count == 1 and len(c.members) == 2

    def test_order_is_count_then_x_then_y(self):
        cl = cluster_candidates([_cand(9, 9, 0), _cand(3, 1, 0), _cand(3, 0, 1), _cand(9, 9.1, 2)])
        assert [(c.distinct_mpc_count, tuple(c.centroid)) for c in cl] == [
            (2, (9.0, 9.05)), (1, (3.0, 0.0)), (1, (3.0, 1.0))]

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_connected_components(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 80))
        pts = rng.uniform(0, 6, (n, 2))
        cands = [_cand(x, y, int(rng.integers(0, 5))) for x, y in pts]
        radius = 0.5
        adj = squareform(pdist(pts)) <= radius
        k, lab = connected_components(csr_matrix(adj), directed=False)
        expected = sorted(sorted(map(tuple, pts[lab == i].tolist())) for i in range(k))
        got = cluster_candidates(cands, MapAtParams(cluster_radius_m=radius))
        assert sorted(sorted(tuple(m.point) for m in c.members) for c in got) == expected
        for c in got:
            assert_point_close(c.centroid, Point(*np.mean([tuple(m.point) for m in c.members], axis=0)), 1e-12)
            assert c.distinct_mpc_count == len({m.mpc_index for m in c.members})

    @given(st.integers(0, 60))
    def test_distance_evaluations_bounded(self, n):
        pts = np.random.default_rng(n).uniform(0, 3, (n, 2))
        _, _, evals = _kernels.cluster_labels(pts, n, 0.5)
        assert evals <= n * (n - 1) // 2


class TestEstimate:
    def test_single_cluster(self):
        est = estimate_position(cluster_candidates([_cand(1, 1, 0), _cand(1, 1, 1), _cand(1, 1, 2)]))
        assert est.support == 3 and not est.tie
        assert_point_close(est.point, Point(1, 1))
        assert est.winner.distinct_mpc_count == 3

    def test_majority_wins(self):
        cands = [_cand(1, 1, 0), _cand(1, 1, 1), _cand(1, 1, 2), _cand(-4, 2, 0)]
        est = estimate_position(cluster_candidates(cands))
        assert est.support == 3 and not est.tie and est.n_candidates_total == 4

    def test_single_mpc_ambiguity_is_a_tie(self):
        cands = [_cand(4, 1, 0), _cand(4, -1, 0)]
        est = estimate_position(cluster_candidates(cands))
        assert est.tie and est.support == 1
        # equal spread and index: smaller x, then smaller y
        assert tuple(est.point) == (4.0, -1.0)

    def test_tie_prefers_tighter_cluster(self):
        loose = [_cand(0, 0, 0), _cand(0.4, 0, 1)]
        tight = [_cand(9, 9, 2), _cand(9.01, 9, 3)]
        est = estimate_position(cluster_candidates(loose + tight))
        assert est.tie and est.point.x == pytest.approx(9.005)

    def test_tie_then_earliest_arrival(self):
        a = [_cand(5, 5, 1, 12.0), _cand(5, 5, 2, 15.0)]
        b = [_cand(9, 9, 0, 11.0), _cand(9, 9, 3, 20.0)]
        est = estimate_position(cluster_candidates(a + b))
        assert tuple(est.point) == (9.0, 9.0)
        # listing order does not matter, arrival order does
        b = [_cand(9, 9, 0, 13.0), _cand(9, 9, 3, 20.0)]
        assert tuple(estimate_position(cluster_candidates(a + b)).point) == (5.0, 5.0)

    def test_inconsistent_singletons_ignore_list_order(self):
        fm = FloorMap((Wall(Point(1000, 500), Point(1000, 600)),), margin_m=1000.0)
        near, far = Mpc(0.0, 10 / SPEED_OF_LIGHT), Mpc(math.pi / 2, 12 / SPEED_OF_LIGHT)
        for mpcs in ([near, far], [far, near]):
            est = locate(fm, Point(0, 0), mpcs)
            assert est.tie
            assert_point_close(est.point, Point(10, 0), 1e-9)

    def test_empty_raises(self):
        with pytest.raises(NoCandidatesError):
            estimate_position([])


def _fig3_map():
    # corridor walls above and below, a glass partition across the direct path
    return FloorMap((
        Wall(Point(-2, 3), Point(12, 3)),
        Wall(Point(-2, -3), Point(12, -3)),
        Wall(Point(4, -1), Point(4, 1), transmissive=True),
    ), margin_m=4.0)


def test_three_path_majority():
    fm = _fig3_map()
    bs, ue = Point(0, 0), Point(8, 0)
    mpcs = trace_paths(fm, bs, ue, TraceParams(max_reflections=1, max_transmissions=1))
    assert sorted(m.n_interactions for m in mpcs) == [1, 1, 1]
    est = locate(fm, bs, mpcs, MapAtParams(max_interactions=1))
    assert est.n_candidates_total == 6
    assert est.support == 3 and not est.tie
    assert_point_close(est.point, ue, 1e-9)
    assert len(est.winner.members) == 3


def test_single_los_open_space():
    fm = FloorMap((Wall(Point(1000, 500), Point(1000, 600)),), margin_m=1000.0)
    mpcs = trace_paths(fm, Point(0, 0), Point(3, 4))
    est = locate(fm, Point(0, 0), mpcs)
    assert est.support == 1 and not est.tie
    assert_point_close(est.point, Point(3, 4), 1e-9)


def test_all_branches_leave_the_map():
    fm = FloorMap((Wall(Point(-1, -1), Point(1, -1)),), margin_m=0.5)
    with pytest.raises(NoCandidatesError):
        locate(fm, Point(0, -0.8), [Mpc(math.pi / 2, 100 / SPEED_OF_LIGHT)])


def test_locate_needs_mpcs(single_wall_map):
    with pytest.raises(PreconditionError):
        locate(single_wall_map, Point(0, 1), [])


def _random_cases(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        scn = random_scenario(rng, 4, 20)
        mpcs = trace_paths(scn.floor_map, scn.bs, scn.ue)
        if mpcs:
            out.append((scn, mpcs))
    return out


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_candidate_bound(k):
    for scn, mpcs in _random_cases(15, seed=100 + k):
        total = 0
        for j, m in enumerate(mpcs):
            cands = generate_candidates(scn.floor_map, scn.bs, m, MapAtParams(max_interactions=k), j)
            assert len(cands) <= 2**k
            assert all(len(c.interactions) <= k for c in cands)
            assert all(scn.floor_map.bounds.contains(c.point) for c in cands)
            total += len(cands)
        assert total <= 2**k * len(mpcs)


def _estimate_or_none(fm, bs, mpcs):
    try:
        return tuple(locate(fm, bs, mpcs).point)
    except NoCandidatesError:
        return None


def test_permutation_invariance():
    for scn, mpcs in _random_cases(12, seed=5):
        mpcs = mpcs[:4]
        ref = _estimate_or_none(scn.floor_map, scn.bs, mpcs)
        for perm in permutations(mpcs):
            got = _estimate_or_none(scn.floor_map, scn.bs, list(perm))
            if ref is None:
                assert got is None
            else:
                assert got == pytest.approx(ref, abs=1e-12)


def test_locate_many_matches_locate():
    for scn, mpcs in _random_cases(20, seed=21):
        rng = np.random.default_rng(0)
        aoas = np.array([[m.aoa_at_bs for m in mpcs]]) + rng.normal(0, 0.01, (5, len(mpcs)))
        tofs = np.array([[m.tof for m in mpcs]]) + rng.normal(0, 1e-10, (5, len(mpcs)))
        out = locate_many(scn.floor_map, scn.bs, aoas, tofs)
        for r in range(5):
            row = [Mpc(a, t) for a, t in zip(aoas[r], tofs[r])]
            try:
                est = locate(scn.floor_map, scn.bs, row)
            except NoCandidatesError:
                assert out["n_candidates"][r] == 0 and np.isnan(out["xy"][r]).all()
                continue
            assert tuple(out["xy"][r]) == tuple(est.point)
            assert out["support"][r] == est.support
            assert out["n_candidates"][r] == est.n_candidates_total
            assert bool(out["tie"][r]) == est.tie


def test_zero_noise_round_trip_examples():
    params = MapAtParams(cluster_radius_m=1e-6)
    hits = 0
    for scn, mpcs in _random_cases(40, seed=33):
        if len(mpcs) < 2:
            continue
        est = locate(scn.floor_map, scn.bs, mpcs, params)
        if est.tie:
            # the truth is still one of the equally supported clusters
            tops = [c for c in est.clusters if c.distinct_mpc_count == est.support]
            assert min(c.centroid.distance_to(scn.ue) for c in tops) <= 1e-6
            continue
        assert est.point.distance_to(scn.ue) <= 1e-6
        assert len(est.winner.members) == est.support
        hits += 1
    assert hits >= 20


@given(
    st.floats(0.2, 0.8 * math.pi),
    st.floats(1, 30),
    st.floats(-1e-9, 1e-9),
    st.floats(-0.05, 0.05),
)
def test_mirror_length_invariance(phi, length, dt, dtheta):
    # long wall on y = 0, BS above it, UE reached via one bounce
    fm = FloorMap((Wall(Point(-1e4, 0), Point(1e4, 0)),), margin_m=1e4)
    bs = Point(0.0, 1.0)
    # ue placed so the reflected path has total length `length`
    aoa = -phi
    first = 1.0 / math.sin(phi)
    # the perturbed budget (at most 0.3 m shorter) must still reach the wall
    length += first
    hit = Point(bs.x + first * math.cos(aoa), 0.0)
    rest = length - first
    ue = Point(hit.x + rest * math.cos(phi), rest * math.sin(phi))
    mpc = Mpc(aoa + dtheta, length / SPEED_OF_LIGHT + dt)
    cands = generate_candidates(fm, bs, mpc, MapAtParams(max_interactions=1))
    refl = [c for c in cands if c.interactions == ((0, R),)][0]
    d = length + SPEED_OF_LIGHT * dt
    los_err = abs(d * complex(math.cos(dtheta), math.sin(dtheta)) - length)
    assert refl.point.distance_to(ue) == pytest.approx(los_err, abs=1e-6)
