import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mapat.exceptions import InvalidMapError
from mapat.floormap import FloorMap
from mapat.geometry import (
    Point, Ray, Wall, first_hit, mirror_point, normalize_azimuth, normalize_azimuths,
    reflect_ray, segment_crossing, side_of,
)
from mapat.synthetic import random_floor_map

from conftest import assert_point_close

coord = st.floats(-50, 50, allow_nan=False)
points = st.builds(Point, coord, coord)


@st.composite
def walls(draw):
    a = draw(points)
    b = draw(points)
    if a.distance_to(b) < 1e-3:
        b = Point(a.x + 1.0, a.y)
    return Wall(a, b)


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point(float("nan"), 0)
    with pytest.raises(ValueError):
        Point(0, float("inf"))


def test_zero_length_wall_is_invalid():
    with pytest.raises(InvalidMapError):
        Wall(Point(1, 1), Point(1, 1))


@pytest.mark.parametrize("angle, expected", [
    (0.0, 0.0), (-math.pi / 2, 1.5 * math.pi), (2 * math.pi, 0.0), (5 * math.pi, math.pi),
    (-1e-300, 0.0),
])
def test_normalize_azimuth(angle, expected):
    got = normalize_azimuth(angle)
    assert 0.0 <= got < 2 * math.pi
    assert got == pytest.approx(expected, abs=1e-12)


@given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=20))
def test_vector_normalization_matches_scalar(angles):
    vec = normalize_azimuths(np.array(angles))
    assert [normalize_azimuth(a) for a in angles] == list(vec)


class TestMirror:
    def test_across_x_axis(self):
        assert_point_close(mirror_point(Point(0, 1), Wall(Point(-1, 0), Point(1, 0))), Point(0, -1))

    def test_point_on_line_is_fixed(self):
        w = Wall(Point(0, 0), Point(2, 2))
        assert_point_close(mirror_point(Point(5, 5), w), Point(5, 5))

    def test_across_y_axis(self):
        assert_point_close(mirror_point(Point(2, 3), Wall(Point(0, 0), Point(0, 5))), Point(-2, 3))

    @given(points, walls())
    def test_involution(self, p, w):
        assert_point_close(mirror_point(mirror_point(p, w), w), p, 1e-9)

    @given(points, points, walls())
    def test_preserves_distance(self, p, q, w):
        d = mirror_point(p, w).distance_to(mirror_point(q, w))
        assert d == pytest.approx(p.distance_to(q), abs=1e-9)


class TestSideOf:
    w = Wall(Point(0, 0), Point(1, 0))

    def test_left_is_positive(self):
        assert side_of(self.w, Point(0.5, 1)) == 1

    def test_right_is_negative(self):
        assert side_of(self.w, Point(0.5, -1)) == -1

    def test_collinear_is_zero(self):
        assert side_of(self.w, Point(7, 0)) == 0

    @given(points, walls())
    def test_mirror_flips_side(self, p, w):
        s = side_of(w, p)
        if s:
            assert side_of(w, mirror_point(p, w)) == -s


def _hit(origin, azimuth, wall):
    fm = FloorMap((wall,))
    r = Ray(origin, azimuth)
    return r, first_hit(r, fm)


class TestReflectRay:
    def test_descending_ray_off_floor(self):
        r, h = _hit(Point(0, 1), -math.pi / 4, Wall(Point(-5, 0), Point(5, 0)))
        assert_point_close(h.point, Point(1, 0))
        assert reflect_ray(r, h).azimuth == pytest.approx(math.pi / 4, abs=1e-12)

    def test_normal_incidence_reverses(self):
        r, h = _hit(Point(0, 0), 0.0, Wall(Point(3, -1), Point(3, 1)))
        assert reflect_ray(r, h).azimuth == pytest.approx(math.pi, abs=1e-12)

    def test_oblique_thirty_degrees(self):
        r, h = _hit(Point(-5, -1), math.radians(30), Wall(Point(-10, 0), Point(10, 0)))
        # coming up from below: 30 deg in, -30 deg out
        assert reflect_ray(r, h).azimuth == pytest.approx(2 * math.pi - math.radians(30), abs=1e-12)

    @given(st.floats(0.05, math.pi - 0.05), st.floats(-3, 3), walls())
    def test_tangential_kept_normal_negated(self, incidence, offset, w):
        # aim at a point on the wall from the +normal side
        ux, uy = w.direction
        nx, ny = w.normal
        target = Point(w.a.x + 0.5 * w.length * ux, w.a.y + 0.5 * w.length * uy)
        d = (math.cos(incidence) * ux - math.sin(incidence) * nx,
             math.cos(incidence) * uy - math.sin(incidence) * ny)
        origin = Point(target.x - 2 * d[0], target.y - 2 * d[1])
        r = Ray(origin, math.atan2(d[1], d[0]))
        h = first_hit(r, FloorMap((w,)))
        assert h is not None
        out = reflect_ray(r, h)
        ox, oy = out.direction
        assert ox * ux + oy * uy == pytest.approx(d[0] * ux + d[1] * uy, abs=1e-12)
        assert ox * nx + oy * ny == pytest.approx(-(d[0] * nx + d[1] * ny), abs=1e-12)
        # equal angles of incidence and reflection
        a_in = math.acos(max(-1, min(1, -(d[0] * nx + d[1] * ny))))
        a_out = math.acos(max(-1, min(1, ox * nx + oy * ny)))
        assert a_out == pytest.approx(a_in, abs=1e-12)


class TestFirstHit:
    def test_straight_ahead(self):
        fm = FloorMap((Wall(Point(5, -1), Point(5, 1)),))
        h = first_hit(Ray(Point(0, 0), 0.0), fm)
        assert h.distance == pytest.approx(5.0)
        assert_point_close(h.point, Point(5, 0))
        assert h.side in (-1, 1)

    def test_pointing_away(self):
        fm = FloorMap((Wall(Point(5, -1), Point(5, 1)),))
        assert first_hit(Ray(Point(0, 0), math.pi), fm) is None

    def test_nearest_of_parallel_walls(self):
        fm = FloorMap((Wall(Point(5, -1), Point(5, 1)), Wall(Point(3, -1), Point(3, 1))))
        h = first_hit(Ray(Point(0, 0), 0.0), fm)
        assert h.wall_index == 1 and h.distance == pytest.approx(3.0)

    def test_exclude_by_index_and_wall(self):
        w0, w1 = Wall(Point(3, -1), Point(3, 1)), Wall(Point(5, -1), Point(5, 1))
        fm = FloorMap((w0, w1))
        r = Ray(Point(0, 0), 0.0)
        assert first_hit(r, fm, exclude=0).wall_index == 1
        assert first_hit(r, fm, exclude=w0).wall_index == 1

    def test_endpoint_counts_as_hit(self):
        fm = FloorMap((Wall(Point(5, 0), Point(5, 2)),))
        h = first_hit(Ray(Point(0, 0), 0.0), fm)
        assert h is not None and h.distance == pytest.approx(5.0)

    def test_corner_does_not_leak(self):
        fm = FloorMap((Wall(Point(0, 5), Point(5, 5)), Wall(Point(5, 5), Point(5, 0))))
        assert first_hit(Ray(Point(0, 0), math.pi / 4), fm) is not None

    @pytest.mark.parametrize("seed", range(20))
    def test_minimal_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        fm = random_floor_map(rng, int(rng.integers(1, 21)))
        for _ in range(50):
            r = Ray(Point(*rng.uniform(0, 30, 2)), rng.uniform(0, 2 * math.pi))
            far = r.at(1e4)
            best = None
            for i, w in enumerate(fm.walls):
                u = segment_crossing(r.origin, far, w)
                if u is not None and u * 1e4 > 1e-9 and (best is None or u * 1e4 < best[0]):
                    best = (u * 1e4, i)
            h = first_hit(r, fm)
            if best is None:
                assert h is None
            else:
                assert h is not None
                assert h.distance == pytest.approx(best[0], abs=1e-7)
                # ties between walls at the same distance may pick either
                assert h.wall_index == best[1] or abs(
                    segment_crossing(r.origin, far, fm.walls[h.wall_index]) * 1e4 - best[0]) < 1e-7


def test_segment_crossing_fraction():
    w = Wall(Point(2, -1), Point(2, 1))
    assert segment_crossing(Point(0, 0), Point(4, 0), w) == pytest.approx(0.5)
    assert segment_crossing(Point(0, 0), Point(1, 0), w) is None
    assert segment_crossing(Point(0, 5), Point(4, 5), w) is None
