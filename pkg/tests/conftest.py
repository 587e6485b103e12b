import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mapat.floormap import FloorMap, rectangle_map
from mapat.geometry import Point, Wall

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def single_wall_map():
    """One long opaque wall along y = 0."""
    return FloorMap((Wall(Point(-10, 0), Point(10, 0)),))


@pytest.fixture
def open_room():
    return rectangle_map(100.0, 100.0, origin=(-50.0, -50.0))


def deg(x):
    return math.radians(x)


def assert_point_close(p, q, tol=1e-9):
    assert math.hypot(p.x - q.x, p.y - q.y) <= tol, f"{tuple(p)} != {tuple(q)}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
