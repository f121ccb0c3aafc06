"""Test windtree scenes and the cell tracer."""
from array import array
import math

import pytest

from flattrace.flow import Termination
from flattrace.geometry import Vec2
from flattrace.windtree import CellTracer, windtree_scene, windtree_trace
from flattrace.util import BadDimensions, InvalidParameter, StartInsideObstacle

from .logging_setup import setup_logger

setup_logger()


@pytest.fixture
def scene():
    """Unit cell with the default square obstacle."""
    return windtree_scene(1)


@pytest.mark.parametrize("m,counts", [(1, (4, 0)), (2, (8, 4)), (3, (12, 8))])
def test_corner_counts(m, counts):
    """An m-step obstacle has 4m convex and 4m - 4 reflex corners."""
    assert windtree_scene(m).corner_counts() == counts


def test_default_obstacle(scene):
    """The default obstacle is centered in the cell."""
    assert scene.shape.bounds == pytest.approx((0.375, 0.375, 0.625, 0.625))
    assert scene.contains(0.5, 0.5)
    assert scene.contains(3.5, -1.5)
    assert not scene.contains(0.1, 0.1)
    assert scene.default_start() == Vec2(0.0, 0.0)


def test_stepped_obstacle():
    """The default m = 2 obstacle is a plus of two rectangles."""
    scene = windtree_scene(2)
    assert scene.shape.is_valid
    assert scene.shape.area == pytest.approx(0.27)
    assert scene.shape.centroid.coords[0] == pytest.approx((0.5, 0.5))


def test_scene_params():
    """Test explicit cells and obstacle sizes."""
    scene = windtree_scene(1, {"cell": [2.0, 1.0], "obstacle": {"width": 0.5, "height": 0.2}})
    assert (scene.width, scene.height) == (2.0, 1.0)
    assert scene.shape.bounds == pytest.approx((0.75, 0.4, 1.25, 0.6))
    diagonal = windtree_scene(1, {"cell": [[1.0, 0.0], [0.0, 1.0]]})
    assert diagonal.width == 1.0
    assert windtree_scene(0).obstacle == ()


def test_bad_dimensions():
    """Test rejected scenes."""
    with pytest.raises(BadDimensions):
        windtree_scene(-1)
    with pytest.raises(BadDimensions):
        windtree_scene(1, {"width": 1.2})
    with pytest.raises(BadDimensions):
        windtree_scene(2, {"r": [0.2, 0.1], "h": [0.3, 0.15]})
    with pytest.raises(BadDimensions):
        windtree_scene(2, {"r": [0.1, 0.2, 0.3]})
    with pytest.raises(BadDimensions):
        windtree_scene(1, {"cell": [[1.0, 0.5], [0.0, 1.0]]})
    with pytest.raises(BadDimensions):
        windtree_scene(1, {"cell": [1.0, -1.0]})


def test_horizontal_bounce(scene):
    """A horizontal ray bounces between neighbouring obstacles."""
    path = windtree_trace(scene, Vec2(0.0, 0.5), 0.0, 10.0)
    assert path.termination is Termination.LENGTH_REACHED
    assert path.reflections == 13
    assert path.total_length == pytest.approx(10.0)
    xs = [x for x, _ in path.points]
    assert min(xs) >= -0.375 - 1e-12
    assert max(xs) <= 0.375 + 1e-12
    assert path.end == pytest.approx((-0.25, 0.5))
    assert path.diameter() == pytest.approx(0.75)


def test_free_flight():
    """With no obstacle the path is a straight segment."""
    path = windtree_trace(windtree_scene(0), Vec2(0.0, 0.0), 0.3, 25.0)
    assert path.reflections == 0
    assert path.end == pytest.approx((25 * math.cos(0.3), 25 * math.sin(0.3)))
    assert path.diameter() == pytest.approx(25.0)


def test_corner_hit(scene):
    """A ray aimed at an obstacle corner stops there."""
    path = windtree_trace(scene, Vec2(0.0, 0.0), math.pi / 4, 10.0)
    assert path.termination is Termination.SINGULAR_HIT
    assert path.end == pytest.approx((0.375, 0.375))
    assert path.total_length == pytest.approx(0.375 * math.sqrt(2))


def test_trace_errors(scene):
    """Test invalid starts and lengths."""
    with pytest.raises(StartInsideObstacle):
        windtree_trace(scene, Vec2(0.5, 0.5), 0.3, 1.0)
    with pytest.raises(InvalidParameter):
        windtree_trace(scene, Vec2(0.0, 0.0), 0.3, 0.0)


def test_incremental_run(scene):
    """Running in increments ends where a single run does."""
    direction = 0.7
    whole = windtree_trace(scene, Vec2(0.0, 0.0), direction, 500.0)
    tracer = CellTracer(scene, Vec2(0.0, 0.0), direction)
    xy = array("d")
    for limit in (100.0, 250.0, 500.0):
        tracer.run(limit, xy)
    assert tracer.length == pytest.approx(500.0)
    assert tracer.reflections == whole.reflections
    assert tracer.position == pytest.approx(whole.end)
    assert len(xy) == 2 * whole.reflections


@pytest.mark.parametrize("shift", [(1, 0), (0, -1), (3, -2)])
def test_lattice_equivariance(shift):
    """Translating the start by a lattice vector translates the whole path."""
    scene = windtree_scene(2, {"cell": [1.5, 0.8]})
    i, j = shift
    dx, dy = i * scene.width, j * scene.height
    base = windtree_trace(scene, Vec2(0.05, 0.1), 0.913, 60.0)
    moved = windtree_trace(scene, Vec2(0.05 + dx, 0.1 + dy), 0.913, 60.0)
    assert moved.walls == base.walls
    assert moved.lengths == pytest.approx(base.lengths, abs=1e-9)
    assert len(moved.points) == len(base.points)
    for (x, y), (mx, my) in zip(base.points, moved.points):
        assert (mx - dx, my - dy) == pytest.approx((x, y), abs=1e-9)
