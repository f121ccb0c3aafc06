"""Test polygonal billiards and unfolding."""
from fractions import Fraction
import math

import numpy as np
import pytest

from flattrace.billiards import BilliardTable, billiard_trace, fold_check, unfold_rational
from flattrace.flow import Termination, trace
from flattrace.geometry import Vec2
from flattrace.surface import topology
from flattrace.util import BadParam, InvalidParameter, IrrationalAngle, NotSimplePolygon, StartOutside

from .logging_setup import setup_logger

setup_logger()


@pytest.fixture
def square():
    """Unit square table."""
    return BilliardTable.square()


def test_table_validation():
    """Test table construction errors."""
    with pytest.raises(NotSimplePolygon):
        BilliardTable.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    with pytest.raises(NotSimplePolygon):
        BilliardTable.polygon([(0, 0), (1, 0)])
    with pytest.raises(NotSimplePolygon):
        BilliardTable.polygon([(0, 0), (2, 2), (2, 0), (0, 2)])
    with pytest.raises(BadParam):
        BilliardTable.triangle(2.0, 2.0)


def test_angles():
    """Test angle data of named tables."""
    assert BilliardTable.right_isosceles().angle_data == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    triangle = BilliardTable.triangle(math.pi / 3, math.pi / 3)
    assert sum(triangle.angles) == pytest.approx(math.pi)
    assert triangle.angle_data == (Fraction(1, 3),) * 3


def test_diamond_orbit(square):
    """The diamond orbit closes after four reflections."""
    path = billiard_trace(square, Vec2(0.75, 0.25), math.pi / 4, max_length=100.0)
    assert path.termination is Termination.CLOSED
    assert path.reflections == 4
    assert path.total_length == pytest.approx(2 * math.sqrt(2))
    assert path.end == pytest.approx((0.75, 0.25))


def test_slope_half_orbit(square):
    """Slope 1/2 from the center closes after six reflections."""
    path = billiard_trace(square, Vec2(0.5, 0.5), math.atan2(1, 2), max_length=100.0)
    assert path.termination is Termination.CLOSED
    assert path.reflections == 6
    assert path.total_length == pytest.approx(2 * math.sqrt(5))


def test_corner_hit(square):
    """A ray into a corner stops there."""
    path = billiard_trace(square, Vec2(0.5, 0.5), math.pi / 4, max_length=10.0)
    assert path.termination is Termination.SINGULAR_HIT
    assert path.end == (1.0, 1.0)
    assert path.total_length == pytest.approx(math.sqrt(0.5))


def test_reflection_budget(square):
    """Reflection budgets stop the trace; the path stays in the table."""
    path = billiard_trace(square, Vec2(0.31, 0.27), 0.4, max_reflections=50)
    assert path.termination is Termination.CROSSINGS_REACHED
    assert path.reflections == 50
    table = path.as_array()
    assert table.shape == (51, 3)
    assert np.all(table[:, 1:] >= -1e-9)
    assert np.all(table[:, 1:] <= 1 + 1e-9)
    assert np.all(np.diff(table[:, 0]) > 0)


def test_trace_errors(square):
    """Test start and limit errors."""
    with pytest.raises(StartOutside):
        billiard_trace(square, Vec2(0.0, 0.5), 0.3, max_length=1.0)
    with pytest.raises(StartOutside):
        billiard_trace(square, Vec2(2.0, 2.0), 0.3, max_length=1.0)
    with pytest.raises(InvalidParameter):
        billiard_trace(square, Vec2(0.5, 0.25), 0.3)


@pytest.mark.parametrize("table,copies,area", [
    (BilliardTable.square(), 4, 4.0),
    (BilliardTable.right_isosceles(), 8, 4.0),
    (BilliardTable.triangle(math.pi / 3, math.pi / 3), 6, 6 * math.sqrt(3) / 4),
])
def test_unfolding_is_torus(table, copies, area):
    """These tables unfold to flat tori."""
    surface, folding = unfold_rational(table)
    assert len(folding.elements) == copies
    assert surface.area == pytest.approx(area)
    topo = topology(surface)
    assert topo.genus == 1
    assert topo.cone_orders == ()


def test_square_unfolding(square):
    """The square unfolds to a 2 x 2 torus with four marked points."""
    surface, folding = unfold_rational(square)
    assert folding.order == 2
    assert topology(surface).num_vertices == 4
    point = Vec2(0.3, 0.7)
    for copy in range(4):
        lifted = folding.unfold_point(surface, point, copy)
        assert folding.copy_of(lifted.face) == copy
        back = folding.fold_point(lifted)
        assert (back.x, back.y) == pytest.approx((0.3, 0.7))


def test_irrational_table():
    """Irrational angles cannot be unfolded."""
    with pytest.raises(IrrationalAngle):
        unfold_rational(BilliardTable.triangle(1.0, 1.0))


@pytest.mark.parametrize("table", [BilliardTable.square(), BilliardTable.right_isosceles()])
def test_fold_check(table):
    """Direct reflection agrees with the folded straight line."""
    unfolded = unfold_rational(table)
    rng = np.random.default_rng(3)
    for _ in range(10):
        while True:
            x, y = rng.uniform(0, 1, 2)
            if table.contains_strictly(x, y):
                break
        direction = rng.uniform(0, 2 * math.pi)
        assert fold_check(table, Vec2(x, y), direction, 200, unfolded) < 1e-6


@pytest.fixture
def pentagon():
    """Irregular convex pentagon."""
    return BilliardTable.polygon([(0, 0), (3, 0), (3.5, 1.7), (1.2, 2.6), (-0.4, 1.1)])


def test_reflection_law(pentagon):
    """At every bounce the angle of incidence equals the angle of reflection."""
    path = billiard_trace(pentagon, Vec2(1.3, 1.1), 0.77, max_reflections=200)
    points = np.asarray(path.points)
    assert path.reflections == 200
    for k in range(1, len(points) - 1):
        ax, ay, bx, by = pentagon.edge(path.walls[k - 1])
        wall = np.array([bx - ax, by - ay]) / math.hypot(bx - ax, by - ay)
        incoming = points[k] - points[k - 1]
        outgoing = points[k + 1] - points[k]
        incoming /= np.linalg.norm(incoming)
        outgoing /= np.linalg.norm(outgoing)
        assert incoming @ wall == pytest.approx(outgoing @ wall, abs=1e-9)
        normal = np.array([-wall[1], wall[0]])
        assert incoming @ normal == pytest.approx(-(outgoing @ normal), abs=1e-9)


def test_time_reversal(pentagon):
    """Reversing the final direction retraces the path back to the start."""
    start = Vec2(1.3, 1.1)
    forward = billiard_trace(pentagon, start, 0.77, max_length=37.3, detect_closure=False)
    (x0, y0), (x1, y1) = forward.points[-2:]
    heading = math.atan2(y1 - y0, x1 - x0)
    back = billiard_trace(pentagon, Vec2(x1, y1), heading + math.pi, max_length=37.3, detect_closure=False)
    assert back.end == pytest.approx((start.x, start.y), abs=1e-8)
    assert back.walls == list(reversed(forward.walls))


def test_fold_direction():
    """Directions on the unfolded surface fold to the billiard heading."""
    table = BilliardTable.right_isosceles()
    surface, folding = unfold_rational(table)
    start = Vec2(0.21, 0.33)
    direction = 0.61
    straight = trace(
        surface, folding.unfold_point(surface, start), direction, max_length=8.9, detect_closure=False
    )
    direct = billiard_trace(table, start, direction, max_length=8.9, detect_closure=False)
    end = folding.fold_point(straight.end)
    assert (end.x, end.y) == pytest.approx(direct.end, abs=1e-8)
    (x0, y0), (x1, y1) = direct.points[-2:]
    heading = folding.fold_direction(straight.end.face, direction)
    assert math.cos(heading) == pytest.approx((x1 - x0) / math.hypot(x1 - x0, y1 - y0), abs=1e-8)
    assert math.sin(heading) == pytest.approx((y1 - y0) / math.hypot(x1 - x0, y1 - y0), abs=1e-8)
