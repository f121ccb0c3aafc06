"""Test surface construction and topology."""
import math

import pytest

from flattrace.geometry import GroupElement, Vec2
from flattrace.moduli import apply_matrix
from flattrace.patterns import builtin
from flattrace.surface import (
    PolygonPattern,
    build_from_pattern,
    cone_angle_total,
    ear_clip,
    normalize_area,
    period_coordinates,
    polygon_is_simple,
    topology,
)
from flattrace.util import (
    BadPairing,
    BadParam,
    InvalidParameter,
    NotClosed,
    NotSimplePolygon,
    UnknownEdge,
    UnknownName,
)

from .logging_setup import setup_logger

setup_logger()

BUILTINS = [
    ("unit-torus", {}),
    ("rect-torus", {"w": 2.0, "h": 0.5}),
    ("regular-2n-gon", {"n": 3}),
    ("regular-2n-gon", {"n": 4}),
    ("slit-torus", {}),
]


def square(pairing):
    """Unit square pattern with a given pairing."""
    return PolygonPattern.single(
        [Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -1)],
        pairing,
    )


@pytest.fixture
def octagon():
    """Regular octagon with opposite sides glued."""
    return build_from_pattern(builtin("regular-2n-gon", {"n": 4}))


def test_torus():
    """Test the unit torus."""
    surface = build_from_pattern(builtin("unit-torus"))
    topo = topology(surface)
    assert topo.genus == 1
    assert topo.cone_orders == ()
    assert topo.stratum == "H(0)"
    assert topo.num_vertices == 1
    assert len(surface.faces) == 2
    assert surface.area == pytest.approx(1.0)


def test_octagon(octagon):
    """Test the genus-two octagon."""
    topo = topology(octagon)
    assert topo.genus == 2
    assert topo.cone_orders == (2,)
    assert topo.stratum == "H(2)"
    assert octagon.area == pytest.approx(2 * (1 + math.sqrt(2)))
    assert cone_angle_total(octagon) == pytest.approx(6 * math.pi)


def test_hexagon_is_torus():
    """Opposite sides of a hexagon give a torus with two marked points."""
    surface = build_from_pattern(builtin("regular-2n-gon", {"n": 3}))
    topo = topology(surface)
    assert topo.genus == 1
    assert topo.cone_orders == ()
    assert topo.num_vertices == 2
    assert surface.singular_classes == frozenset()


def test_slit_torus():
    """Test the slit torus."""
    surface = build_from_pattern(builtin("slit-torus", {"lam": 0.3}))
    topo = topology(surface)
    assert topo.genus == 2
    assert topo.cone_orders == (1, 1)
    assert surface.area == pytest.approx(2.0)


@pytest.mark.parametrize("name,params", BUILTINS)
def test_gluing_is_translation(name, params):
    """Glued edges carry opposite vectors and offsets map endpoints onto the partner."""
    surface = build_from_pattern(builtin(name, params))
    topo = topology(surface)
    assert sum(topo.cone_orders) == 2 * topo.genus - 2
    for f, triangle in enumerate(surface.faces):
        for e in range(3):
            g, l = surface.partner(f, e)
            assert surface.partner(g, l) == (f, e)
            v, w = surface.edge_vector(f, e), surface.edge_vector(g, l)
            assert v.x == pytest.approx(-w.x, abs=1e-12)
            assert v.y == pytest.approx(-w.y, abs=1e-12)
            ox, oy = surface.offsets[f][e]
            px, py = triangle[(e + 1) % 3]
            qx, qy = surface.faces[g][l]
            assert px + ox == pytest.approx(qx, abs=1e-12)
            assert py + oy == pytest.approx(qy, abs=1e-12)


def test_bad_patterns():
    """Test pattern validation errors."""
    with pytest.raises(NotClosed):
        build_from_pattern(PolygonPattern.single(
            [Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -0.5)],
            [2, 3, 0, 1],
        ))
    with pytest.raises(BadPairing):
        build_from_pattern(square([1, 0, 3, 2]))
    with pytest.raises(BadPairing):
        build_from_pattern(square([0, 3, 2, 1]))
    with pytest.raises(BadPairing):
        build_from_pattern(square([2, 3, 0]))
    with pytest.raises(NotSimplePolygon):
        build_from_pattern(PolygonPattern.single(
            [Vec2(0, 1), Vec2(1, 0), Vec2(0, -1), Vec2(-1, 0)],
            [2, 3, 0, 1],
        ))


def test_builtin_errors():
    """Test builtin lookup errors."""
    with pytest.raises(UnknownName):
        builtin("klein-bottle")
    with pytest.raises(BadParam):
        builtin("regular-2n-gon", {"n": 1})
    with pytest.raises(BadParam):
        builtin("slit-torus", {"lam": 1.5})
    with pytest.raises(BadParam):
        builtin("rect-torus", {"w": -1.0})
    with pytest.raises(BadParam):
        builtin("rect-torus", {"depth": 1.0})


def test_polygon_helpers():
    """Test simplicity check and ear clipping."""
    assert not polygon_is_simple([(0, 0), (1, 1), (1, 0), (0, 1)], 1e-9)
    points = [(0, 0), (2, 0), (2, 2), (1, 1), (0, 2)]
    assert polygon_is_simple(points, 1e-9)
    triangles = ear_clip(points, 1e-9)
    assert len(triangles) == len(points) - 2
    assert {i for triangle in triangles for i in triangle} == set(range(len(points)))


def test_period_coordinates():
    """Test edge holonomies by label and by slot."""
    surface = build_from_pattern(builtin("unit-torus"))
    first, second = period_coordinates(surface, [0, 1])
    assert (first.x, first.y) == pytest.approx((1, 0))
    assert (second.x, second.y) == pytest.approx((0, 1))

    stretched = apply_matrix(surface, GroupElement.diagonal(2.0, 1.0))
    (image,) = period_coordinates(stretched, 0)
    assert (image.x, image.y) == pytest.approx((2, 0))

    with pytest.raises(UnknownEdge):
        period_coordinates(surface, [7])
    with pytest.raises(UnknownEdge):
        period_coordinates(surface, [(5, 0)])


def test_normalize_area():
    """Test rescaling to area one."""
    surface = build_from_pattern(builtin("rect-torus", {"w": 2.0, "h": 1.0}))
    assert normalize_area(surface).area == pytest.approx(1.0)


def test_orientation_reversing_map(octagon):
    """A reflection keeps the topology and the area."""
    mirrored = octagon.map_linear(GroupElement.diagonal(1.0, -1.0))
    assert mirrored.area == pytest.approx(octagon.area)
    topo = topology(mirrored)
    assert topo.genus == 2
    assert topo.cone_orders == (2,)


def test_points():
    """Test point lookup in face charts."""
    surface = build_from_pattern(builtin("unit-torus"))
    point = surface.point_at(0.3, 0.6)
    assert surface.contains(point.face, 0.3, 0.6)
    with pytest.raises(InvalidParameter):
        surface.point(99, 0.3, 0.6)
    with pytest.raises(InvalidParameter):
        surface.point_at(2.0, 2.0)


@pytest.mark.parametrize("name,params", BUILTINS)
def test_cone_angles_match_polygons(name, params):
    """Cone angles add up to the polygons' interior angles and satisfy Gauss-Bonnet."""
    pattern = builtin(name, params)
    surface = build_from_pattern(pattern)
    total = cone_angle_total(surface)
    assert total == pytest.approx(pattern.interior_angle_sum())
    topo = topology(surface)
    assert total == pytest.approx(2 * math.pi * (2 * topo.genus - 2 + topo.num_vertices))
