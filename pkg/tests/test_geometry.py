"""Test planar primitives and helpers."""
from fractions import Fraction
import itertools
import math

import numpy as np
import pytest

from flattrace.geometry import (
    GroupElement,
    Tolerance,
    Vec2,
    apply,
    incircle,
    interior_angle,
    orient,
    ray_segment_intersect,
    triangle_area,
)
from flattrace.util import (
    DegenerateSegment,
    DegenerateTriangle,
    InvalidParameter,
    SingularMatrix,
    dyadic_checkpoints,
    find_classes,
    lcm,
    rational_multiple_of_pi,
)

from .logging_setup import setup_logger

setup_logger()


def test_orient():
    """Test orientation signs, including the collinear snap."""
    p, q, r = Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)
    assert orient(p, q, r) == 1
    assert orient(p, r, q) == -1
    assert orient(p, q, Vec2(2, 0)) == 0
    assert orient(p, q, Vec2(2, 1e-12)) == 0
    assert orient(p, q, Vec2(2, 1e-3), Tolerance(eps_len=1e-2)) == 0


def test_orient_swap_antisymmetric():
    """Swapping two points flips the sign, including near the collinear snap."""
    tol = Tolerance(eps_len=1e-3)
    near = (Vec2(0, 0), Vec2(1, 0), Vec2(10, 0.0095))
    assert orient(*near, tol) == 0
    rng = np.random.default_rng(3)
    triples = [near, (Vec2(0, 0), Vec2(1, 0), Vec2(10, 0.0105))]
    triples += [tuple(Vec2(*xy) for xy in rng.uniform(-5, 5, (3, 2))) for _ in range(200)]
    for triple in triples:
        base = orient(*triple, tol)
        for order in itertools.permutations(range(3)):
            inversions = sum(order[i] > order[j] for i in range(3) for j in range(i + 1, 3))
            sign = -1 if inversions % 2 else 1
            assert orient(*(triple[i] for i in order), tol) == sign * base


def test_incircle():
    """Test incircle against the unit right triangle."""
    a, b, c = Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)
    assert incircle(a, b, c, Vec2(0.5, 0.5)) == 1
    assert incircle(a, b, c, Vec2(1, 1)) == 0
    assert incircle(a, b, c, Vec2(2, 2)) == -1
    # invariant under cyclic permutation, and clockwise input is reordered
    for d in (Vec2(0.5, 0.5), Vec2(2, 2)):
        assert incircle(b, c, a, d) == incircle(a, b, c, d)
        assert incircle(a, c, b, d) == incircle(a, b, c, d)


def test_incircle_degenerate():
    """Test collinear triangles."""
    with pytest.raises(DegenerateTriangle):
        incircle(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0), Vec2(0, 1))


def test_ray_segment_intersect():
    """Test ray/segment hits and misses."""
    seg = (Vec2(1, -1), Vec2(1, 1))
    t, s = ray_segment_intersect(Vec2(0, 0), Vec2(1, 0), seg)
    assert t == pytest.approx(1.0)
    assert s == pytest.approx(0.5)
    assert ray_segment_intersect(Vec2(0, 0), Vec2(-1, 0), seg) is None
    assert ray_segment_intersect(Vec2(0, 0), Vec2(0, 1), seg) is None
    assert ray_segment_intersect(Vec2(0, 2), Vec2(1, 0), seg) is None

    with pytest.raises(DegenerateSegment):
        ray_segment_intersect(Vec2(0, 0), Vec2(1, 0), (Vec2(1, 1), Vec2(1, 1)))
    with pytest.raises(InvalidParameter):
        ray_segment_intersect(Vec2(0, 0), Vec2(2, 0), seg)


def test_group_element():
    """Test matrix constructors and composition."""
    quarter = GroupElement.rotation(math.pi / 2)
    half = quarter @ quarter
    assert (half.a, half.b, half.c, half.d) == pytest.approx((-1, 0, 0, -1), abs=1e-15)
    assert GroupElement.teichmuller(1.7).det == pytest.approx(1.0)
    assert GroupElement.horocycle(3.0).det == 1.0

    M = GroupElement(2.0, 1.0, 1.0, 1.0)
    product = M @ M.inverse()
    assert (product.a, product.b, product.c, product.d) == pytest.approx((1, 0, 0, 1))
    v = apply(M, Vec2(1, 2))
    assert (v.x, v.y) == (4.0, 3.0)

    with pytest.raises(SingularMatrix):
        GroupElement(1.0, 2.0, 2.0, 4.0)


def test_vec2():
    """Test vector helpers."""
    v = Vec2.polar(math.pi / 2, 2.0)
    assert v.x == pytest.approx(0.0, abs=1e-15)
    assert v.y == pytest.approx(2.0)
    assert Vec2(3, 4).norm() == 5.0
    assert Vec2(1, 0).cross(Vec2(0, 1)) == 1.0
    with pytest.raises(InvalidParameter):
        Vec2(math.inf, 0.0)


def test_triangle_helpers():
    """Test signed area and interior angles."""
    assert triangle_area((0, 0), (1, 0), (0, 1)) == 0.5
    assert triangle_area((0, 0), (0, 1), (1, 0)) == -0.5
    assert interior_angle((0, 1), (0, 0), (1, 0)) == pytest.approx(math.pi / 2)
    assert interior_angle((1, 0), (0, 0), (0, 1)) == pytest.approx(3 * math.pi / 2)


def test_util():
    """Test small helpers."""
    assert rational_multiple_of_pi(math.pi / 3) == Fraction(1, 3)
    assert rational_multiple_of_pi(1.0) is None
    assert lcm([4, 6, 10]) == 60

    classes = find_classes("abcde", [("a", "c"), ("c", "e")])
    assert classes["a"] == classes["c"] == classes["e"] == 0
    assert len(set(classes.values())) == 3

    checkpoints = dyadic_checkpoints(1e3)
    assert checkpoints[-1] == 1e3
    assert checkpoints[0] >= 16
    assert len(checkpoints) >= 4
    assert all(b == 2 * a for a, b in zip(checkpoints, checkpoints[1:]))
