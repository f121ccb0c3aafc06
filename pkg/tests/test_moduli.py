"""Test the GL(2,R) action, Delaunay renormalization and systoles."""
import math

import pytest

from flattrace.acceptance import same_point
from flattrace.flow import Termination, trace
from flattrace.geometry import GroupElement
from flattrace.moduli import (
    apply_matrix,
    delaunay_normalize,
    delaunay_normalize_with_map,
    divergence_profile,
    geodesic_flow,
    horocycle_flow,
    is_delaunay,
    rotate,
    saddle_connections,
    systole_proxy,
)
from flattrace.patterns import builtin
from flattrace.surface import SurfacePoint, build_from_pattern, topology
from flattrace.geometry import Vec2
from flattrace.util import FlipLimitExceeded, InvalidParameter, SearchBudgetExceeded

from .logging_setup import setup_logger

setup_logger()


@pytest.fixture
def torus():
    """Unit torus."""
    return build_from_pattern(builtin("unit-torus"))


@pytest.fixture
def sheared(torus):
    """Unit torus under a large horocycle shear (not Delaunay)."""
    return horocycle_flow(torus, 3.0)


@pytest.fixture
def octagon():
    """Regular octagon with opposite sides glued."""
    return build_from_pattern(builtin("regular-2n-gon", {"n": 4}))


def test_area_scaling(octagon):
    """Area scales by |det|."""
    M = GroupElement(2.0, 1.0, 0.5, 3.0)
    assert apply_matrix(octagon, M).area == pytest.approx(abs(M.det) * octagon.area)
    assert rotate(octagon, 0.7).area == pytest.approx(octagon.area)
    assert horocycle_flow(octagon, 5.0).area == pytest.approx(octagon.area)


def test_action_composes(octagon):
    """Acting twice equals acting by the product."""
    M1 = GroupElement.rotation(0.4) @ GroupElement.diagonal(1.5, 0.8)
    M2 = GroupElement.horocycle(0.9)
    stepwise = apply_matrix(apply_matrix(octagon, M1), M2)
    composed = apply_matrix(octagon, M2 @ M1)
    for t1, t2 in zip(stepwise.faces, composed.faces):
        for p, q in zip(t1, t2):
            assert p == pytest.approx(q, abs=1e-12)


def test_torus_is_delaunay(torus):
    """The square torus needs no flips."""
    assert is_delaunay(torus)
    normalized, chart_map = delaunay_normalize_with_map(torus)
    assert normalized is torus
    assert chart_map.flips == ()


def test_delaunay_normalize(sheared):
    """Flips restore the Delaunay property and keep the flat metric."""
    assert not is_delaunay(sheared)
    normalized = delaunay_normalize(sheared)
    assert is_delaunay(normalized)
    assert normalized.area == pytest.approx(sheared.area)
    assert topology(normalized).genus == 1
    assert systole_proxy(sheared) == pytest.approx(1.0)


def test_flip_limit(sheared):
    """A zero flip budget fails on a non-Delaunay surface."""
    with pytest.raises(FlipLimitExceeded):
        delaunay_normalize(sheared, max_flips=0)


def test_chart_map(octagon):
    """Traces on the old and new triangulations end at the same point."""
    distorted = apply_matrix(octagon, GroupElement.teichmuller(1.0) @ GroupElement.rotation(0.3))
    normalized, chart_map = delaunay_normalize_with_map(distorted)
    assert len(chart_map.flips) > 0
    assert is_delaunay(normalized)
    assert topology(normalized).cone_orders == (2,)
    for face, triangle in enumerate(distorted.faces):
        start = SurfacePoint(face, Vec2(
            sum(p[0] for p in triangle) / 3,
            sum(p[1] for p in triangle) / 3,
        ))
        mapped = chart_map(start)
        assert normalized.contains(mapped.face, mapped.pos.x, mapped.pos.y)
        before = trace(distorted, start, 0.123 + face, max_length=3.0, detect_closure=False)
        after = trace(normalized, mapped, 0.123 + face, max_length=3.0, detect_closure=False)
        if Termination.SINGULAR_HIT in (before.termination, after.termination):
            assert before.total_length == pytest.approx(after.total_length, abs=1e-6)
        else:
            assert same_point(normalized, chart_map(before.end), after.end) < 1e-6


def test_geodesic_flow(torus):
    """The flow contracts the vertical systole by e^-t."""
    flowed = geodesic_flow(torus, 1.0)
    assert is_delaunay(flowed)
    assert flowed.area == pytest.approx(1.0)
    assert systole_proxy(flowed) == pytest.approx(math.exp(-1.0))
    raw = geodesic_flow(torus, 1.0, renormalize=False)
    assert raw.faces[0][2] == pytest.approx((math.e, 0.0))


def test_saddle_connections(torus):
    """Shortest saddle connections of the square torus."""
    def holonomies(L):
        return {
            (round(sc.holonomy.x, 9), round(sc.holonomy.y, 9))
            for sc in saddle_connections(torus, L)
        }

    assert holonomies(1.1) == {(1.0, 0.0), (0.0, 1.0)}
    assert holonomies(1.5) == {(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)}
    connections = saddle_connections(torus, 2.3)
    lengths = [sc.length for sc in connections]
    assert lengths == sorted(lengths)
    assert max(lengths) <= 2.3

    with pytest.raises(InvalidParameter):
        saddle_connections(torus, 0.0)
    with pytest.raises(SearchBudgetExceeded):
        saddle_connections(torus, 10.0, max_triangles=5)


def test_octagon_systole(octagon):
    """The octagon's shortest saddle connection is a side."""
    assert systole_proxy(octagon) == pytest.approx(1.0)
    (shortest, *_) = saddle_connections(octagon, 1.01)
    assert shortest.length == pytest.approx(1.0)


def test_divergence_profile(torus):
    """Systole decays like e^-t in a periodic direction and stays bounded otherwise."""
    profile = divergence_profile(torus, 4.0, 0.5)
    assert len(profile.samples) == 9
    assert profile.slope == pytest.approx(-1.0, abs=1e-6)

    rotated = rotate(torus, math.atan(1 / math.sqrt(2)))
    assert divergence_profile(rotated, 6.0, 0.5).systoles.min() >= 0.1

    slit = build_from_pattern(builtin("slit-torus"))
    assert divergence_profile(slit, 6.0, 0.5).log_slope(2.0, 6.0) == pytest.approx(-1.0, abs=0.05)

    with pytest.raises(InvalidParameter):
        divergence_profile(torus, 1.0, 0.0)
