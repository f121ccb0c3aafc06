"""Shared utilities and errors."""
from fractions import Fraction
import math
from typing import Dict, Hashable, Iterable, List, Optional, TypeVar

T = TypeVar("T", bound=Hashable)


def to_list(scalar_or_list):
    """Enclose in list if necessary."""
    if not isinstance(scalar_or_list, (list, tuple)):
        return [scalar_or_list]
    return list(scalar_or_list)


def find_classes(items: Iterable[T], identifications: Iterable) -> Dict[T, int]:
    """Partition items into classes under the given identifications.

    Returns a map from item to class id; ids are numbered in order of
    first appearance in `items`.
    """
    parent: Dict[T, T] = {item: item for item in items}

    def find(item):
        """Find root, halving the path."""
        while parent[item] != item:
            parent[item] = parent[parent[item]]
            item = parent[item]
        return item

    for left, right in identifications:
        root_left, root_right = find(left), find(right)
        if root_left != root_right:
            parent[root_right] = root_left

    class_ids: Dict[T, int] = {}
    roots: Dict[T, int] = {}
    for item in parent:
        root = find(item)
        if root not in roots:
            roots[root] = len(roots)
        class_ids[item] = roots[root]
    return class_ids


def rational_multiple_of_pi(
        angle: float,
        max_denominator: int = 1000,
        tol: float = 1e-9,
) -> Optional[Fraction]:
    """Return p/q with angle = p·π/q, or None if no such fraction is close."""
    ratio = Fraction(angle / math.pi).limit_denominator(max_denominator)
    if abs(float(ratio) * math.pi - angle) > tol:
        return None
    return ratio


def lcm(values: Iterable[int]) -> int:
    """Least common multiple."""
    result = 1
    for value in values:
        result = result * value // math.gcd(result, value)
    return result


def dyadic_checkpoints(t_max: float, t_min: float = 16.0, min_count: int = 4) -> List[float]:
    """Increasing list T_max/2^k, k = K..0, with T_max/2^K >= t_min."""
    levels = max(min_count, int(math.floor(math.log2(t_max / t_min))) + 1)
    return [t_max / 2 ** k for k in reversed(range(levels))]


class FlatTraceError(Exception):
    """Base error."""


class InvalidParameter(FlatTraceError, ValueError):
    """Parameter outside its documented range."""


class DegenerateSegment(FlatTraceError):
    """Segment endpoints coincide."""


class DegenerateTriangle(FlatTraceError):
    """Triangle vertices are collinear."""


class SingularMatrix(FlatTraceError):
    """Matrix determinant vanishes."""


class NotClosed(FlatTraceError):
    """Polygon edge vectors do not sum to zero."""


class NotSimplePolygon(FlatTraceError):
    """Polygon self-intersects."""


class BadPairing(FlatTraceError):
    """Side pairing is not a translation involution."""


class DegenerateSurface(FlatTraceError):
    """Surface has a face of zero area."""


class UnknownEdge(FlatTraceError):
    """No such edge on the surface."""


class UnknownName(FlatTraceError):
    """No builtin with that name."""


class BadParam(InvalidParameter):
    """Builtin parameter out of range."""


class StartOnVertex(FlatTraceError):
    """Start point coincides with a vertex."""


class SourceOnVertex(StartOnVertex):
    """Illumination source coincides with a vertex."""


class NoReturn(FlatTraceError):
    """Orbit did not return within the crossing budget."""


class FlipLimitExceeded(FlatTraceError):
    """Too many Delaunay flips."""


class SearchBudgetExceeded(FlatTraceError):
    """Saddle connection search developed too many triangles."""


class StartOutside(FlatTraceError):
    """Billiard start point is not strictly inside the table."""


class IrrationalAngle(FlatTraceError):
    """Table angle is not a rational multiple of pi."""


class BadDimensions(InvalidParameter):
    """Obstacle does not fit in the cell."""


class StartInsideObstacle(FlatTraceError):
    """Windtree start point lies in an obstacle."""


class AllDirectionsSingular(FlatTraceError):
    """Every sampled direction hit a corner."""
