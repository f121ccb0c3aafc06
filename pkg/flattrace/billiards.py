"""Polygonal billiards: specular reflection and unfolding of rational tables."""
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._types import Point
from .flow import Termination, trace
from .geometry import DEFAULT_TOLERANCE, GroupElement, Tolerance, Vec2, interior_angle, ray_hit
from .hull import diameter
from .surface import PolygonPattern, SurfacePoint, TranslationSurface, build_from_pattern, polygon_is_simple
from .util import (
    BadParam,
    InvalidParameter,
    IrrationalAngle,
    NotSimplePolygon,
    StartOutside,
    lcm,
    rational_multiple_of_pi,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class BilliardTable:
    """Simple counterclockwise polygon; vertex j sits between edges j-1 and j."""

    vertices: Tuple[Vec2, ...]
    tol: Tolerance = field(default=DEFAULT_TOLERANCE, compare=False)

    def __post_init__(self):
        """Check the polygon."""
        points = self.points
        if len(points) < 3:
            raise NotSimplePolygon("a table needs at least 3 vertices")
        n = len(points)
        signed = 0.5 * sum(
            points[i][0] * points[(i + 1) % n][1] - points[(i + 1) % n][0] * points[i][1]
            for i in range(n)
        )
        if signed <= 0:
            raise NotSimplePolygon("table is not counterclockwise")
        if not polygon_is_simple(points, self.tol.eps_len):
            raise NotSimplePolygon("table self-intersects")

    @classmethod
    def polygon(cls, points: Sequence[Tuple[float, float]], tol: Tolerance = DEFAULT_TOLERANCE) -> "BilliardTable":
        """Table from vertex coordinates."""
        return cls(tuple(Vec2(float(x), float(y)) for x, y in points), tol)

    @classmethod
    def square(cls, side: float = 1.0) -> "BilliardTable":
        """[0, side]^2."""
        if not side > 0:
            raise BadParam("side must be positive")
        return cls.polygon([(0, 0), (side, 0), (side, side), (0, side)])

    @classmethod
    def triangle(cls, alpha: float, beta: float) -> "BilliardTable":
        """Triangle on the unit base with angles alpha at (0, 0) and beta at (1, 0)."""
        if not (alpha > 0 and beta > 0 and alpha + beta < math.pi):
            raise BadParam(f"angles {alpha}, {beta} do not form a triangle")
        side = math.sin(beta) / math.sin(alpha + beta)
        return cls.polygon([(0, 0), (1, 0), (side * math.cos(alpha), side * math.sin(alpha))])

    @classmethod
    def right_isosceles(cls) -> "BilliardTable":
        """Angles (pi/2, pi/4, pi/4)."""
        return cls.polygon([(0, 0), (1, 0), (0, 1)])

    @property
    def points(self) -> List[Point]:
        """Vertices as plain tuples."""
        return [v.as_tuple() for v in self.vertices]

    @property
    def angles(self) -> List[float]:
        """Interior angle at each vertex."""
        points = self.points
        n = len(points)
        return [interior_angle(points[j - 1], points[j], points[(j + 1) % n]) for j in range(n)]

    @property
    def angle_data(self) -> Tuple[Optional[Fraction], ...]:
        """Each interior angle as a multiple of pi, when rational."""
        return tuple(rational_multiple_of_pi(angle) for angle in self.angles)

    def edge(self, i: int) -> Tuple[float, float, float, float]:
        """Endpoints of edge i on raw coordinates."""
        n = len(self.vertices)
        a, b = self.vertices[i], self.vertices[(i + 1) % n]
        return a.x, a.y, b.x, b.y

    def contains_strictly(self, x: float, y: float) -> bool:
        """Whether (x, y) is inside and farther than eps_len from the boundary."""
        eps = self.tol.eps_len
        inside = False
        n = len(self.vertices)
        for i in range(n):
            ax, ay, bx, by = self.edge(i)
            ex, ey = bx - ax, by - ay
            t = max(0.0, min(1.0, ((x - ax) * ex + (y - ay) * ey) / (ex * ex + ey * ey)))
            if math.hypot(x - ax - t * ex, y - ay - t * ey) <= eps:
                return False
            if (ay > y) != (by > y) and x < ax + (y - ay) * ex / ey:
                inside = not inside
        return inside


@dataclass
class PlanarTrajectory:
    """Polygonal path in the plane.

    `points[k]` is reached after length `lengths[k]`; interior points are
    reflections off `walls[k - 1]`.
    """

    points: List[Point] = field(default_factory=list)
    lengths: List[float] = field(default_factory=list)
    walls: List[int] = field(default_factory=list)
    termination: Optional[Termination] = None

    @property
    def total_length(self) -> float:
        """Length travelled."""
        return self.lengths[-1] if self.lengths else 0.0

    @property
    def reflections(self) -> int:
        """Number of wall bounces."""
        return len(self.walls)

    @property
    def end(self) -> Point:
        """Last point reached."""
        return self.points[-1]

    def as_array(self) -> np.ndarray:
        """(n, 3) array of length, x, y."""
        return np.column_stack([
            np.asarray(self.lengths, dtype=float),
            np.asarray(self.points, dtype=float).reshape(-1, 2),
        ])

    def diameter(self) -> float:
        """Diameter of the path."""
        return diameter(self.points)


def _reflect(ux, uy, ax, ay, bx, by):
    """Mirror a direction in the line through a and b."""
    wx, wy = bx - ax, by - ay
    norm = math.hypot(wx, wy)
    wx, wy = wx / norm, wy / norm
    dot = ux * wx + uy * wy
    return 2 * dot * wx - ux, 2 * dot * wy - uy


def billiard_trace(
        table: BilliardTable,
        start: Vec2,
        direction: float,
        max_length: Optional[float] = None,
        max_reflections: Optional[int] = None,
        detect_closure: bool = True,
) -> PlanarTrajectory:
    """Billiard flow in a polygon by direct specular reflection.

    Ends at max_length, after max_reflections, on hitting a corner
    (SingularHit) or when the path returns to the start with the initial
    direction (Closed).
    """
    if max_length is None and max_reflections is None:
        raise InvalidParameter("give max_length or max_reflections")
    if not table.contains_strictly(start.x, start.y):
        raise StartOutside(f"start ({start.x}, {start.y}) is not strictly inside the table")
    length_budget = math.inf if max_length is None else float(max_length)
    reflection_budget = math.inf if max_reflections is None else int(max_reflections)
    eps = table.tol.eps_len
    eps_angle = table.tol.eps_angle
    edges = [table.edge(i) for i in range(len(table.vertices))]
    ux0, uy0 = math.cos(direction), math.sin(direction)
    ux, uy = ux0, uy0
    x, y = start.x, start.y
    path = PlanarTrajectory([(x, y)], [0.0])
    travelled = 0.0
    last_wall = None
    while True:
        best = None
        for i, (ax, ay, bx, by) in enumerate(edges):
            if i == last_wall:
                continue
            hit = ray_hit(x, y, ux, uy, ax, ay, bx, by, eps)
            if hit is not None and (best is None or hit[0] < best[0]):
                best = (hit[0], i, hit[1])
        if best is None:
            raise RuntimeError(f"ray from ({x}, {y}) left the table")
        t, wall, s = best
        remaining = length_budget - travelled
        if detect_closure and path.walls and abs(ux - ux0) + abs(uy - uy0) <= eps_angle:
            along = (start.x - x) * ux + (start.y - y) * uy
            off = abs((start.x - x) * uy - (start.y - y) * ux)
            if off <= eps and eps < along <= min(t, remaining) + eps:
                path.points.append((start.x, start.y))
                path.lengths.append(travelled + along)
                path.termination = Termination.CLOSED
                break
        if t >= remaining:
            x, y = x + remaining * ux, y + remaining * uy
            path.points.append((x, y))
            path.lengths.append(length_budget)
            path.termination = Termination.LENGTH_REACHED
            break
        ax, ay, bx, by = edges[wall]
        travelled += t
        edge_len = math.hypot(bx - ax, by - ay)
        if s * edge_len <= eps or (1.0 - s) * edge_len <= eps:
            corner = (ax, ay) if s * edge_len <= eps else (bx, by)
            path.points.append(corner)
            path.lengths.append(travelled)
            path.termination = Termination.SINGULAR_HIT
            break
        x, y = x + t * ux, y + t * uy
        ux, uy = _reflect(ux, uy, ax, ay, bx, by)
        last_wall = wall
        path.points.append((x, y))
        path.lengths.append(travelled)
        path.walls.append(wall)
        if path.reflections >= reflection_budget:
            path.termination = Termination.CROSSINGS_REACHED
            break
    LOGGER.debug(
        "Billiard trace ended: %s after %d reflections, length %.6g",
        path.termination.value,
        path.reflections,
        path.total_length,
    )
    return path


# Group elements are pairs (e, k): e = 0 is the rotation by k*pi/N,
# e = 1 the reflection R(2*phi0 + k*pi/N) S with S the mirror in the x axis.
Element = Tuple[int, int]


def _compose(g: Element, h: Element, modulus: int) -> Element:
    """g*h in the dihedral group."""
    e1, k1 = g
    e2, k2 = h
    if e1 == 0:
        return e2, (k1 + k2) % modulus
    return 1 - e2, (k1 - k2) % modulus


def _matrix(element: Element, order: int, phi0: float) -> GroupElement:
    """Linear map of a group element."""
    e, k = element
    theta = k * math.pi / order + (2 * phi0 if e else 0.0)
    cos, sin = math.cos(theta), math.sin(theta)
    if e == 0:
        return GroupElement(cos, -sin, sin, cos)
    return GroupElement(cos, sin, sin, -cos)


@dataclass(frozen=True)
class FoldingMap:
    """Sends points and directions on an unfolded surface back to the table.

    Copy c of the table is the image of the table under `matrices[c]`;
    its faces are `faces_per_copy` consecutive faces of the surface.
    """

    table: BilliardTable
    elements: Tuple[Element, ...]
    matrices: Tuple[GroupElement, ...]
    order: int
    faces_per_copy: int

    def copy_of(self, face: int) -> int:
        """Copy that a face belongs to."""
        return face // self.faces_per_copy

    def copy_faces(self, copy: int) -> range:
        """Faces of one copy."""
        return range(copy * self.faces_per_copy, (copy + 1) * self.faces_per_copy)

    def fold_xy(self, face: int, x: float, y: float) -> Point:
        """Table point under a chart point of a face."""
        return self.matrices[self.copy_of(face)].inverse().apply_xy(x, y)

    def fold_point(self, point: SurfacePoint) -> Vec2:
        """Table point under a surface point."""
        return Vec2(*self.fold_xy(point.face, point.pos.x, point.pos.y))

    def fold_direction(self, face: int, direction: float) -> float:
        """Table direction under a flow direction in a face."""
        ux, uy = self.matrices[self.copy_of(face)].inverse().apply_xy(
            math.cos(direction), math.sin(direction)
        )
        return math.atan2(uy, ux)

    def unfold_point(self, surface: TranslationSurface, point: Vec2, copy: int = 0) -> SurfacePoint:
        """Surface point over a table point, in the given copy."""
        x, y = self.matrices[copy].apply_xy(point.x, point.y)
        for face in self.copy_faces(copy):
            if surface.contains(face, x, y):
                return SurfacePoint(face, Vec2(x, y))
        raise InvalidParameter(f"({point.x}, {point.y}) is not on the table")


def unfold_rational(table: BilliardTable) -> Tuple[TranslationSurface, FoldingMap]:
    """Translation surface tiled by the reflected copies of a rational table."""
    ratios = table.angle_data
    for j, ratio in enumerate(ratios):
        if ratio is None:
            raise IrrationalAngle(
                f"angle {table.angles[j]!r} at vertex {j} is not a rational multiple of pi"
            )
    order = lcm(ratio.denominator for ratio in ratios)
    modulus = 2 * order
    n = len(table.vertices)
    # edge i makes angle phi0 + k_i*pi/(2N) with the x axis
    turns = [Fraction(0)]
    for j in range(1, n):
        turns.append(turns[-1] + 1 - ratios[j])
    mirrors = [(1, int(2 * order * turn) % modulus) for turn in turns]
    ax, ay, bx, by = table.edge(0)
    phi0 = math.atan2(by - ay, bx - ax)

    elements: List[Element] = [(0, 0)]
    index: Dict[Element, int] = {(0, 0): 0}
    queue = deque([(0, 0)])
    while queue:
        g = queue.popleft()
        for mirror in mirrors:
            h = _compose(g, mirror, modulus)
            if h not in index:
                index[h] = len(elements)
                elements.append(h)
                queue.append(h)
    matrices = tuple(_matrix(g, order, phi0) for g in elements)

    points = table.points
    polygons = []
    origins = []
    local_edge = []
    for g, M in zip(elements, matrices):
        images = [M.apply_xy(x, y) for x, y in points]
        if g[0] == 1:
            images = [images[0]] + images[:0:-1]
            local_edge.append([n - 1 - i for i in range(n)])
        else:
            local_edge.append(list(range(n)))
        polygons.append(tuple(
            Vec2(images[(j + 1) % n][0] - images[j][0], images[(j + 1) % n][1] - images[j][1])
            for j in range(n)
        ))
        origins.append(Vec2(*images[0]))
    pairing = [0] * (n * len(elements))
    for c, g in enumerate(elements):
        for i, mirror in enumerate(mirrors):
            other = index[_compose(g, mirror, modulus)]
            pairing[c * n + local_edge[c][i]] = other * n + local_edge[other][i]
    pattern = PolygonPattern(tuple(polygons), tuple(pairing), tuple(origins))
    surface = build_from_pattern(pattern, table.tol)
    LOGGER.debug("Unfolded table with N = %d into %d copies", order, len(elements))
    return surface, FoldingMap(table, tuple(elements), matrices, order, n - 2)


def fold_check(
        table: BilliardTable,
        start: Vec2,
        direction: float,
        n_reflections: int = 1000,
        unfolded: Optional[Tuple[TranslationSurface, FoldingMap]] = None,
) -> float:
    """Largest distance between direct reflection and the folded-back straight line.

    Positions are compared at every reflection of the direct trace. Returns
    inf when one method hits a corner and the other does not.
    """
    direct = billiard_trace(table, start, direction, max_reflections=n_reflections, detect_closure=False)
    surface, folding = unfolded if unfolded is not None else unfold_rational(table)
    eps = table.tol.eps_len
    singular = direct.termination is Termination.SINGULAR_HIT
    budget = direct.total_length + (10 * eps if singular else 0.0)
    straight = trace(
        surface,
        folding.unfold_point(surface, start),
        direction,
        max_length=budget,
        detect_closure=False,
        stop_at_vertices=True,
    )
    if singular != (straight.termination is Termination.SINGULAR_HIT):
        LOGGER.warning(
            "Fold check disagreement: direct %s, unfolded %s",
            direct.termination.value,
            straight.termination.value,
        )
        return math.inf
    segments = straight.segment_array()
    seg_len = np.hypot(segments[:, 3] - segments[:, 1], segments[:, 4] - segments[:, 2])
    seg_start = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])
    deviation = abs(straight.total_length - direct.total_length) if singular else 0.0
    for (px, py), at in zip(direct.points, direct.lengths):
        k = int(np.clip(np.searchsorted(seg_start, at, side="right") - 1, 0, len(segments) - 1))
        face, ax, ay, bx, by = segments[k]
        frac = 0.0 if seg_len[k] == 0 else min(1.0, max(0.0, (at - seg_start[k]) / seg_len[k]))
        fx, fy = folding.fold_xy(int(face), ax + frac * (bx - ax), ay + frac * (by - ay))
        deviation = max(deviation, math.hypot(fx - px, fy - py))
    return deviation
