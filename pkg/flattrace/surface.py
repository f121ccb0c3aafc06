"""Translation surfaces glued from polygon patterns."""
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ._types import Point, Slot, Triangle
from .geometry import (
    DEFAULT_TOLERANCE,
    GroupElement,
    Tolerance,
    Vec2,
    interior_angle,
    orient_value,
    triangle_area,
)
from .util import (
    BadPairing,
    DegenerateSurface,
    InvalidParameter,
    NotClosed,
    NotSimplePolygon,
    UnknownEdge,
    find_classes,
    to_list,
)

LOGGER = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
ANGLE_SLACK = 1e-6


@dataclass(frozen=True)
class PolygonPattern:
    """One or more polygons with a side-pairing involution.

    `polygons[k]` lists the edge vectors of polygon k, counterclockwise.
    `pairing` acts on the flattened edge list (polygon 0 first). Each
    polygon is laid out in its own chart starting at `origins[k]`
    (default: the origin).
    """

    polygons: Tuple[Tuple[Vec2, ...], ...]
    pairing: Tuple[int, ...]
    origins: Optional[Tuple[Vec2, ...]] = None

    @classmethod
    def single(cls, edges: Sequence[Vec2], pairing: Sequence[int]) -> "PolygonPattern":
        """Pattern made of one polygon."""
        return cls((tuple(edges),), tuple(pairing))

    @property
    def edges(self) -> List[Vec2]:
        """Flattened edge list."""
        return [edge for polygon in self.polygons for edge in polygon]

    def edge_index(self) -> List[Tuple[int, int]]:
        """(polygon, local edge) for each flattened edge index."""
        return [
            (k, i)
            for k, polygon in enumerate(self.polygons)
            for i in range(len(polygon))
        ]

    def vertices(self, k: int) -> List[Point]:
        """Vertex coordinates of polygon k in its chart."""
        origin = self.origins[k] if self.origins else Vec2(0.0, 0.0)
        x, y = origin.x, origin.y
        points = []
        for edge in self.polygons[k]:
            points.append((x, y))
            x, y = x + edge.x, y + edge.y
        return points

    def interior_angle_sum(self) -> float:
        """Sum of all polygon interior angles."""
        total = 0.0
        for k in range(len(self.polygons)):
            points = self.vertices(k)
            n = len(points)
            total += sum(
                interior_angle(points[i - 1], points[i], points[(i + 1) % n])
                for i in range(n)
            )
        return total


@dataclass(frozen=True)
class ConePoint:
    """Vertex class with its total angle 2pi(order + 1)."""

    vertex_class: int
    angle: float
    order: int


@dataclass(frozen=True)
class SurfaceTopology:
    """Genus, cone orders and Euler data."""

    genus: int
    cone_orders: Tuple[int, ...]
    num_faces: int
    num_edges: int
    num_vertices: int

    @property
    def stratum(self) -> str:
        """Stratum label, e.g. H(1,1); H(0) for the torus."""
        orders = self.cone_orders or (0,)
        return "H(" + ",".join(str(d) for d in orders) + ")"


@dataclass(frozen=True)
class SurfacePoint:
    """Point in a face chart."""

    face: int
    pos: Vec2


@dataclass(frozen=True)
class TranslationSurface:
    """Triangulated flat surface with translation gluings.

    `faces[f]` holds the three vertices of triangle f, counterclockwise, in
    its own chart. Edge e of a face runs from vertex e to vertex e+1.
    `gluing[f][e]` is the partner slot; paired edges carry opposite
    vectors. `labels` maps pattern edge indices to slots.
    """

    faces: Tuple[Triangle, ...]
    gluing: Tuple[Tuple[Slot, Slot, Slot], ...]
    labels: Tuple[Tuple[int, Slot], ...] = ()
    tol: Tolerance = field(default=DEFAULT_TOLERANCE, compare=False)

    def partner(self, face: int, edge: int) -> Slot:
        """Slot glued to (face, edge)."""
        return self.gluing[face][edge]

    def edge_vector(self, face: int, edge: int) -> Vec2:
        """Holonomy of an edge slot."""
        start = self.faces[face][edge]
        end = self.faces[face][(edge + 1) % 3]
        return Vec2(end[0] - start[0], end[1] - start[1])

    @cached_property
    def offsets(self) -> Tuple[Tuple[Point, Point, Point], ...]:
        """Chart translation across each edge: p in face f maps to p + offset in the partner face."""
        result = []
        for f, triangle in enumerate(self.faces):
            row = []
            for e in range(3):
                g, l = self.gluing[f][e]
                px, py = triangle[e]
                qx, qy = self.faces[g][(l + 1) % 3]
                row.append((qx - px, qy - py))
            result.append(tuple(row))
        return tuple(result)

    @cached_property
    def edge_ids(self) -> Dict[Slot, int]:
        """Undirected edge id of every slot."""
        ids: Dict[Slot, int] = {}
        count = 0
        for f in range(len(self.faces)):
            for e in range(3):
                if (f, e) in ids:
                    continue
                ids[(f, e)] = ids[self.gluing[f][e]] = count
                count += 1
        return ids

    @cached_property
    def vertex_classes(self) -> Dict[Slot, int]:
        """Vertex class of every corner (face, k)."""
        corners = [(f, k) for f in range(len(self.faces)) for k in range(3)]
        identifications = []
        for f in range(len(self.faces)):
            for e in range(3):
                g, l = self.gluing[f][e]
                identifications.append(((f, e), (g, (l + 1) % 3)))
                identifications.append(((f, (e + 1) % 3), (g, l)))
        return find_classes(corners, identifications)

    def corner_angle(self, face: int, k: int) -> float:
        """Interior angle of a face at corner k."""
        triangle = self.faces[face]
        return interior_angle(triangle[(k + 2) % 3], triangle[k], triangle[(k + 1) % 3])

    @cached_property
    def class_angles(self) -> Dict[int, float]:
        """Total angle around each vertex class."""
        angles: Dict[int, float] = {}
        for (f, k), cls in self.vertex_classes.items():
            angles[cls] = angles.get(cls, 0.0) + self.corner_angle(f, k)
        return angles

    @cached_property
    def cone_points(self) -> Tuple[ConePoint, ...]:
        """All vertex classes with their angle and order (d = 0 marks a regular point)."""
        points = []
        for cls, angle in sorted(self.class_angles.items()):
            order = int(round(angle / TWO_PI)) - 1
            if abs(angle - TWO_PI * (order + 1)) > ANGLE_SLACK or order < 0:
                raise RuntimeError(
                    f"vertex class {cls} has angle {angle!r}, not a multiple of 2pi"
                )
            points.append(ConePoint(cls, angle, order))
        return tuple(points)

    @cached_property
    def singular_classes(self) -> frozenset:
        """Vertex classes with cone angle above 2pi."""
        return frozenset(p.vertex_class for p in self.cone_points if p.order > 0)

    @cached_property
    def area(self) -> float:
        """Total flat area."""
        return sum(triangle_area(*triangle) for triangle in self.faces)

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) over all face charts."""
        xs = [x for triangle in self.faces for x, _ in triangle]
        ys = [y for triangle in self.faces for _, y in triangle]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, face: int, x: float, y: float) -> bool:
        """Whether (x, y) lies in the closed face triangle, within eps_len."""
        triangle = self.faces[face]
        eps = self.tol.eps_len
        for k in range(3):
            px, py = triangle[k]
            qx, qy = triangle[(k + 1) % 3]
            if orient_value(px, py, qx, qy, x, y, eps) < 0:
                return False
        return True

    def point(self, face: int, x: float, y: float) -> SurfacePoint:
        """Validated surface point."""
        if not 0 <= face < len(self.faces):
            raise InvalidParameter(f"no face {face}")
        if not self.contains(face, x, y):
            raise InvalidParameter(f"({x}, {y}) is outside face {face}")
        return SurfacePoint(face, Vec2(x, y))

    def point_at(self, x: float, y: float) -> SurfacePoint:
        """First face whose chart contains (x, y)."""
        for face in range(len(self.faces)):
            if self.contains(face, x, y):
                return SurfacePoint(face, Vec2(x, y))
        raise InvalidParameter(f"({x}, {y}) is in no face chart")

    def default_point(self) -> SurfacePoint:
        """Centroid of face 0."""
        triangle = self.faces[0]
        return SurfacePoint(
            0,
            Vec2(
                sum(p[0] for p in triangle) / 3,
                sum(p[1] for p in triangle) / 3,
            ),
        )

    def with_faces(
            self,
            faces: Sequence[Triangle],
            gluing: Sequence[Sequence[Slot]],
            labels: Sequence[Tuple[int, Slot]],
    ) -> "TranslationSurface":
        """New surface sharing this one's tolerance."""
        return TranslationSurface(
            tuple(tuple(tuple(p) for p in triangle) for triangle in faces),
            tuple(tuple(tuple(s) for s in row) for row in gluing),
            tuple(labels),
            self.tol,
        )

    def map_linear(self, M: GroupElement) -> "TranslationSurface":
        """Apply M to every chart; reverses vertex order when det M < 0."""
        faces = [
            tuple(M.apply_xy(x, y) for x, y in triangle)
            for triangle in self.faces
        ]
        if M.det > 0:
            return self.with_faces(faces, self.gluing, self.labels)
        # vertex order (0, 2, 1): old edge e becomes new edge 2 - e
        faces = [(t[0], t[2], t[1]) for t in faces]
        gluing = [
            [None, None, None]
            for _ in self.faces
        ]
        for f in range(len(self.faces)):
            for e in range(3):
                g, l = self.gluing[f][e]
                gluing[f][2 - e] = (g, 2 - l)
        labels = [(label, (f, 2 - e)) for label, (f, e) in self.labels]
        return self.with_faces(faces, gluing, labels)


def polygon_is_simple(points: List[Point], eps: float) -> bool:
    """No two non-adjacent edges meet."""
    n = len(points)
    for i in range(n):
        a, b = points[i], points[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = points[j], points[(j + 1) % n]
            o1 = orient_value(*a, *b, *c, eps)
            o2 = orient_value(*a, *b, *d, eps)
            o3 = orient_value(*c, *d, *a, eps)
            o4 = orient_value(*c, *d, *b, eps)
            if o1 * o2 < 0 and o3 * o4 < 0:
                return False
            if (o1 == 0 and _on_segment(a, b, c)) or (o2 == 0 and _on_segment(a, b, d)):
                return False
            if (o3 == 0 and _on_segment(c, d, a)) or (o4 == 0 and _on_segment(c, d, b)):
                return False
    return True


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    """Collinear p lies within the bounding box of ab."""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def ear_clip(points: List[Point], eps: float) -> List[Tuple[int, int, int]]:
    """Triangulate a simple counterclockwise polygon without new vertices."""
    remaining = list(range(len(points)))
    triangles = []
    while len(remaining) > 3:
        n = len(remaining)
        for pos in range(n):
            i, j, k = remaining[pos - 1], remaining[pos], remaining[(pos + 1) % n]
            if orient_value(*points[i], *points[j], *points[k], eps) <= 0:
                continue
            blocked = False
            for m in remaining:
                if m in (i, j, k):
                    continue
                p = points[m]
                if (
                        orient_value(*points[i], *points[j], *p, eps) >= 0
                        and orient_value(*points[j], *points[k], *p, eps) >= 0
                        and orient_value(*points[k], *points[i], *p, eps) >= 0
                ):
                    blocked = True
                    break
            if not blocked:
                triangles.append((i, j, k))
                remaining.pop(pos)
                break
        else:
            raise NotSimplePolygon("no ear found; polygon is not simple")
    triangles.append(tuple(remaining))
    return triangles


def validate_pattern(pattern: PolygonPattern, tol: Tolerance = DEFAULT_TOLERANCE):
    """Check closure, simplicity, orientation and the pairing."""
    edges = pattern.edges
    for k, polygon in enumerate(pattern.polygons):
        if len(polygon) < 3:
            raise NotSimplePolygon(f"polygon {k} has fewer than 3 edges")
        sx = sum(e.x for e in polygon)
        sy = sum(e.y for e in polygon)
        if math.hypot(sx, sy) > tol.eps_len * len(polygon):
            raise NotClosed(f"polygon {k} edges sum to ({sx}, {sy})")
        points = pattern.vertices(k)
        signed = 0.5 * sum(
            points[i][0] * points[(i + 1) % len(points)][1]
            - points[(i + 1) % len(points)][0] * points[i][1]
            for i in range(len(points))
        )
        if signed <= 0:
            raise NotSimplePolygon(f"polygon {k} is not counterclockwise")
        if not polygon_is_simple(points, tol.eps_len):
            raise NotSimplePolygon(f"polygon {k} self-intersects")
    if len(pattern.pairing) != len(edges):
        raise BadPairing("pairing length differs from edge count")
    for i, j in enumerate(pattern.pairing):
        if not 0 <= j < len(edges):
            raise BadPairing(f"edge {i} paired with missing edge {j}")
        if j == i:
            raise BadPairing(f"edge {i} is paired with itself")
        if pattern.pairing[j] != i:
            raise BadPairing(f"pairing is not an involution at {i}")
        total = edges[i] + edges[j]
        if total.norm() > tol.eps_len:
            raise BadPairing(
                f"edges {i} and {j} are not parallel, opposite and of equal length"
            )


def build_from_pattern(
        pattern: PolygonPattern,
        tol: Tolerance = DEFAULT_TOLERANCE,
) -> TranslationSurface:
    """Glue a translation surface from a polygon pattern."""
    validate_pattern(pattern, tol)
    faces: List[Triangle] = []
    gluing: List[List[Optional[Slot]]] = []
    boundary_slot: Dict[Tuple[int, int], Slot] = {}
    for k in range(len(pattern.polygons)):
        points = pattern.vertices(k)
        n = len(points)
        diagonals: Dict[Tuple[int, int], Slot] = {}
        for tri in ear_clip(points, tol.eps_len):
            f = len(faces)
            faces.append(tuple(points[i] for i in tri))
            gluing.append([None, None, None])
            for e in range(3):
                i, j = tri[e], tri[(e + 1) % 3]
                if j == (i + 1) % n:
                    boundary_slot[(k, i)] = (f, e)
                elif (j, i) in diagonals:
                    g, l = diagonals.pop((j, i))
                    gluing[f][e] = (g, l)
                    gluing[g][l] = (f, e)
                else:
                    diagonals[(i, j)] = (f, e)
        if diagonals:
            raise RuntimeError(f"unmatched diagonals {sorted(diagonals)}")
    index = pattern.edge_index()
    for i, j in enumerate(pattern.pairing):
        f, e = boundary_slot[index[i]]
        gluing[f][e] = boundary_slot[index[j]]
    for f, triangle in enumerate(faces):
        if triangle_area(*triangle) <= tol.eps_len ** 2:
            raise DegenerateSurface(f"face {f} has zero area")
    labels = tuple(
        (i, boundary_slot[index[i]])
        for i in range(len(index))
    )
    surface = TranslationSurface(
        tuple(faces),
        tuple(tuple(row) for row in gluing),
        labels,
        tol,
    )
    topo = topology(surface)
    LOGGER.debug(
        "Built surface with %d faces, genus %d, stratum %s",
        len(faces),
        topo.genus,
        topo.stratum,
    )
    return surface


def topology(surface: TranslationSurface) -> SurfaceTopology:
    """Genus, cone orders and Euler data; checks Gauss-Bonnet."""
    num_faces = len(surface.faces)
    num_edges = 3 * num_faces // 2
    num_vertices = len(surface.class_angles)
    euler = num_vertices - num_edges + num_faces
    if euler % 2:
        raise RuntimeError(f"odd Euler characteristic {euler}")
    genus = (2 - euler) // 2
    orders = tuple(sorted(p.order for p in surface.cone_points if p.order > 0))
    if sum(orders) != 2 * genus - 2:
        raise RuntimeError(
            f"Gauss-Bonnet violated: sum of orders {sum(orders)} != 2g - 2 = {2 * genus - 2}"
        )
    return SurfaceTopology(genus, orders, num_faces, num_edges, num_vertices)


def area(surface: TranslationSurface) -> float:
    """Flat area."""
    return surface.area


def normalize_area(surface: TranslationSurface) -> TranslationSurface:
    """Rescale all charts so the area is one."""
    scale = 1.0 / math.sqrt(surface.area)
    if scale == 1.0:
        return surface
    return surface.map_linear(GroupElement.diagonal(scale, scale))


def period_coordinates(
        surface: TranslationSurface,
        basis: Sequence[Union[int, Slot]],
) -> List[Vec2]:
    """Holonomy vectors of the designated edges.

    Items are pattern edge labels (int) or explicit (face, edge) slots.
    """
    labels = dict(surface.labels)
    vectors = []
    for item in to_list(basis):
        if isinstance(item, int):
            if item not in labels:
                raise UnknownEdge(f"no edge labelled {item}")
            face, edge = labels[item]
        else:
            face, edge = item
            if not (0 <= face < len(surface.faces) and 0 <= edge < 3):
                raise UnknownEdge(f"no slot {item}")
        vectors.append(surface.edge_vector(face, edge))
    return vectors


def cone_angle_total(surface: TranslationSurface) -> float:
    """Sum of all vertex-class angles."""
    return sum(surface.class_angles.values())


