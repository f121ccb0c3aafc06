"""GL(2,R) action, Teichmuller flow with Delaunay renormalization, systoles."""
from dataclasses import dataclass
import heapq
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from ._types import Slot
from .geometry import GroupElement, Vec2, incircle, orient_value
from .surface import SurfacePoint, TranslationSurface
from .util import FlipLimitExceeded, InvalidParameter, SearchBudgetExceeded

LOGGER = logging.getLogger(__name__)

FLIP_BUDGET = 10 ** 6
SEARCH_BUDGET = 10 ** 6
MAX_FLOW_STEP = 0.5


def apply_matrix(surface: TranslationSurface, M: GroupElement) -> TranslationSurface:
    """g·S: apply M to every chart, keeping the gluing combinatorics."""
    return surface.map_linear(M)


def rotate(surface: TranslationSurface, theta: float) -> TranslationSurface:
    """Rotate the surface counterclockwise by theta."""
    return apply_matrix(surface, GroupElement.rotation(theta))


def horocycle_flow(surface: TranslationSurface, s: float) -> TranslationSurface:
    """Apply the unipotent (1 s; 0 1)."""
    return apply_matrix(surface, GroupElement.horocycle(s))


def geodesic_flow(
        surface: TranslationSurface,
        t: float,
        renormalize: bool = True,
) -> TranslationSurface:
    """Apply diag(e^t, e^-t), optionally renormalizing by Delaunay flips.

    With renormalization the flow advances in steps of at most 0.5 with a
    normalization after each, so charts never degenerate badly.
    """
    if not renormalize:
        return apply_matrix(surface, GroupElement.teichmuller(t))
    steps = max(1, int(math.ceil(abs(t) / MAX_FLOW_STEP)))
    step = GroupElement.teichmuller(t / steps)
    current = surface
    for _ in range(steps):
        current = delaunay_normalize(apply_matrix(current, step))
    return current


def _angle(triangle, k) -> float:
    """Interior angle at corner k of a counterclockwise triangle."""
    px, py = triangle[k]
    ax, ay = triangle[(k + 1) % 3][0] - px, triangle[(k + 1) % 3][1] - py
    bx, by = triangle[(k + 2) % 3][0] - px, triangle[(k + 2) % 3][1] - py
    return math.atan2(abs(ax * by - ay * bx), ax * bx + ay * by)


class _Flipper:
    """Mutable triangulation for edge flips."""

    def __init__(self, surface: TranslationSurface):
        self.surface = surface
        self.faces = [list(t) for t in surface.faces]
        self.gluing = [list(row) for row in surface.gluing]
        self.labels: Dict[int, Slot] = dict(surface.labels)
        self.eps = surface.tol.eps_len
        self.eps_angle = surface.tol.eps_angle
        self.log: List[Tuple] = []

    def violation(self, f: int, e: int) -> float:
        """Sum of the two angles opposite the edge, minus pi."""
        g, l = self.gluing[f][e]
        return (
            _angle(self.faces[f], (e + 2) % 3)
            + _angle(self.faces[g], (l + 2) % 3)
            - math.pi
        )

    def quad(self, f: int, e: int):
        """Quadrilateral A, B, C, D around edge (f, e) = AB, developed in f's chart."""
        g, l = self.gluing[f][e]
        A = self.faces[f][e]
        B = self.faces[f][(e + 1) % 3]
        C = self.faces[f][(e + 2) % 3]
        qa = self.faces[g][(l + 1) % 3]
        qd = self.faces[g][(l + 2) % 3]
        D = (qd[0] + A[0] - qa[0], qd[1] + A[1] - qa[1])
        return g, l, A, B, C, D, (A[0] - qa[0], A[1] - qa[1])

    def convex(self, f: int, e: int) -> bool:
        """Whether the quadrilateral around an edge is strictly convex."""
        _, _, A, B, C, D, _ = self.quad(f, e)
        return (
            orient_value(*A, *D, *C, self.eps) > 0
            and orient_value(*D, *B, *C, self.eps) > 0
        )

    def flip(self, f: int, e: int) -> List[Slot]:
        """Replace the diagonal (f, e) of a convex quadrilateral by the other one.

        Returns the slots whose Delaunay status may have changed.
        """
        g, l, A, B, C, D, offset = self.quad(f, e)
        moved = {
            (f, (e + 1) % 3): (g, 1),
            (f, (e + 2) % 3): (f, 2),
            (g, (l + 1) % 3): (f, 0),
            (g, (l + 2) % 3): (g, 0),
        }
        partners = {slot: self.gluing[slot[0]][slot[1]] for slot in moved}
        self.faces[f] = [A, D, C]
        self.faces[g] = [D, B, C]
        self.log.append((f, g, offset, (A, D, C)))
        for old, new in moved.items():
            partner = partners[old]
            target = moved.get(partner, partner)
            self.gluing[new[0]][new[1]] = target
            if partner not in moved:
                self.gluing[target[0]][target[1]] = new
        self.gluing[f][1] = (g, 2)
        self.gluing[g][2] = (f, 1)
        labels = {}
        for label, slot in self.labels.items():
            if slot in moved:
                labels[label] = moved[slot]
            elif slot not in ((f, e), (g, l)):
                labels[label] = slot
        self.labels = labels
        return list(moved.values()) + [(f, 1)]

    def surface_out(self) -> TranslationSurface:
        """Freeze into a surface."""
        return self.surface.with_faces(
            self.faces,
            self.gluing,
            sorted(self.labels.items()),
        )


@dataclass(frozen=True)
class ChartMap:
    """Carries chart points through a sequence of edge flips.

    Each flip (f, g, offset, T) moved face g into f's chart by `offset`
    and left triangle T in face f.
    """

    flips: Tuple[Tuple, ...] = ()
    eps_len: float = 1e-9

    def __call__(self, point: SurfacePoint) -> SurfacePoint:
        """Same point in the normalized surface's charts."""
        face, x, y = point.face, point.pos.x, point.pos.y
        for f, g, (ox, oy), triangle in self.flips:
            if face == g:
                x, y = x + ox, y + oy
            elif face != f:
                continue
            inside = all(
                orient_value(*triangle[k], *triangle[(k + 1) % 3], x, y, self.eps_len) >= 0
                for k in range(3)
            )
            face = f if inside else g
        return SurfacePoint(face, Vec2(x, y))


def delaunay_normalize_with_map(
        surface: TranslationSurface,
        max_flips: int = FLIP_BUDGET,
) -> Tuple[TranslationSurface, ChartMap]:
    """Flip edges, worst violation first, until the triangulation is Delaunay.

    The flat metric is untouched: only the triangulation changes. The
    chart map sends points of the input to the same points of the output.
    """
    flipper = _Flipper(surface)
    threshold = flipper.eps_angle
    heap: List[Tuple[float, Slot]] = []

    def push_all():
        """Queue every violating flippable edge once."""
        for f in range(len(flipper.faces)):
            for e in range(3):
                if (f, e) > tuple(flipper.gluing[f][e]):
                    continue
                value = flipper.violation(f, e)
                if value > threshold and flipper.convex(f, e):
                    heapq.heappush(heap, (-value, (f, e)))

    push_all()
    while heap:
        while heap:
            stored, (f, e) = heapq.heappop(heap)
            value = flipper.violation(f, e)
            if value <= threshold:
                continue
            if abs(value + stored) > 1e-15:
                heapq.heappush(heap, (-value, (f, e)))
                continue
            if not flipper.convex(f, e):
                LOGGER.debug("Skipping non-convex flip at %s", (f, e))
                continue
            if len(flipper.log) >= max_flips:
                raise FlipLimitExceeded(f"more than {max_flips} flips")
            for slot in flipper.flip(f, e):
                value = flipper.violation(*slot)
                if value > threshold:
                    heapq.heappush(heap, (-value, slot))
        push_all()
    chart_map = ChartMap(tuple(flipper.log), flipper.eps)
    if not flipper.log:
        return surface, chart_map
    if len(flipper.log) > max_flips // 2:
        LOGGER.warning("Delaunay normalization used %d flips of %d allowed", len(flipper.log), max_flips)
    else:
        LOGGER.debug("Delaunay normalization used %d flips", len(flipper.log))
    return flipper.surface_out(), chart_map


def delaunay_normalize(
        surface: TranslationSurface,
        max_flips: int = FLIP_BUDGET,
) -> TranslationSurface:
    """Delaunay triangulation of the same flat surface."""
    return delaunay_normalize_with_map(surface, max_flips)[0]


def is_delaunay(surface: TranslationSurface) -> bool:
    """Every edge passes the empty-circumcircle test in its developed quadrilateral."""
    flipper = _Flipper(surface)
    for f in range(len(surface.faces)):
        for e in range(3):
            _, _, A, B, C, D, _ = flipper.quad(f, e)
            if incircle(Vec2(*A), Vec2(*B), Vec2(*C), Vec2(*D), surface.tol) > 0:
                return False
    return True


def systole_proxy(surface: TranslationSurface) -> float:
    """Shortest edge of the Delaunay triangulation (= shortest saddle connection)."""
    normalized = delaunay_normalize(surface)
    return min(
        normalized.edge_vector(f, e).norm()
        for f in range(len(normalized.faces))
        for e in range(3)
    )


@dataclass(frozen=True)
class SaddleConnection:
    """Straight segment between vertex classes with no vertex inside."""

    holonomy: Vec2
    endpoints: Tuple[int, int]
    crossing_word: Tuple[int, ...]

    @property
    def length(self) -> float:
        """Length of the holonomy vector."""
        return self.holonomy.norm()


def _canonical(hx, hy, endpoints, word, eps):
    """Orientation-independent form: x > 0, or x = 0 and y > 0."""
    if hx < -eps or (abs(hx) <= eps and hy < 0):
        return -hx, -hy, (endpoints[1], endpoints[0]), tuple(reversed(word))
    return hx, hy, endpoints, tuple(word)


def _segment_distance(px, py, ax, ay, bx, by) -> float:
    """Distance from p to segment ab."""
    ex, ey = bx - ax, by - ay
    denom = ex * ex + ey * ey
    t = 0.0 if denom == 0 else max(0.0, min(1.0, ((px - ax) * ex + (py - ay) * ey) / denom))
    return math.hypot(px - ax - t * ex, py - ay - t * ey)


def saddle_connections(
        surface: TranslationSurface,
        L: float,
        max_triangles: int = SEARCH_BUDGET,
) -> List[SaddleConnection]:
    """All saddle connections of length at most L, each once up to orientation.

    Face charts are developed outward from every corner within its
    visibility wedge until the wedge's far edge is farther than L.
    """
    if not L > 0:
        raise InvalidParameter("L must be positive")
    eps = surface.tol.eps_len
    faces = surface.faces
    classes = surface.vertex_classes
    edge_ids = surface.edge_ids
    found = {}
    developed = 0

    def record(vx, vy, rx, ry, start_class, end_class, word):
        hx, hy, ends, canon = _canonical(rx - vx, ry - vy, (start_class, end_class), word, eps)
        key = (round(hx / eps) if eps else hx, round(hy / eps) if eps else hy, ends, canon)
        if key not in found:
            found[key] = SaddleConnection(Vec2(hx, hy), ends, canon)

    for f in range(len(faces)):
        for k in range(3):
            vx, vy = faces[f][k]
            start_class = classes[(f, k)]
            nx, ny = faces[f][(k + 1) % 3]
            if math.hypot(nx - vx, ny - vy) <= L + eps:
                record(vx, vy, nx, ny, start_class, classes[(f, (k + 1) % 3)], [edge_ids[(f, k)]])
            # (face, edge, X, Y, right direction, left direction, word)
            px, py = faces[f][(k + 2) % 3]
            stack = [(
                f, (k + 1) % 3, (nx, ny), (px, py),
                (nx - vx, ny - vy), (px - vx, py - vy), [],
            )]
            while stack:
                face, edge, X, Y, right, left, word = stack.pop()
                if _segment_distance(vx, vy, *X, *Y) > L + eps:
                    continue
                developed += 1
                if developed > max_triangles:
                    raise SearchBudgetExceeded(f"developed more than {max_triangles} triangles")
                g, l = surface.gluing[face][edge]
                qa = faces[g][(l + 1) % 3]
                qr = faces[g][(l + 2) % 3]
                rx, ry = qr[0] + X[0] - qa[0], qr[1] + X[1] - qa[1]
                word = word + [edge_ids[(face, edge)]]
                right_side = orient_value(vx, vy, vx + right[0], vy + right[1], rx, ry, eps)
                left_side = orient_value(vx, vy, vx + left[0], vy + left[1], rx, ry, eps)
                R = (rx, ry)
                ray = (rx - vx, ry - vy)
                if right_side <= 0:
                    stack.append((g, (l + 2) % 3, R, Y, right, left, word))
                elif left_side >= 0:
                    stack.append((g, (l + 1) % 3, X, R, right, left, word))
                else:
                    if math.hypot(*ray) <= L + eps:
                        record(vx, vy, rx, ry, start_class, classes[(g, (l + 2) % 3)], word)
                    stack.append((g, (l + 1) % 3, X, R, right, ray, word))
                    stack.append((g, (l + 2) % 3, R, Y, ray, left, word))
    connections = sorted(found.values(), key=lambda sc: (sc.length, sc.holonomy.x, sc.holonomy.y))
    LOGGER.debug(
        "Found %d saddle connections of length <= %g after developing %d triangles",
        len(connections),
        L,
        developed,
    )
    return connections


@dataclass(frozen=True)
class DivergenceProfile:
    """Systole proxy sampled along the renormalized Teichmuller flow."""

    samples: Tuple[Tuple[float, float], ...]

    @property
    def times(self) -> np.ndarray:
        """Sample times."""
        return np.array([t for t, _ in self.samples])

    @property
    def systoles(self) -> np.ndarray:
        """Systole at each sample time."""
        return np.array([s for _, s in self.samples])

    def log_slope(self, t_min: Optional[float] = None, t_max: Optional[float] = None) -> float:
        """Least-squares slope of log(systole) against t over a window."""
        t = self.times
        mask = np.ones(len(t), dtype=bool)
        if t_min is not None:
            mask &= t >= t_min - 1e-12
        if t_max is not None:
            mask &= t <= t_max + 1e-12
        if mask.sum() < 2:
            raise InvalidParameter("need at least two samples in the window")
        return float(stats.linregress(t[mask], np.log(self.systoles[mask])).slope)

    @property
    def slope(self) -> float:
        """Slope over the whole profile."""
        return self.log_slope()


def divergence_profile(
        surface: TranslationSurface,
        t_max: float,
        dt: float = 0.5,
) -> DivergenceProfile:
    """Systole proxy at t = 0, dt, ..., t_max along the renormalized flow."""
    if not dt > 0:
        raise InvalidParameter("dt must be positive")
    if t_max < 0:
        raise InvalidParameter("t_max must be non-negative")
    count = int(math.floor(t_max / dt + 1e-9))
    current = delaunay_normalize(surface)
    samples = [(0.0, systole_proxy(current))]
    for step in range(1, count + 1):
        current = geodesic_flow(current, dt, renormalize=True)
        samples.append((step * dt, systole_proxy(current)))
    LOGGER.debug("Divergence profile: %d samples up to t = %g", len(samples), count * dt)
    return DivergenceProfile(tuple(samples))
