"""Straight-line flow on translation surfaces."""
from dataclasses import dataclass, field
import enum
import logging
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .geometry import Vec2, ray_hit
from .grid import ChartGrid
from .surface import SurfacePoint, TranslationSurface
from .util import InvalidParameter, NoReturn, StartOnVertex

LOGGER = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


class Termination(str, enum.Enum):
    """Why a trajectory stopped."""

    LENGTH_REACHED = "LengthReached"
    CROSSINGS_REACHED = "CrossingsReached"
    SINGULAR_HIT = "SingularHit"
    CLOSED = "Closed"


class Segment(NamedTuple):
    """Straight piece of a trajectory inside one face chart."""

    face: int
    x_in: float
    y_in: float
    x_out: float
    y_out: float

    @property
    def entry(self) -> Vec2:
        """Entry point in the face chart."""
        return Vec2(self.x_in, self.y_in)

    @property
    def exit(self) -> Vec2:
        """Exit point in the face chart."""
        return Vec2(self.x_out, self.y_out)

    @property
    def length(self) -> float:
        """Euclidean length."""
        return math.hypot(self.x_out - self.x_in, self.y_out - self.y_in)


@dataclass
class Trajectory:
    """Straight-line flow path."""

    start: SurfacePoint
    direction: float
    segments: List[Segment] = field(default_factory=list)
    crossing_word: List[int] = field(default_factory=list)
    total_length: float = 0.0
    termination: Optional[Termination] = None
    crossings: int = 0

    @property
    def end(self) -> SurfacePoint:
        """Last point reached."""
        last = self.segments[-1]
        return SurfacePoint(last.face, last.exit)

    def segment_array(self) -> np.ndarray:
        """(n, 5) array of face, x_in, y_in, x_out, y_out."""
        if not self.segments:
            return np.zeros((0, 5))
        return np.asarray(self.segments, dtype=float)

    def truncated(self, length: float) -> "Trajectory":
        """Prefix of the given length."""
        out = Trajectory(self.start, self.direction)
        travelled = 0.0
        for segment in self.segments:
            seg_len = segment.length
            if travelled + seg_len >= length:
                frac = (length - travelled) / seg_len if seg_len > 0 else 0.0
                out.segments.append(Segment(
                    segment.face,
                    segment.x_in,
                    segment.y_in,
                    segment.x_in + frac * (segment.x_out - segment.x_in),
                    segment.y_in + frac * (segment.y_out - segment.y_in),
                ))
                out.total_length = length
                out.termination = Termination.LENGTH_REACHED
                return out
            out.segments.append(segment)
            travelled += seg_len
        out.total_length = travelled
        out.termination = self.termination
        return out


class _Walker:
    """Advance a straight line across faces, one face at a time.

    `entry` is ("edge", e) after entering through edge e, ("vertex", k)
    when sitting on corner k, or None in the interior.
    """

    def __init__(self, surface: TranslationSurface, face, x, y, ux, uy, entry):
        self.surface = surface
        self.faces = surface.faces
        self.offsets = surface.offsets
        self.gluing = surface.gluing
        self.edge_ids = surface.edge_ids
        self.vertex_classes = surface.vertex_classes
        self.singular = surface.singular_classes
        self.eps = surface.tol.eps_len
        self.eps_angle = surface.tol.eps_angle
        self.face, self.x, self.y = face, x, y
        self.ux, self.uy = ux, uy
        self.entry = entry
        self.length = 0.0
        self.crossings = 0
        self.last_edge: Optional[int] = None
        self.termination: Optional[Termination] = None

    def _next_hit(self):
        """(t, edge, s) of the nearest exit from the current face."""
        triangle = self.faces[self.face]
        entry = self.entry
        if entry is None:
            excluded = ()
        elif entry[0] == "edge":
            excluded = (entry[1],)
        else:
            excluded = (entry[1], (entry[1] + 2) % 3)
        for skip in (excluded, ()):
            best = None
            for e in range(3):
                if e in skip:
                    continue
                ax, ay = triangle[e]
                bx, by = triangle[(e + 1) % 3]
                hit = ray_hit(self.x, self.y, self.ux, self.uy, ax, ay, bx, by, self.eps)
                if hit is not None and (best is None or hit[0] < best[0]):
                    best = (hit[0], e, hit[1])
            if best is not None:
                return best
        raise RuntimeError(
            f"ray from ({self.x}, {self.y}) escaped face {self.face}"
        )

    def step(self, max_length: float) -> Tuple[float, float, float, float, int, tuple]:
        """Move to the next face boundary or until max_length in total.

        Returns (x_in, y_in, x_out, y_out, face, event) where event is
        ("edge", e), ("vertex", k) or ("end",).
        """
        face = self.face
        x0, y0 = self.x, self.y
        t, e, s = self._next_hit()
        remaining = max_length - self.length
        if t >= remaining:
            x1, y1 = x0 + remaining * self.ux, y0 + remaining * self.uy
            self.x, self.y = x1, y1
            self.length = max_length
            self.entry = None
            self.termination = Termination.LENGTH_REACHED
            return x0, y0, x1, y1, face, ("end",)
        triangle = self.faces[face]
        ax, ay = triangle[e]
        bx, by = triangle[(e + 1) % 3]
        edge_len = math.hypot(bx - ax, by - ay)
        self.length += t
        if s * edge_len <= self.eps:
            corner = e
        elif (1.0 - s) * edge_len <= self.eps:
            corner = (e + 1) % 3
        else:
            corner = None
        if corner is not None:
            x1, y1 = triangle[corner]
            if self.vertex_classes[(face, corner)] in self.singular:
                self.x, self.y = x1, y1
                self.termination = Termination.SINGULAR_HIT
                return x0, y0, x1, y1, face, ("vertex", corner)
            self._pass_vertex(face, corner)
            self.crossings += 1
            self.last_edge = None
            return x0, y0, x1, y1, face, ("vertex", corner)
        x1, y1 = x0 + t * self.ux, y0 + t * self.uy
        g, l = self.gluing[face][e]
        ox, oy = self.offsets[face][e]
        self.face, self.x, self.y = g, x1 + ox, y1 + oy
        self.entry = ("edge", l)
        self.crossings += 1
        self.last_edge = self.edge_ids[(face, e)]
        return x0, y0, x1, y1, face, ("edge", e)

    def _sector_angle(self, face, k, vx, vy) -> float:
        """Counterclockwise angle from edge k of the face to (vx, vy)."""
        triangle = self.faces[face]
        ax = triangle[(k + 1) % 3][0] - triangle[k][0]
        ay = triangle[(k + 1) % 3][1] - triangle[k][1]
        angle = math.atan2(ax * vy - ay * vx, ax * vx + ay * vy)
        if angle < -self.eps_angle:
            angle += TWO_PI
        return max(angle, 0.0)

    def _rotate_to_sector(self, face, k, remaining):
        """Walk counterclockwise around a vertex until `remaining` angle fits a corner."""
        surface = self.surface
        for _ in range(3 * len(self.faces) + 1):
            alpha = surface.corner_angle(face, k)
            if remaining <= alpha - self.eps_angle:
                return face, k
            remaining -= alpha
            g, l = self.gluing[face][(k + 2) % 3]
            face, k = g, l
            if abs(remaining) <= self.eps_angle:
                return face, k
        raise RuntimeError("vertex sector walk did not terminate")

    def _pass_vertex(self, face, corner):
        """Continue straight through a regular vertex."""
        incoming = self._sector_angle(face, corner, -self.ux, -self.uy)
        g, k = self._rotate_to_sector(face, corner, incoming + math.pi)
        self.face = g
        self.x, self.y = self.faces[g][k]
        self.entry = ("vertex", k)

    def place_at_vertex(self, face, corner):
        """Start from a vertex, in the first sector containing the direction."""
        remaining = self._sector_angle(face, corner, self.ux, self.uy)
        g, k = self._rotate_to_sector(face, corner, remaining)
        self.face = g
        self.x, self.y = self.faces[g][k]
        self.entry = ("vertex", k)


def _vertex_at(surface: TranslationSurface, face: int, x: float, y: float) -> Optional[int]:
    """Corner of the face within eps_len of (x, y)."""
    for k, (vx, vy) in enumerate(surface.faces[face]):
        if math.hypot(x - vx, y - vy) <= surface.tol.eps_len:
            return k
    return None


def _start_walker(
        surface: TranslationSurface,
        start: SurfacePoint,
        ux: float,
        uy: float,
        allow_vertex: bool = False,
) -> _Walker:
    """Walker placed at the start, in the face the ray leaves into."""
    face, x, y = start.face, start.pos.x, start.pos.y
    if not surface.contains(face, x, y):
        raise InvalidParameter(f"start ({x}, {y}) is outside face {face}")
    walker = _Walker(surface, face, x, y, ux, uy, None)
    corner = _vertex_at(surface, face, x, y)
    if corner is not None:
        if not allow_vertex:
            raise StartOnVertex(f"start ({x}, {y}) is vertex {corner} of face {face}")
        walker.place_at_vertex(face, corner)
        return walker
    eps = surface.tol.eps_len
    triangle = surface.faces[face]
    for e in range(3):
        ax, ay = triangle[e]
        bx, by = triangle[(e + 1) % 3]
        ex, ey = bx - ax, by - ay
        edge_len = math.hypot(ex, ey)
        if abs(ex * (y - ay) - ey * (x - ax)) > eps * edge_len:
            continue
        cross = ex * uy - ey * ux
        inward = cross > surface.tol.eps_angle * edge_len or (
            abs(cross) <= surface.tol.eps_angle * edge_len and ex * ux + ey * uy > 0
        )
        if inward:
            walker.entry = ("edge", e)
        else:
            g, l = surface.gluing[face][e]
            ox, oy = surface.offsets[face][e]
            walker.face, walker.x, walker.y = g, x + ox, y + oy
            walker.entry = ("edge", l)
        break
    return walker


def trace(
        surface: TranslationSurface,
        start: SurfacePoint,
        direction: float,
        max_length: Optional[float] = None,
        max_crossings: Optional[int] = None,
        detect_closure: bool = True,
        stop_at_vertices: bool = False,
) -> Trajectory:
    """Trace the straight-line flow from start in the given direction (radians).

    Stops at max_length, after max_crossings face changes, on reaching a
    cone point (SingularHit), or when the orbit closes. With
    stop_at_vertices, marked points also end the trace as SingularHit.
    """
    if max_length is None and max_crossings is None:
        raise InvalidParameter("give max_length or max_crossings")
    length_budget = math.inf if max_length is None else float(max_length)
    crossing_budget = math.inf if max_crossings is None else int(max_crossings)
    if length_budget <= 0 or crossing_budget <= 0:
        raise InvalidParameter("trace limits must be positive")
    ux, uy = math.cos(direction), math.sin(direction)
    walker = _start_walker(surface, start, ux, uy)
    if stop_at_vertices:
        walker.singular = frozenset(surface.vertex_classes.values())
    trajectory = Trajectory(SurfacePoint(walker.face, Vec2(walker.x, walker.y)), direction)
    home_face, hx, hy = walker.face, walker.x, walker.y
    eps = surface.tol.eps_len
    first_event = None
    segments = trajectory.segments
    word = trajectory.crossing_word
    while True:
        before = walker.length
        x0, y0, x1, y1, face, event = walker.step(length_budget)
        if first_event is None:
            first_event = event
        elif detect_closure and face == home_face and event == first_event:
            # start on this segment: closed orbit
            along = (hx - x0) * ux + (hy - y0) * uy
            off = abs((hx - x0) * uy - (hy - y0) * ux)
            seg_len = math.hypot(x1 - x0, y1 - y0)
            if off <= eps and -eps <= along <= seg_len + eps:
                along = max(along, 0.0)
                segments.append(Segment(face, x0, y0, x0 + along * ux, y0 + along * uy))
                trajectory.total_length = before + along
                trajectory.termination = Termination.CLOSED
                trajectory.crossings = walker.crossings
                return trajectory
        segments.append(Segment(face, x0, y0, x1, y1))
        if event[0] == "edge":
            word.append(walker.last_edge)
        if walker.termination is not None:
            break
        if walker.crossings >= crossing_budget:
            walker.termination = Termination.CROSSINGS_REACHED
            break
    trajectory.total_length = walker.length
    trajectory.termination = walker.termination
    trajectory.crossings = walker.crossings
    LOGGER.debug(
        "Trace ended: %s after %d crossings, length %.6g",
        trajectory.termination.value,
        trajectory.crossings,
        trajectory.total_length,
    )
    return trajectory


def detect_periodic(
        surface: TranslationSurface,
        start: SurfacePoint,
        direction: float,
        max_crossings: int = 100_000,
) -> Optional[Tuple[float, List[int]]]:
    """Period length and crossing word if the orbit closes within the budget.

    A geometric closure is confirmed combinatorially: two periods traced
    from inside the first segment must spell the same edge word twice.
    """
    trajectory = trace(surface, start, direction, max_crossings=max_crossings)
    if trajectory.termination is not Termination.CLOSED:
        return None
    period = trajectory.total_length
    first = trajectory.segments[0]
    middle = SurfacePoint(first.face, Vec2((first.x_in + first.x_out) / 2, (first.y_in + first.y_out) / 2))
    doubled = trace(surface, middle, direction, max_length=2 * period, detect_closure=False)
    word = doubled.crossing_word
    half = len(word) // 2
    if doubled.termination is not Termination.LENGTH_REACHED or len(word) % 2 or word[:half] != word[half:]:
        LOGGER.warning("Closure at length %.6g not confirmed by the crossing word", period)
        return None
    return period, list(trajectory.crossing_word)


@dataclass(frozen=True)
class DiscrepancyReport:
    """Visit-length measure against the area measure on a chart grid.

    `discrepancy` is the largest |visit(A) - area(A)| over unions A of
    cells; `max_cell_deviation` is the largest single-cell deviation. Cells
    live in face charts, so the numbers depend on the triangulation.
    """

    grid_n: int
    cells: Tuple[Tuple[int, int, int], ...]
    visit_fractions: Tuple[float, ...]
    area_fractions: Tuple[float, ...]
    discrepancy: float
    max_cell_deviation: float

    def as_dict(self) -> dict:
        """JSON-ready summary."""
        return {
            "grid_n": self.grid_n,
            "num_cells": len(self.cells),
            "discrepancy": self.discrepancy,
            "max_cell_deviation": self.max_cell_deviation,
        }


def discrepancy(
        trajectory: Trajectory,
        surface: TranslationSurface,
        grid_n: int = 10,
        grid: Optional[ChartGrid] = None,
) -> DiscrepancyReport:
    """Compare time spent per grid cell with the cell's share of area."""
    if not trajectory.total_length > 0:
        raise InvalidParameter("trajectory has zero length")
    if grid is None:
        grid = ChartGrid.for_surface(surface, grid_n)
    grid_n = grid.grid_n
    lengths = grid.visit_lengths(trajectory.segment_array())
    visits = lengths / lengths.sum()
    areas = grid.cell_areas / grid.cell_areas.sum()
    deviation = visits - areas
    return DiscrepancyReport(
        grid_n,
        tuple(grid.cell_keys),
        tuple(visits.tolist()),
        tuple(areas.tolist()),
        float(0.5 * np.abs(deviation).sum()),
        float(np.abs(deviation).max()),
    )


@dataclass(frozen=True)
class ReturnSample:
    """One sample of the first-return map; `param_out` is None when singular."""

    param_in: float
    param_out: Optional[float]
    length: Optional[float]
    singular: bool


def _develop(surface: TranslationSurface, base: SurfacePoint, vector: Vec2) -> List[Tuple]:
    """Pieces (face, ax, ay, bx, by, s0, s1) of a straight segment laid on the surface."""
    length = vector.norm()
    if length <= surface.tol.eps_len:
        raise InvalidParameter("transversal has zero length")
    ux, uy = vector.x / length, vector.y / length
    walker = _start_walker(surface, base, ux, uy, allow_vertex=True)
    pieces = []
    while walker.termination is None:
        before = walker.length
        x0, y0, x1, y1, face, _ = walker.step(length)
        pieces.append((face, x0, y0, x1, y1, before / length, walker.length / length))
        if walker.termination is Termination.SINGULAR_HIT and walker.length < length - surface.tol.eps_len:
            raise InvalidParameter("transversal runs into a cone point")
    return pieces


def _crossing_param(pieces_by_face, face, x0, y0, x1, y1, ux, uy, eps, skip_start):
    """Smallest (t, s) where the segment meets the transversal."""
    best = None
    seg_len = math.hypot(x1 - x0, y1 - y0)
    for ax, ay, bx, by, s0, s1 in pieces_by_face.get(face, ()):
        ex, ey = bx - ax, by - ay
        piece_len = math.hypot(ex, ey)
        if piece_len <= eps:
            continue
        # entry point lying on the piece
        if not skip_start:
            off = abs(ex * (y0 - ay) - ey * (x0 - ax)) / piece_len
            along = ((x0 - ax) * ex + (y0 - ay) * ey) / piece_len
            if off <= eps and -eps <= along <= piece_len + eps:
                frac = min(1.0, max(0.0, along / piece_len))
                candidate = (0.0, s0 + frac * (s1 - s0))
                if best is None or candidate[0] < best[0]:
                    best = candidate
                continue
        hit = ray_hit(x0, y0, ux, uy, ax, ay, bx, by, eps)
        if hit is not None and hit[0] <= seg_len + eps:
            candidate = (hit[0], s0 + hit[1] * (s1 - s0))
            if best is None or candidate[0] < best[0]:
                best = candidate
    return best


def first_return(
        surface: TranslationSurface,
        transversal: Tuple[SurfacePoint, Vec2],
        direction: float,
        sample_points: int = 100,
        max_crossings: int = 100_000,
) -> List[ReturnSample]:
    """Numerical first-return map of the flow to a transversal segment.

    Sample i starts at transversal parameter (i + 1/2)/n; the result holds
    the parameter where its orbit next meets the transversal.
    """
    base, vector = transversal
    ux, uy = math.cos(direction), math.sin(direction)
    if abs(vector.x * uy - vector.y * ux) <= surface.tol.eps_angle * vector.norm():
        raise InvalidParameter("transversal is parallel to the flow")
    pieces = _develop(surface, base, vector)
    pieces_by_face = {}
    for face, ax, ay, bx, by, s0, s1 in pieces:
        pieces_by_face.setdefault(face, []).append((ax, ay, bx, by, s0, s1))
    eps = surface.tol.eps_len
    samples = []
    for i in range(sample_points):
        param = (i + 0.5) / sample_points
        face, ax, ay, bx, by, s0, s1 = next(
            piece for piece in pieces if piece[5] <= param <= piece[6]
        )
        frac = (param - s0) / (s1 - s0)
        start = SurfacePoint(face, Vec2(ax + frac * (bx - ax), ay + frac * (by - ay)))
        walker = _start_walker(surface, start, ux, uy)
        result = None
        while result is None:
            before = walker.length
            x0, y0, x1, y1, face, _ = walker.step(math.inf)
            found = _crossing_param(
                pieces_by_face, face, x0, y0, x1, y1, ux, uy, eps,
                skip_start=before <= eps,
            )
            if found is not None and before + found[0] > eps:
                result = ReturnSample(param, found[1], before + found[0], False)
            elif walker.termination is Termination.SINGULAR_HIT:
                result = ReturnSample(param, None, None, True)
            elif walker.crossings >= max_crossings:
                raise NoReturn(f"sample {param} did not return in {max_crossings} crossings")
        samples.append(result)
    return samples
