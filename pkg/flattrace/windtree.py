"""Windtree scenes: billiards in the plane minus a periodic array of obstacles.

The tracer works in one fundamental cell and counts how many cells it has
moved with an integer offset, so reported positions live in the plane.
"""
from array import array
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

from shapely.geometry import Point as ShapelyPoint, Polygon

from ._types import Point
from .billiards import PlanarTrajectory
from .flow import Termination
from .geometry import DEFAULT_TOLERANCE, Tolerance, Vec2
from .util import BadDimensions, InvalidParameter, StartInsideObstacle

LOGGER = logging.getLogger(__name__)

DEFAULT_RECTANGLE = (0.25, 0.25)
DEFAULT_ARM = 0.3


@dataclass(frozen=True)
class WindtreeScene:
    """Obstacle of 4-fold symmetry centered in a rectangular cell.

    The obstacle is the union of the rectangles [-r_i, r_i] x [-h_i, h_i]
    (r increasing, h decreasing) moved to the cell center; m = 0 has no
    obstacle.
    """

    m: int
    cell: Tuple[Vec2, Vec2]
    half_widths: Tuple[float, ...]
    half_heights: Tuple[float, ...]
    tol: Tolerance = field(default=DEFAULT_TOLERANCE, compare=False)

    @property
    def width(self) -> float:
        """Cell width."""
        return self.cell[0].x

    @property
    def height(self) -> float:
        """Cell height."""
        return self.cell[1].y

    @cached_property
    def obstacle(self) -> Tuple[Point, ...]:
        """Counterclockwise obstacle vertices in cell coordinates."""
        if self.m == 0:
            return ()
        r, h = self.half_widths, self.half_heights
        quadrant = [(r[-1], h[-1])]
        for i in range(self.m - 1, 0, -1):
            quadrant.append((r[i - 1], h[i]))
            quadrant.append((r[i - 1], h[i - 1]))
        corners = (
            quadrant
            + [(-x, y) for x, y in reversed(quadrant)]
            + [(-x, -y) for x, y in quadrant]
            + [(x, -y) for x, y in reversed(quadrant)]
        )
        cx, cy = self.width / 2, self.height / 2
        return tuple((cx + x, cy + y) for x, y in corners)

    @cached_property
    def shape(self) -> Optional[Polygon]:
        """Obstacle as a shapely polygon."""
        return Polygon(self.obstacle) if self.obstacle else None

    def corner_counts(self) -> Tuple[int, int]:
        """(convex, reflex) obstacle corners."""
        corners = self.obstacle
        n = len(corners)
        convex = reflex = 0
        for k in range(n):
            ax, ay = corners[k - 1]
            bx, by = corners[k]
            cx, cy = corners[(k + 1) % n]
            turn = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
            if turn > 0:
                convex += 1
            elif turn < 0:
                reflex += 1
        return convex, reflex

    def walls(self):
        """Vertical walls (x, y_lo, y_hi, normal_x, index) and horizontal
        walls (y, x_lo, x_hi, normal_y, index), normals pointing outward."""
        verticals, horizontals = [], []
        corners = self.obstacle
        n = len(corners)
        for k in range(n):
            ax, ay = corners[k]
            bx, by = corners[(k + 1) % n]
            if ax == bx:
                # counterclockwise: going up means the outside is to the right
                verticals.append((ax, min(ay, by), max(ay, by), 1.0 if by > ay else -1.0, k))
            else:
                horizontals.append((ay, min(ax, bx), max(ax, bx), -1.0 if bx > ax else 1.0, k))
        return verticals, horizontals

    def contains(self, x: float, y: float) -> bool:
        """Whether a plane point lies in some closed obstacle copy."""
        if self.shape is None:
            return False
        x -= math.floor(x / self.width) * self.width
        y -= math.floor(y / self.height) * self.height
        return self.shape.buffer(self.tol.eps_len).covers(ShapelyPoint(x, y))

    def default_start(self) -> Vec2:
        """Cell corner, outside every obstacle."""
        return Vec2(0.0, 0.0)


def _cell(params: Dict[str, Any]) -> Tuple[float, float]:
    """Cell width and height from [w, h] or [[w, 0], [0, h]]."""
    cell = params.get("cell", (1.0, 1.0))
    try:
        if len(cell) == 2 and all(isinstance(row, (list, tuple)) for row in cell):
            (w, b), (c, h) = cell
            if b != 0 or c != 0:
                raise BadDimensions("only axis-aligned rectangular cells are supported")
        else:
            w, h = cell
        w, h = float(w), float(h)
    except (TypeError, ValueError) as err:
        if isinstance(err, BadDimensions):
            raise
        raise BadDimensions(f"bad cell {cell!r}") from err
    if not (w > 0 and h > 0):
        raise BadDimensions(f"cell sides must be positive, got {w} x {h}")
    return w, h


def windtree_scene(m: int = 1, params: Optional[Dict[str, Any]] = None) -> WindtreeScene:
    """Windtree scene with an obstacle of 4m convex and 4m - 4 reflex corners.

    Parameters: `cell` ([w, h] or a diagonal period matrix); for m = 1
    `width`, `height` (default 0.25 x 0.25); for m >= 2 the half-extents
    `r` (increasing) and `h` (decreasing), default r_i = 0.3 i/m and
    h_i = 0.3 (m + 1 - i)/m. Obstacle keys may also sit under `obstacle`.
    m = 0 is the empty scene.
    """
    params = dict(params or {})
    obstacle = dict(params.get("obstacle") or {})
    obstacle.update({k: v for k, v in params.items() if k not in ("cell", "obstacle", "m")})
    if int(m) != m or m < 0:
        raise BadDimensions(f"m must be a non-negative integer, got {m}")
    m = int(m)
    w, h = _cell(params)
    if m == 0:
        r, hh = (), ()
    elif m == 1:
        width = float(obstacle.get("width", DEFAULT_RECTANGLE[0]))
        height = float(obstacle.get("height", DEFAULT_RECTANGLE[1]))
        r, hh = (width / 2,), (height / 2,)
    else:
        r = tuple(float(v) for v in obstacle.get("r", [DEFAULT_ARM * i / m for i in range(1, m + 1)]))
        hh = tuple(float(v) for v in obstacle.get("h", [DEFAULT_ARM * (m + 1 - i) / m for i in range(1, m + 1)]))
        if len(r) != m or len(hh) != m:
            raise BadDimensions(f"need {m} half-widths and half-heights")
        if any(b <= a for a, b in zip(r, r[1:])) or any(b >= a for a, b in zip(hh, hh[1:])):
            raise BadDimensions("half-widths must increase and half-heights decrease")
    if any(v <= 0 for v in r + hh):
        raise BadDimensions("obstacle dimensions must be positive")
    if r and (2 * max(r) >= w or 2 * max(hh) >= h):
        raise BadDimensions("obstacle does not fit strictly inside the cell")
    scene = WindtreeScene(m, (Vec2(w, 0.0), Vec2(0.0, h)), r, hh)
    LOGGER.debug("Windtree scene m = %d, corners %s", m, scene.corner_counts())
    return scene


class CellTracer:
    """Billiard flow among the obstacle copies, advanced in increments."""

    def __init__(self, scene: WindtreeScene, start: Vec2, direction: float):
        if scene.contains(start.x, start.y):
            raise StartInsideObstacle(f"start ({start.x}, {start.y}) lies in an obstacle")
        self.width, self.height = scene.width, scene.height
        self.i = int(math.floor(start.x / self.width))
        self.j = int(math.floor(start.y / self.height))
        self.x = start.x - self.i * self.width
        self.y = start.y - self.j * self.height
        self.vx, self.vy = math.cos(direction), math.sin(direction)
        self.length = 0.0
        self.reflections = 0
        self.termination: Optional[Termination] = None
        self.eps = scene.tol.eps_len
        self.verticals, self.horizontals = scene.walls()
        if scene.obstacle:
            xs = [p[0] for p in scene.obstacle]
            ys = [p[1] for p in scene.obstacle]
            self.box = (min(xs), min(ys), max(xs), max(ys))
        else:
            self.box = None

    @property
    def position(self) -> Point:
        """Current point in the plane."""
        return self.x + self.i * self.width, self.y + self.j * self.height

    def run(self, limit: float, xy: array, lengths: Optional[List[float]] = None,
            walls: Optional[List[int]] = None):
        """Advance until total length `limit`, appending reflection points to `xy`."""
        if self.termination is Termination.SINGULAR_HIT:
            return
        x, y, vx, vy = self.x, self.y, self.vx, self.vy
        ci, cj, travelled = self.i, self.j, self.length
        w, h, eps = self.width, self.height, self.eps
        verticals, horizontals, box = self.verticals, self.horizontals, self.box
        inf = math.inf
        while True:
            remaining = limit - travelled
            if remaining <= 0:
                self.termination = Termination.LENGTH_REACHED
                break
            tx = (w - x) / vx if vx > 0 else (-x / vx if vx < 0 else inf)
            ty = (h - y) / vy if vy > 0 else (-y / vy if vy < 0 else inf)
            t_exit = tx if tx < ty else ty
            t_hit = inf
            hit = None
            if box is not None:
                # slab test against the obstacle bounding box
                lo, hi = 0.0, t_exit
                if vx != 0:
                    a, b = (box[0] - eps - x) / vx, (box[2] + eps - x) / vx
                    lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
                elif not box[0] - eps <= x <= box[2] + eps:
                    hi = -1.0
                if vy != 0:
                    a, b = (box[1] - eps - y) / vy, (box[3] + eps - y) / vy
                    lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
                elif not box[1] - eps <= y <= box[3] + eps:
                    hi = -1.0
                if lo <= hi:
                    if vx != 0:
                        for c, y0, y1, normal, k in verticals:
                            if vx * normal >= 0:
                                continue
                            t = (c - x) / vx
                            if eps < t < t_hit:
                                yy = y + t * vy
                                if y0 - eps <= yy <= y1 + eps:
                                    t_hit = t
                                    hit = (0, k, yy, y0, y1)
                    if vy != 0:
                        for c, x0, x1, normal, k in horizontals:
                            if vy * normal >= 0:
                                continue
                            t = (c - y) / vy
                            if eps < t < t_hit:
                                xx = x + t * vx
                                if x0 - eps <= xx <= x1 + eps:
                                    t_hit = t
                                    hit = (1, k, xx, x0, x1)
            if hit is not None and t_hit <= t_exit:
                if t_hit >= remaining:
                    x, y = x + remaining * vx, y + remaining * vy
                    travelled = limit
                    self.termination = Termination.LENGTH_REACHED
                    break
                x, y = x + t_hit * vx, y + t_hit * vy
                travelled += t_hit
                axis, k, along, end0, end1 = hit
                if along - end0 <= eps or end1 - along <= eps:
                    if axis == 0:
                        y = end0 if along - end0 <= eps else end1
                    else:
                        x = end0 if along - end0 <= eps else end1
                    xy.append(x + ci * w)
                    xy.append(y + cj * h)
                    if lengths is not None:
                        lengths.append(travelled)
                    self.termination = Termination.SINGULAR_HIT
                    break
                if axis == 0:
                    vx = -vx
                else:
                    vy = -vy
                self.reflections += 1
                xy.append(x + ci * w)
                xy.append(y + cj * h)
                if lengths is not None:
                    lengths.append(travelled)
                if walls is not None:
                    walls.append(k)
                continue
            if t_exit >= remaining:
                x, y = x + remaining * vx, y + remaining * vy
                travelled = limit
                self.termination = Termination.LENGTH_REACHED
                break
            x, y = x + t_exit * vx, y + t_exit * vy
            travelled += t_exit
            if tx <= ty:
                if vx > 0:
                    x, ci = 0.0, ci + 1
                else:
                    x, ci = w, ci - 1
            if ty <= tx:
                if vy > 0:
                    y, cj = 0.0, cj + 1
                else:
                    y, cj = h, cj - 1
        self.x, self.y, self.vx, self.vy = x, y, vx, vy
        self.i, self.j, self.length = ci, cj, travelled


def windtree_trace(
        scene: WindtreeScene,
        start: Vec2,
        direction: float,
        T: float,
) -> PlanarTrajectory:
    """Billiard flow of length T among the obstacles, positions in the plane."""
    if not T > 0:
        raise InvalidParameter("T must be positive")
    tracer = CellTracer(scene, start, direction)
    xy = array("d")
    lengths: List[float] = []
    walls: List[int] = []
    tracer.run(T, xy, lengths, walls)
    points = [(start.x, start.y)] + list(zip(xy[0::2], xy[1::2]))
    path = PlanarTrajectory(points, [0.0] + lengths, walls, tracer.termination)
    if tracer.termination is not Termination.SINGULAR_HIT:
        path.points.append(tracer.position)
        path.lengths.append(tracer.length)
    LOGGER.debug(
        "Windtree trace ended: %s after %d reflections, length %.6g",
        path.termination.value,
        path.reflections,
        path.total_length,
    )
    return path
