"""Planar primitives: vectors, matrices and tolerance-snapped predicates.

The float-level helpers (`orient_value`, `ray_hit`) are what the tracers
call in their inner loops; the public predicates wrap them for `Vec2`.
"""
from dataclasses import dataclass
import math
from typing import Optional, Tuple

from .util import DegenerateSegment, DegenerateTriangle, InvalidParameter, SingularMatrix

DET_TOLERANCE = 1e-12
_EVEN_ORDERS = ([0, 1, 2], [1, 2, 0], [2, 0, 1])


@dataclass(frozen=True)
class Tolerance:
    """Absolute length and angle tolerances."""

    eps_len: float = 1e-9
    eps_angle: float = 1e-9

    def __post_init__(self):
        """Validate."""
        if not (self.eps_len > 0 and self.eps_angle > 0):
            raise InvalidParameter("tolerances must be strictly positive")


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class Vec2:
    """Planar vector in flat-metric length units."""

    x: float
    y: float

    def __post_init__(self):
        """Reject non-finite components."""
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameter(f"non-finite vector ({self.x}, {self.y})")

    @classmethod
    def polar(cls, angle: float, length: float = 1.0) -> "Vec2":
        """Vector of given length at given angle (radians)."""
        return cls(length * math.cos(angle), length * math.sin(angle))

    def __add__(self, other: "Vec2") -> "Vec2":
        """Sum."""
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        """Difference."""
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "Vec2":
        """Opposite vector."""
        return Vec2(-self.x, -self.y)

    def __mul__(self, scalar: float) -> "Vec2":
        """Scalar multiple."""
        return Vec2(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        """Dot product."""
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        """z-component of the cross product."""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        """Euclidean length."""
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        """Polar angle in (-pi, pi]."""
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> Tuple[float, float]:
        """Plain tuple."""
        return (self.x, self.y)


@dataclass(frozen=True)
class GroupElement:
    """Invertible 2x2 real matrix (a b; c d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        """Reject singular matrices."""
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c, self.d)):
            raise InvalidParameter("non-finite matrix entry")
        if abs(self.det) <= DET_TOLERANCE:
            raise SingularMatrix(f"det = {self.det!r}")

    @property
    def det(self) -> float:
        """Determinant."""
        return self.a * self.d - self.b * self.c

    @classmethod
    def identity(cls) -> "GroupElement":
        """Identity matrix."""
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diagonal(cls, x: float, y: float) -> "GroupElement":
        """diag(x, y)."""
        return cls(x, 0.0, 0.0, y)

    @classmethod
    def rotation(cls, theta: float) -> "GroupElement":
        """Counterclockwise rotation by theta."""
        cos, sin = math.cos(theta), math.sin(theta)
        return cls(cos, -sin, sin, cos)

    @classmethod
    def teichmuller(cls, t: float) -> "GroupElement":
        """diag(e^t, e^-t): expand horizontally, contract vertically."""
        return cls.diagonal(math.exp(t), math.exp(-t))

    @classmethod
    def horocycle(cls, s: float) -> "GroupElement":
        """Upper unipotent (1 s; 0 1)."""
        return cls(1.0, s, 0.0, 1.0)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        """Matrix product."""
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "GroupElement":
        """Matrix inverse."""
        det = self.det
        return GroupElement(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def apply_xy(self, x: float, y: float) -> Tuple[float, float]:
        """Matrix-vector product on raw coordinates."""
        return (self.a * x + self.b * y, self.c * x + self.d * y)


def apply(M: GroupElement, v: Vec2) -> Vec2:
    """Matrix-vector product."""
    return Vec2(*M.apply_xy(v.x, v.y))


def orient_value(px, py, qx, qy, rx, ry, eps_len: float) -> int:
    """Sign of (q-p)x(r-p), zero when the triple is collinear up to eps_len.

    The cross product is evaluated on the lexicographically sorted triple
    and the threshold is scaled by the longest side, so the result is
    exactly antisymmetric under any swap of two points.
    """
    points = ((px, py), (qx, qy), (rx, ry))
    order = sorted(range(3), key=points.__getitem__)
    parity = 1 if order in _EVEN_ORDERS else -1
    (ax, ay), (bx, by), (cx, cy) = (points[i] for i in order)
    ux, uy = bx - ax, by - ay
    vx, vy = cx - ax, cy - ay
    cross = ux * vy - uy * vx
    scale = max(math.hypot(ux, uy), math.hypot(vx, vy), math.hypot(cx - bx, cy - by))
    if abs(cross) <= eps_len * scale:
        return 0
    return parity if cross > 0 else -parity


def orient(p: Vec2, q: Vec2, r: Vec2, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    """Orientation of the triple: +1 counterclockwise, -1 clockwise, 0 collinear."""
    return orient_value(p.x, p.y, q.x, q.y, r.x, r.y, tol.eps_len)


def ray_hit(ox, oy, dx, dy, ax, ay, bx, by, eps_len: float) -> Optional[Tuple[float, float]]:
    """Ray/segment intersection on raw coordinates.

    Returns (t, s) with o + t·d = a + s·(b - a), t > eps_len, s clamped to
    [0, 1] when within eps_len of the segment; None otherwise. Parallel
    rays never hit.
    """
    ex, ey = bx - ax, by - ay
    length = math.hypot(ex, ey)
    denom = dx * ey - dy * ex
    if abs(denom) <= 1e-15 * max(length, 1.0):
        return None
    wx, wy = ax - ox, ay - oy
    t = (wx * ey - wy * ex) / denom
    if t <= eps_len:
        return None
    s = (wx * dy - wy * dx) / denom
    slack = eps_len / length
    if s < -slack or s > 1.0 + slack:
        return None
    return t, min(1.0, max(0.0, s))


def ray_segment_intersect(
        origin: Vec2,
        direction: Vec2,
        seg: Tuple[Vec2, Vec2],
        tol: Tolerance = DEFAULT_TOLERANCE,
) -> Optional[Tuple[float, float]]:
    """Intersect a ray with a segment.

    Returns (t, s) where t >= 0 is the ray parameter and s in [0, 1] the
    segment parameter, or None.
    """
    start, end = seg
    if (end - start).norm() <= tol.eps_len:
        raise DegenerateSegment(f"segment {start} -> {end}")
    if abs(direction.norm() - 1.0) > max(tol.eps_len, 1e-12):
        raise InvalidParameter("ray direction must be a unit vector")
    return ray_hit(
        origin.x, origin.y, direction.x, direction.y,
        start.x, start.y, end.x, end.y,
        tol.eps_len,
    )


def incircle_value(ax, ay, bx, by, cx, cy, dx, dy) -> float:
    """Incircle determinant; positive when d is inside circle(abc), abc ccw."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    return (
        alift * (bdx * cdy - cdx * bdy)
        + blift * (cdx * ady - adx * cdy)
        + clift * (adx * bdy - bdx * ady)
    )


def incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    """+1 if d is strictly inside the circumcircle of abc, -1 outside, 0 on it.

    A clockwise triple is accepted and treated as its counterclockwise
    reordering.
    """
    sign = orient(a, b, c, tol)
    if sign == 0:
        raise DegenerateTriangle(f"collinear triangle {a}, {b}, {c}")
    det = sign * incircle_value(a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y)
    scale = max(
        abs(p.x - d.x) + abs(p.y - d.y)
        for p in (a, b, c)
    )
    if abs(det) <= tol.eps_len * scale ** 3:
        return 0
    return 1 if det > 0 else -1


def triangle_area(p: Tuple[float, float], q: Tuple[float, float], r: Tuple[float, float]) -> float:
    """Signed area of a triangle on raw coordinates."""
    return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def interior_angle(prev: Tuple[float, float], at: Tuple[float, float], nxt: Tuple[float, float]) -> float:
    """Counterclockwise angle at `at` from the ray to `nxt` to the ray to `prev`, in (0, 2pi)."""
    ux, uy = nxt[0] - at[0], nxt[1] - at[1]
    vx, vy = prev[0] - at[0], prev[1] - at[1]
    angle = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
    if angle <= 0:
        angle += 2 * math.pi
    return angle
