"""Builtin polygon patterns."""
import logging
import math
from typing import Any, Callable, Dict, Optional

from .geometry import Vec2
from .surface import PolygonPattern
from .util import BadParam, UnknownName

LOGGER = logging.getLogger(__name__)


def rect_torus(w: float = 1.0, h: float = 1.0) -> PolygonPattern:
    """w x h rectangle with opposite sides identified."""
    if not (w > 0 and h > 0):
        raise BadParam(f"rectangle sides must be positive, got {w} x {h}")
    return PolygonPattern.single(
        [Vec2(w, 0.0), Vec2(0.0, h), Vec2(-w, 0.0), Vec2(0.0, -h)],
        [2, 3, 0, 1],
    )


def unit_torus() -> PolygonPattern:
    """Unit square with opposite sides identified."""
    return rect_torus(1.0, 1.0)


def regular_polygon(n: int = 4, side: float = 1.0) -> PolygonPattern:
    """Regular 2n-gon with opposite sides identified (n = 4: the octagon)."""
    if int(n) != n or n < 2:
        raise BadParam(f"n must be an integer >= 2, got {n}")
    if not side > 0:
        raise BadParam(f"side must be positive, got {side}")
    n = int(n)
    edges = [Vec2.polar(k * math.pi / n, side) for k in range(2 * n)]
    # snap the exactly opposite vectors so the pairing check is tight
    edges = edges[:n] + [-edge for edge in edges[:n]]
    pairing = [(k + n) % (2 * n) for k in range(2 * n)]
    return PolygonPattern.single(edges, pairing)


def slit_torus(lam: float = 1 / math.sqrt(2)) -> PolygonPattern:
    """1 x 2 torus with two horizontal slits of length lam, glued crosswise.

    The rectangle is cut into the unit squares A = [0,1]x[0,1] and
    B = [0,1]x[1,2]; the slits sit on [0, lam] at heights 1 and 2 = 0. Each
    square's top and bottom are split at x = lam. Across the slits the
    lower lip of one slit is glued to the upper lip of the other, so A's top
    [0, lam] meets A's bottom and B's top [0, lam] meets B's bottom; the
    rest of the rectangle keeps its torus gluing.
    """
    if not 0 < lam < 1:
        raise BadParam(f"slit length must lie in (0, 1), got {lam}")
    square = (
        Vec2(lam, 0.0),
        Vec2(1.0 - lam, 0.0),
        Vec2(0.0, 1.0),
        Vec2(lam - 1.0, 0.0),
        Vec2(-lam, 0.0),
        Vec2(0.0, -1.0),
    )
    pairing = (4, 9, 5, 7, 0, 2, 10, 3, 11, 1, 6, 8)
    return PolygonPattern(
        (square, square),
        pairing,
        origins=(Vec2(0.0, 0.0), Vec2(0.0, 1.0)),
    )


BUILTINS: Dict[str, Callable[..., PolygonPattern]] = {
    "unit-torus": unit_torus,
    "rect-torus": rect_torus,
    "regular-2n-gon": regular_polygon,
    "slit-torus": slit_torus,
}


def builtin(name: str, params: Optional[Dict[str, Any]] = None) -> PolygonPattern:
    """Builtin pattern by name.

    Parameters: rect-torus(w, h), regular-2n-gon(n, side), slit-torus(lam).
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise UnknownName(
            f"unknown builtin '{name}'; choose from {sorted(BUILTINS)}"
        ) from None
    params = dict(params or {})
    try:
        return factory(**params)
    except TypeError as err:
        raise BadParam(f"bad parameters for {name}: {err}") from err
