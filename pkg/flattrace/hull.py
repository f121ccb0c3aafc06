"""Diameters of planar point sets via convex hulls."""
import logging

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

LOGGER = logging.getLogger(__name__)

_DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]])


def extreme_points(points: np.ndarray) -> np.ndarray:
    """Points extreme along eight directions; the exact hull of a collinear set."""
    projections = points @ _DIRECTIONS.T
    index = np.unique(np.concatenate([projections.argmin(axis=0), projections.argmax(axis=0)]))
    return points[index]


def hull_points(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices, or the extreme points for degenerate sets."""
    if len(points) < 3:
        return points
    try:
        hull = ConvexHull(points)
    except QhullError:
        LOGGER.debug("Degenerate hull of %d points, using extreme points", len(points))
        return extreme_points(points)
    return points[hull.vertices]


def diameter(points) -> float:
    """Largest distance between two points of the set."""
    vertices = hull_points(np.asarray(points, dtype=float).reshape(-1, 2))
    if len(vertices) < 2:
        return 0.0
    return float(pdist(vertices).max())


class HullAccumulator:
    """Running convex hull of a growing point stream."""

    def __init__(self):
        self._points = np.zeros((0, 2))

    def add(self, points):
        """Merge more points."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            return
        self._points = hull_points(np.vstack([self._points, points]))

    def diameter(self) -> float:
        """Diameter of everything added so far."""
        return diameter(self._points)
