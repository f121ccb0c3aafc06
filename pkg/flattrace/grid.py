"""Grid cells in face charts, for visit-length and coverage accounting."""
from dataclasses import dataclass
import logging
import math
from typing import List, Tuple

import numpy as np
from shapely.geometry import Polygon, box

from .surface import TranslationSurface
from .util import InvalidParameter

LOGGER = logging.getLogger(__name__)

MIN_CELL_AREA = 1e-14


@dataclass
class ChartGrid:
    """grid_n x grid_n grid over the bounding box of all face charts.

    A cell is (face, i, j) with positive intersection area between the
    face triangle and grid square (i, j).
    """

    grid_n: int
    x0: float
    y0: float
    hx: float
    hy: float
    num_faces: int
    cell_keys: List[Tuple[int, int, int]]
    cell_areas: np.ndarray
    lookup: np.ndarray
    centroids: np.ndarray

    @classmethod
    def for_surface(cls, surface: TranslationSurface, grid_n: int) -> "ChartGrid":
        """Build the grid and cell areas for a surface."""
        if grid_n < 1:
            raise InvalidParameter("grid_n must be positive")
        xmin, ymin, xmax, ymax = surface.bounding_box()
        hx = (xmax - xmin) / grid_n
        hy = (ymax - ymin) / grid_n
        keys = []
        areas = []
        lookup = np.full(len(surface.faces) * grid_n * grid_n, -1, dtype=np.int64)
        for face, triangle in enumerate(surface.faces):
            shape = Polygon(triangle)
            fx = [p[0] for p in triangle]
            fy = [p[1] for p in triangle]
            i_lo = max(0, int(math.floor((min(fx) - xmin) / hx)))
            i_hi = min(grid_n - 1, int(math.floor((max(fx) - xmin) / hx)))
            j_lo = max(0, int(math.floor((min(fy) - ymin) / hy)))
            j_hi = min(grid_n - 1, int(math.floor((max(fy) - ymin) / hy)))
            for i in range(i_lo, i_hi + 1):
                for j in range(j_lo, j_hi + 1):
                    cell = box(
                        xmin + i * hx, ymin + j * hy,
                        xmin + (i + 1) * hx, ymin + (j + 1) * hy,
                    )
                    overlap = shape.intersection(cell).area
                    if overlap > MIN_CELL_AREA:
                        lookup[(face * grid_n + i) * grid_n + j] = len(keys)
                        keys.append((face, i, j))
                        areas.append(overlap)
        centroids = np.array([
            [sum(p[0] for p in t) / 3, sum(p[1] for p in t) / 3]
            for t in surface.faces
        ])
        return cls(
            grid_n, xmin, ymin, hx, hy, len(surface.faces),
            keys, np.asarray(areas), lookup, centroids,
        )

    def _cell_index(self, faces, x, y) -> np.ndarray:
        """Cell position for points in given faces; -1 when not a cell."""
        n = self.grid_n
        i = np.clip(np.floor((x - self.x0) / self.hx).astype(np.int64), 0, n - 1)
        j = np.clip(np.floor((y - self.y0) / self.hy).astype(np.int64), 0, n - 1)
        return self.lookup[(faces * n + i) * n + j]

    def visit_lengths(self, segments: np.ndarray) -> np.ndarray:
        """Length of the segments (face, x_in, y_in, x_out, y_out) inside each cell."""
        totals = np.zeros(len(self.cell_keys))
        if len(segments) == 0:
            return totals
        faces = segments[:, 0].astype(np.int64)
        ax, ay, bx, by = segments[:, 1], segments[:, 2], segments[:, 3], segments[:, 4]
        seg_len = np.hypot(bx - ax, by - ay)
        keep = seg_len > 0
        faces, ax, ay, bx, by, seg_len = (
            faces[keep], ax[keep], ay[keep], bx[keep], by[keep], seg_len[keep]
        )
        count = len(faces)
        ids = [np.arange(count), np.arange(count)]
        params = [np.zeros(count), np.ones(count)]
        for a, b, origin, step in ((ax, bx, self.x0, self.hx), (ay, by, self.y0, self.hy)):
            ka = np.floor((a - origin) / step).astype(np.int64)
            kb = np.floor((b - origin) / step).astype(np.int64)
            lo = np.minimum(ka, kb) + 1
            crossed = np.abs(kb - ka)
            total = int(crossed.sum())
            if total == 0:
                continue
            seg_ids = np.repeat(np.arange(count), crossed)
            starts = np.repeat(np.cumsum(crossed) - crossed, crossed)
            lines = np.repeat(lo, crossed) + (np.arange(total) - starts)
            coord = origin + lines * step
            delta = (b - a)[seg_ids]
            tau = (coord - a[seg_ids]) / delta
            ids.append(seg_ids)
            params.append(np.clip(tau, 0.0, 1.0))
        ids = np.concatenate(ids)
        params = np.concatenate(params)
        order = np.lexsort((params, ids))
        ids, params = ids[order], params[order]
        same = ids[1:] == ids[:-1]
        seg = ids[:-1][same]
        t0, t1 = params[:-1][same], params[1:][same]
        mid = 0.5 * (t0 + t1)
        mx = ax[seg] + mid * (bx[seg] - ax[seg])
        my = ay[seg] + mid * (by[seg] - ay[seg])
        piece_faces = faces[seg]
        cells = self._cell_index(piece_faces, mx, my)
        missing = cells < 0
        if missing.any():
            # pieces on a face boundary: nudge toward the face centroid
            cx = self.centroids[piece_faces[missing], 0]
            cy = self.centroids[piece_faces[missing], 1]
            nudge = 1e-7
            cells[missing] = self._cell_index(
                piece_faces[missing],
                mx[missing] + nudge * (cx - mx[missing]),
                my[missing] + nudge * (cy - my[missing]),
            )
            still = cells < 0
            if still.any():
                LOGGER.debug("Assigning %d boundary pieces to fallback cells", int(still.sum()))
                first_cell = {}
                for position, (face, _, _) in enumerate(self.cell_keys):
                    first_cell.setdefault(face, position)
                cells[still] = [first_cell[f] for f in piece_faces[still]]
        np.add.at(totals, cells, (t1 - t0) * seg_len[seg])
        return totals
