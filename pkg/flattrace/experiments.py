"""Experiment harness: diffusion exponents, baselines, illumination, ergodicity."""
from array import array
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .flow import Termination, discrepancy, trace
from .geometry import Vec2
from .grid import ChartGrid
from .hull import HullAccumulator
from .surface import SurfacePoint, TranslationSurface
from .util import (
    AllDirectionsSingular,
    InvalidParameter,
    SourceOnVertex,
    StartOnVertex,
    dyadic_checkpoints,
)
from .windtree import CellTracer, WindtreeScene

LOGGER = logging.getLogger(__name__)

TRACE_CHUNK = 65536.0
MAX_ATTEMPTS = 50
RAY_BATCH = 64


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map in submission order, over a process pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class DiffusionEstimate:
    """Fitted diameter exponent with its regression windows (natural logs)."""

    exponent: float
    stderr: float
    windows: Tuple[Tuple[float, float], ...]
    n_directions: int
    seed: int
    resampled: int = 0
    spread: float = 0.0

    def as_dict(self) -> dict:
        """JSON-ready summary."""
        return {
            "nu": self.exponent,
            "stderr": self.stderr,
            "windows": [list(w) for w in self.windows],
            "n_directions": self.n_directions,
            "seed": self.seed,
            "resampled": self.resampled,
            "spread": self.spread,
        }


def fit_exponent(
        times: Sequence[float],
        diameters: Sequence[float],
) -> Tuple[float, float, Tuple[Tuple[float, float], ...]]:
    """Slope of log diameter against log time over the upper half of the windows.

    Returns (slope, stderr, windows) with all (log T, log diameter) windows.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(diameters, dtype=float)
    if len(t) < 2 or len(t) != len(d):
        raise InvalidParameter("need at least two (time, diameter) pairs")
    if np.any(t <= 0) or np.any(d <= 0):
        raise InvalidParameter("times and diameters must be positive")
    log_t, log_d = np.log(t), np.log(d)
    first = len(t) // 2 if len(t) >= 4 else 0
    fit = stats.linregress(log_t[first:], log_d[first:])
    windows = tuple((float(a), float(b)) for a, b in zip(log_t, log_d))
    return float(fit.slope), float(fit.stderr), windows


def _estimate(
        checkpoints: Sequence[float],
        rows: List[List[float]],
        seed: int,
        resampled: int = 0,
) -> DiffusionEstimate:
    """Median over rows, then fit."""
    table = np.asarray(rows, dtype=float)
    median = np.median(table, axis=0)
    exponent, stderr, windows = fit_exponent(checkpoints, median)
    final = np.log(table[:, -1])
    q75, q25 = np.percentile(final, [75, 25])
    return DiffusionEstimate(exponent, stderr, windows, len(rows), seed, resampled, float(q75 - q25))


def windtree_diameters(
        scene: WindtreeScene,
        start: Vec2,
        direction: float,
        checkpoints: Sequence[float],
) -> Optional[List[float]]:
    """Diameter of the path prefix at each checkpoint; None on a corner hit."""
    tracer = CellTracer(scene, start, direction)
    hull = HullAccumulator()
    hull.add([start.as_tuple()])
    diameters = []
    for checkpoint in checkpoints:
        while tracer.length < checkpoint:
            xy = array("d")
            tracer.run(min(checkpoint, tracer.length + TRACE_CHUNK), xy)
            if xy:
                hull.add(np.frombuffer(xy, dtype=float).reshape(-1, 2))
            if tracer.termination is Termination.SINGULAR_HIT:
                return None
        hull.add([tracer.position])
        diameters.append(hull.diameter())
    return diameters


def _direction_job(args) -> Tuple[Optional[List[float]], int]:
    """Draw directions until one misses every corner."""
    scene, start, checkpoints, seed_seq, attempts = args
    rng = np.random.default_rng(seed_seq)
    for attempt in range(attempts):
        direction = rng.uniform(0.0, 2 * math.pi)
        diameters = windtree_diameters(scene, start, direction, checkpoints)
        if diameters is not None:
            return diameters, attempt
    return None, attempts


def diffusion_exponent(
        scene: WindtreeScene,
        n_directions: int = 20,
        t_max: float = 1e7,
        seed: int = 0,
        threads: int = 1,
        start: Optional[Vec2] = None,
) -> DiffusionEstimate:
    """Diffusion rate nu from dyadic diameter checkpoints over seeded directions."""
    if t_max < 1e3:
        raise InvalidParameter("t_max must be at least 1e3")
    if n_directions < 1:
        raise InvalidParameter("n_directions must be at least 1")
    start = start or scene.default_start()
    checkpoints = dyadic_checkpoints(t_max)
    children = np.random.SeedSequence(seed).spawn(n_directions)
    jobs = [(scene, start, checkpoints, child, MAX_ATTEMPTS) for child in children]
    results = parallel_map(_direction_job, jobs, threads)
    rows = [diameters for diameters, _ in results if diameters is not None]
    resampled = sum(count for _, count in results)
    if not rows:
        raise AllDirectionsSingular(f"all {n_directions} direction slots hit corners")
    if resampled:
        LOGGER.warning("Resampled %d directions that hit obstacle corners", resampled)
    estimate = _estimate(checkpoints, rows, seed, resampled)
    LOGGER.debug("Windtree m = %d: nu = %.4f +- %.4f", scene.m, estimate.exponent, estimate.stderr)
    return estimate


def _double_factorial(n: int) -> int:
    result = 1
    for k in range(n, 1, -2):
        result *= k
    return result


def theoretical_windtree_rate(m: int) -> Fraction:
    """(2m)!!/(2m+1)!! as an exact fraction."""
    if int(m) != m or m < 1:
        raise InvalidParameter(f"m must be a positive integer, got {m}")
    m = int(m)
    return Fraction(_double_factorial(2 * m), _double_factorial(2 * m + 1))


def path_diameters(path: np.ndarray, checkpoints: Sequence[int]) -> List[float]:
    """Diameter of path[:c + 1] for increasing integer checkpoints c."""
    hull = HullAccumulator()
    done = 0
    diameters = []
    for checkpoint in checkpoints:
        hull.add(path[done:checkpoint + 1])
        done = checkpoint + 1
        diameters.append(hull.diameter())
    return diameters


def _step_checkpoints(n_steps: int) -> List[int]:
    """Dyadic step counts up to n_steps."""
    return sorted({int(round(c)) for c in dyadic_checkpoints(float(n_steps))})


def estimate_from_paths(paths: Sequence[np.ndarray], seed: int = 0) -> DiffusionEstimate:
    """Fit the exponent for given unit-time paths of equal length."""
    n_steps = min(len(path) for path in paths) - 1
    if n_steps < 16:
        raise InvalidParameter("paths need at least 17 points")
    checkpoints = _step_checkpoints(n_steps)
    rows = [path_diameters(np.asarray(path, dtype=float), checkpoints) for path in paths]
    return _estimate(checkpoints, rows, seed)


def _walk_job(args) -> List[float]:
    """One random walk's prefix diameters."""
    n_steps, drift, checkpoints, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    angles = rng.uniform(0.0, 2 * math.pi, n_steps)
    steps = np.column_stack([np.cos(angles) + drift, np.sin(angles)])
    path = np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    return path_diameters(path, checkpoints)


def random_walk_baseline(
        n_steps: int = 10 ** 6,
        n_trials: int = 100,
        seed: int = 0,
        drift: float = 0.0,
        threads: int = 1,
) -> DiffusionEstimate:
    """Exponent of the unit-step planar random walk (optionally with drift along x)."""
    if n_steps < 10 ** 4:
        raise InvalidParameter("n_steps must be at least 1e4")
    if n_trials < 1:
        raise InvalidParameter("n_trials must be at least 1")
    checkpoints = _step_checkpoints(int(n_steps))
    children = np.random.SeedSequence(seed).spawn(n_trials)
    jobs = [(int(n_steps), float(drift), checkpoints, child) for child in children]
    rows = parallel_map(_walk_job, jobs, threads)
    estimate = _estimate(checkpoints, rows, seed)
    LOGGER.debug("Random walk (drift %g): nu = %.4f", drift, estimate.exponent)
    return estimate


@dataclass(frozen=True)
class IlluminationGrid:
    """Cells reached by rays from a source."""

    grid_n: int
    n_rays: int
    ray_length: float
    cells: Tuple[Tuple[int, int, int], ...]
    lit: Tuple[bool, ...]
    uncovered: Tuple[Tuple[int, int, int], ...]
    uncovered_fraction: float

    def as_dict(self) -> dict:
        """JSON-ready summary."""
        return {
            "grid_n": self.grid_n,
            "n_rays": self.n_rays,
            "ray_length": self.ray_length,
            "num_cells": len(self.cells),
            "num_uncovered": len(self.uncovered),
            "uncovered_fraction": self.uncovered_fraction,
        }


def illumination_map(
        surface: TranslationSurface,
        source: SurfacePoint,
        n_rays: int = 10_000,
        ray_length: float = 200.0,
        grid_n: int = 100,
        seed: int = 0,
) -> IlluminationGrid:
    """Mark the grid cells crossed by seeded rays from a source.

    Uncovered cells are candidate dark regions; the uncovered fraction is
    measured by area. Direction sets are nested in n_rays for a fixed seed.
    """
    if n_rays < 1 or not ray_length > 0:
        raise InvalidParameter("n_rays and ray_length must be positive")
    grid = ChartGrid.for_surface(surface, grid_n)
    lit = np.zeros(len(grid.cell_keys), dtype=bool)
    directions = np.random.default_rng(seed).uniform(0.0, 2 * math.pi, n_rays)
    batch = []
    for k, direction in enumerate(directions):
        try:
            ray = trace(surface, source, float(direction), max_length=ray_length)
        except StartOnVertex as err:
            raise SourceOnVertex(str(err)) from err
        batch.append(ray.segment_array())
        if len(batch) == RAY_BATCH or k == n_rays - 1:
            lit |= grid.visit_lengths(np.vstack(batch)) > 0
            batch = []
    areas = grid.cell_areas
    uncovered = tuple(key for key, flag in zip(grid.cell_keys, lit) if not flag)
    fraction = float(areas[~lit].sum() / areas.sum())
    LOGGER.debug("Illumination: %d of %d cells dark, area fraction %.3g", len(uncovered), len(lit), fraction)
    return IlluminationGrid(
        grid.grid_n,
        n_rays,
        float(ray_length),
        tuple(grid.cell_keys),
        tuple(bool(flag) for flag in lit),
        uncovered,
        fraction,
    )


@dataclass(frozen=True)
class ErgodicityReport:
    """Discrepancy at increasing lengths; `trend` is the log-log slope."""

    rows: Tuple[Tuple[float, Optional[float], str], ...]
    trend: Optional[float]

    def as_dict(self) -> dict:
        """JSON-ready summary."""
        return {
            "rows": [
                {"length": length, "discrepancy": value, "termination": reason}
                for length, value, reason in self.rows
            ],
            "trend": self.trend,
        }


def ergodicity_report(
        surface: TranslationSurface,
        direction: float,
        lengths: Sequence[float],
        grid_n: int = 10,
        start: Optional[SurfacePoint] = None,
) -> ErgodicityReport:
    """Discrepancy of one orbit at each length.

    Lengths past a cone point hit report no discrepancy and termination
    SingularHit.
    """
    lengths = sorted(float(length) for length in lengths)
    if not lengths or lengths[0] <= 0:
        raise InvalidParameter("lengths must be positive")
    start = start or surface.default_point()
    orbit = trace(surface, start, direction, max_length=lengths[-1], detect_closure=False)
    grid = ChartGrid.for_surface(surface, grid_n)
    rows = []
    for length in lengths:
        if length > orbit.total_length + surface.tol.eps_len:
            rows.append((length, None, Termination.SINGULAR_HIT.value))
            continue
        report = discrepancy(orbit.truncated(length), surface, grid=grid)
        rows.append((length, report.discrepancy, Termination.LENGTH_REACHED.value))
    valid = [(length, value) for length, value, _ in rows if value is not None and value > 0]
    trend = None
    if len(valid) >= 2:
        x, y = np.log([v[0] for v in valid]), np.log([v[1] for v in valid])
        trend = float(stats.linregress(x, y).slope)
    return ErgodicityReport(tuple(rows), trend)
