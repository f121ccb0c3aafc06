"""Acceptance suite behind `flattrace accept`."""
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
import logging
import math
import time
from typing import Callable, List

import numpy as np

from .billiards import BilliardTable, fold_check, unfold_rational
from .experiments import (
    diffusion_exponent,
    ergodicity_report,
    estimate_from_paths,
    illumination_map,
    random_walk_baseline,
    theoretical_windtree_rate,
)
from .flow import Termination, trace
from .geometry import GroupElement, Vec2
from .moduli import apply_matrix, delaunay_normalize_with_map, divergence_profile, rotate, systole_proxy
from .patterns import builtin
from .surface import SurfacePoint, TranslationSurface, build_from_pattern, topology
from .windtree import windtree_scene

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Budget:
    """Sample sizes and tolerances of one acceptance run."""

    group_samples: int
    fidelity_samples: int
    walk_steps: int
    walk_trials: int
    walk_tol: float
    bounded_steps: int
    windtree_tmax: float
    windtree_directions: int
    windtree_tol: float
    fold_trials: int
    fold_reflections: int
    rays: int
    ray_length: float
    torus_dark: float
    octagon_dark: float
    ergodic_length: float


FULL = Budget(
    group_samples=100,
    fidelity_samples=100,
    walk_steps=10 ** 6,
    walk_trials=100,
    walk_tol=0.07,
    bounded_steps=10 ** 6,
    windtree_tmax=1e7,
    windtree_directions=20,
    windtree_tol=0.1,
    fold_trials=10_000,
    fold_reflections=1000,
    rays=10_000,
    ray_length=200.0,
    torus_dark=0.001,
    octagon_dark=0.01,
    ergodic_length=1e5,
)

QUICK = Budget(
    group_samples=20,
    fidelity_samples=20,
    walk_steps=10 ** 5,
    walk_trials=20,
    walk_tol=0.1,
    bounded_steps=10 ** 5,
    windtree_tmax=1e5,
    windtree_directions=6,
    windtree_tol=0.2,
    fold_trials=100,
    fold_reflections=200,
    rays=2000,
    ray_length=100.0,
    torus_dark=0.01,
    octagon_dark=0.05,
    ergodic_length=1e4,
)

# side ratio is irrational
GENERIC_OBSTACLE = (1 / (2 * math.sqrt(2)), (math.sqrt(5) - 1) / 4)


@dataclass(frozen=True)
class CriterionResult:
    """One row of the acceptance table."""

    number: int
    name: str
    value: str
    threshold: str
    passed: bool
    seconds: float = 0.0


def _surface(name: str, **params) -> TranslationSurface:
    return build_from_pattern(builtin(name, params))


def _random_matrix(rng: np.random.Generator, flip: bool) -> GroupElement:
    """Well-conditioned random GL(2,R) element."""
    scale = rng.uniform(0.5, 2.0)
    stretch = rng.uniform(-1.0, 1.0)
    M = (
        GroupElement.rotation(rng.uniform(0, 2 * math.pi))
        @ GroupElement.diagonal(scale * math.exp(stretch), scale * math.exp(-stretch))
        @ GroupElement.rotation(rng.uniform(0, 2 * math.pi))
    )
    return M @ GroupElement.diagonal(1.0, -1.0) if flip else M


def check_topology(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Genus and cone orders of the builtins against their known strata."""
    cases = [
        (("unit-torus", {}), (1, ())),
        (("rect-torus", {"w": 2.0, "h": 1.0}), (1, ())),
        (("regular-2n-gon", {"n": 4}), (2, (2,))),
        (("slit-torus", {"lam": 1 / math.sqrt(2)}), (2, (1, 1))),
    ]
    matched = 0
    for (name, params), expected in cases:
        topo = topology(_surface(name, **params))
        if (topo.genus, topo.cone_orders) == expected and sum(topo.cone_orders) == 2 * topo.genus - 2:
            matched += 1
    return CriterionResult(1, "topology exactness", f"{matched}/{len(cases)} match", "exact", matched == len(cases))


def check_group_laws(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Area scaling, SL(2,R) area invariance and composition of the action."""
    rng = np.random.default_rng(seed)
    surfaces = [
        _surface("unit-torus"),
        _surface("rect-torus", w=2.0, h=1.0),
        _surface("regular-2n-gon", n=4),
        _surface("slit-torus"),
    ]
    area_error = sl_error = composition_error = 0.0
    for k in range(budget.group_samples):
        S = surfaces[k % len(surfaces)]
        M1 = _random_matrix(rng, flip=bool(k % 2))
        M2 = _random_matrix(rng, flip=False)
        expected = abs(M1.det) * S.area
        area_error = max(area_error, abs(apply_matrix(S, M1).area - expected) / expected)
        unit = math.sqrt(abs(M2.det))
        special = GroupElement(M2.a / unit, M2.b / unit, M2.c / unit, M2.d / unit)
        sl_error = max(sl_error, abs(apply_matrix(S, special).area - S.area) / S.area)
        stepwise = systole_proxy(apply_matrix(apply_matrix(S, M1), M2))
        composed = systole_proxy(apply_matrix(S, M2 @ M1))
        composition_error = max(composition_error, abs(stepwise - composed) / composed)
    passed = area_error <= 1e-12 and sl_error <= 1e-12 and composition_error <= 1e-9
    return CriterionResult(
        2,
        "group-action laws",
        f"area {area_error:.1e}, SL {sl_error:.1e}, comp {composition_error:.1e}",
        "1e-12, 1e-12, 1e-9",
        passed,
    )


def same_point(surface: TranslationSurface, a: SurfacePoint, b: SurfacePoint) -> float:
    """Distance between two chart points, looking across a shared edge."""
    best = math.inf
    if a.face == b.face:
        best = math.hypot(a.pos.x - b.pos.x, a.pos.y - b.pos.y)
    for e in range(3):
        if surface.gluing[b.face][e][0] == a.face:
            ox, oy = surface.offsets[b.face][e]
            best = min(best, math.hypot(a.pos.x - b.pos.x - ox, a.pos.y - b.pos.y - oy))
    return best


def _random_point(surface: TranslationSurface, rng: np.random.Generator) -> SurfacePoint:
    """Point well inside a random face."""
    face = int(rng.integers(len(surface.faces)))
    weights = rng.uniform(0.1, 1.0, 3)
    weights /= weights.sum()
    x = sum(w * p[0] for w, p in zip(weights, surface.faces[face]))
    y = sum(w * p[1] for w, p in zip(weights, surface.faces[face]))
    return SurfacePoint(face, Vec2(x, y))


def check_renormalization(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Flow on a distorted surface matches the flow on its Delaunay normalization."""
    rng = np.random.default_rng(seed + 1)
    skew = GroupElement.teichmuller(1.2) @ GroupElement.rotation(0.3)
    pairs = []
    for name in ("regular-2n-gon", "slit-torus"):
        distorted = apply_matrix(_surface(name), skew)
        normalized, chart_map = delaunay_normalize_with_map(distorted)
        pairs.append((distorted, normalized, chart_map))
    deviation = 0.0
    area_error = 0.0
    for distorted, normalized, _ in pairs:
        area_error = max(area_error, abs(normalized.area - distorted.area) / distorted.area)
    for k in range(budget.fidelity_samples):
        distorted, normalized, chart_map = pairs[k % len(pairs)]
        start = _random_point(distorted, rng)
        direction = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(0.5, 10.0)
        before = trace(distorted, start, direction, max_length=length, detect_closure=False)
        after = trace(normalized, chart_map(start), direction, max_length=length, detect_closure=False)
        if before.termination is Termination.SINGULAR_HIT or after.termination is Termination.SINGULAR_HIT:
            gap = abs(before.total_length - after.total_length)
        else:
            gap = same_point(normalized, chart_map(before.end), after.end)
        deviation = max(deviation, gap)
    passed = deviation <= 1e-6 and area_error <= 1e-12
    return CriterionResult(
        3,
        "renormalization fidelity",
        f"endpoint {deviation:.1e}, area {area_error:.1e}",
        "1e-6, 1e-12",
        passed,
    )


def check_divergence(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Systole decay rates under the geodesic flow, and a non-divergent direction."""
    torus = divergence_profile(_surface("unit-torus"), 8.0, 0.5).log_slope(2.0, 8.0)
    slit = divergence_profile(_surface("slit-torus"), 8.0, 0.5).log_slope(2.0, 8.0)
    rotated = rotate(_surface("unit-torus"), math.atan(1 / math.sqrt(2)))
    lowest = float(divergence_profile(rotated, 10.0, 0.5).systoles.min())
    passed = abs(torus + 1) <= 0.05 and abs(slit + 1) <= 0.05 and lowest >= 0.1
    return CriterionResult(
        4,
        "Masur divergence",
        f"slopes {torus:.4f}, {slit:.4f}; min {lowest:.4f}",
        "-1 +- 0.05; >= 0.1",
        passed,
    )


def check_calibration(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Exponent estimator on diffusive, ballistic and bounded reference paths."""
    walk = random_walk_baseline(budget.walk_steps, budget.walk_trials, seed, threads=threads).exponent
    ballistic = diffusion_exponent(windtree_scene(0), 4, 1e5, seed, threads).exponent
    rng = np.random.default_rng(seed + 2)
    boxed = [rng.uniform(0.0, 1.0, (budget.bounded_steps + 1, 2)) for _ in range(4)]
    bounded = estimate_from_paths(boxed, seed).exponent
    passed = abs(walk - 0.5) <= budget.walk_tol and abs(ballistic - 1) <= 0.01 and bounded <= 0.1
    return CriterionResult(
        5,
        "estimator calibration",
        f"walk {walk:.4f}, ballistic {ballistic:.4f}, bounded {bounded:.4f}",
        f"0.5 +- {budget.walk_tol}, 1 +- 0.01, <= 0.1",
        passed,
    )


def check_windtree(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Diffusion exponent of a generic rectangle against 2/3, plus the exact rates."""
    width, height = GENERIC_OBSTACLE
    scene = windtree_scene(1, {"width": width, "height": height})
    nu = diffusion_exponent(
        scene, budget.windtree_directions, budget.windtree_tmax, seed, threads
    ).exponent
    rates = [theoretical_windtree_rate(m) for m in range(1, 11)]
    exact = rates[0] == Fraction(2, 3) and rates[1] == Fraction(8, 15)
    decreasing = all(b < a for a, b in zip(rates, rates[1:]))
    asymptote = math.sqrt(math.pi) / (2 * math.sqrt(50))
    close = abs(float(theoretical_windtree_rate(50)) - asymptote) <= 0.05 * asymptote
    passed = abs(nu - 2 / 3) <= budget.windtree_tol and exact and decreasing and close
    return CriterionResult(
        6,
        "windtree diffusion",
        f"nu {nu:.4f} ({width:.4f} x {height:.4f}); rates {'ok' if exact and decreasing and close else 'bad'}",
        f"2/3 +- {budget.windtree_tol}; exact",
        passed,
    )


def check_unfolding(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Direct reflection against the folded straight line on two rational tables."""
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for table in (BilliardTable.square(), BilliardTable.right_isosceles()):
        unfolded = unfold_rational(table)
        xs = [p[0] for p in table.points]
        ys = [p[1] for p in table.points]
        for _ in range(budget.fold_trials):
            while True:
                x, y = rng.uniform(min(xs), max(xs)), rng.uniform(min(ys), max(ys))
                if table.contains_strictly(x, y):
                    break
            direction = rng.uniform(0, 2 * math.pi)
            worst = max(worst, fold_check(table, Vec2(x, y), direction, budget.fold_reflections, unfolded))
    return CriterionResult(7, "unfolding equivalence", f"max dev {worst:.1e}", "1e-6", worst < 1e-6)


def check_illumination(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Dark fraction of the illumination grid on the torus and the octagon."""
    torus = _surface("unit-torus")
    torus_dark = illumination_map(
        torus, torus.point_at(1 / math.pi, math.e / 10), budget.rays, budget.ray_length, 100, seed
    ).uncovered_fraction
    octagon = _surface("regular-2n-gon", n=4)
    octagon_dark = illumination_map(
        octagon, octagon.default_point(), budget.rays, budget.ray_length, 100, seed
    ).uncovered_fraction
    passed = torus_dark <= budget.torus_dark and octagon_dark <= budget.octagon_dark
    return CriterionResult(
        8,
        "illumination coverage",
        f"torus {torus_dark:.2e}, octagon {octagon_dark:.2e}",
        f"<= {budget.torus_dark}, <= {budget.octagon_dark}",
        passed,
    )


def check_equidistribution(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Discrepancy decay on an irrational torus orbit against a periodic slit-torus one."""
    lengths = [10.0 ** k for k in range(2, int(round(math.log10(budget.ergodic_length))) + 1)]
    torus = ergodicity_report(_surface("unit-torus"), math.atan2(math.sqrt(2), 1), lengths)
    final = torus.rows[-1][1]
    slit = ergodicity_report(_surface("slit-torus"), math.pi / 2, [10.0, 100.0, 1000.0])
    plateau = min(value for _, value, _ in slit.rows)
    passed = final is not None and final < 0.05 and plateau > 0.2
    return CriterionResult(
        9,
        "equidistribution vs periodicity",
        f"torus {final:.4f}, slit {plateau:.4f}",
        "< 0.05, > 0.2",
        passed,
    )


def check_determinism(budget: Budget, seed: int, threads: int) -> CriterionResult:
    """Two runs with the same seed give identical regression windows."""
    scene = windtree_scene(1)
    runs = [
        (
            random_walk_baseline(10 ** 4, 4, seed, threads=threads).windows,
            diffusion_exponent(scene, 2, 1e4, seed, threads).windows,
        )
        for _ in range(2)
    ]
    same = runs[0] == runs[1]
    return CriterionResult(10, "determinism", "identical" if same else "differs", "identical", same)


CRITERIA: List[Callable[[Budget, int, int], CriterionResult]] = [
    check_topology,
    check_group_laws,
    check_renormalization,
    check_divergence,
    check_calibration,
    check_windtree,
    check_unfolding,
    check_illumination,
    check_equidistribution,
    check_determinism,
]


def run_acceptance(seed: int = 0, quick: bool = False, threads: int = 1) -> List[CriterionResult]:
    """Run every criterion, recording its wall-clock time."""
    budget = QUICK if quick else FULL
    results = []
    for criterion in CRITERIA:
        began = time.perf_counter()
        result = criterion(budget, seed, threads)
        result = replace(result, seconds=time.perf_counter() - began)
        LOGGER.info(
            "Criterion %d (%s): %s in %.1f s",
            result.number,
            result.name,
            "PASS" if result.passed else "FAIL",
            result.seconds,
        )
        results.append(result)
    return results


def format_table(results: List[CriterionResult], seed: int, quick: bool) -> str:
    """Plain-text pass/fail table with per-criterion wall-clock seconds."""
    lines = [
        f"flattrace acceptance (seed {seed}, {'quick' if quick else 'full'} budgets)",
        f"{'#':>2}  {'criterion':<32} {'value':<46} {'threshold':<28} {'time':>9}  result",
    ]
    for result in results:
        lines.append(
            f"{result.number:>2}  {result.name:<32} {result.value:<46} {result.threshold:<28} "
            f"{result.seconds:>8.1f}s  {'PASS' if result.passed else 'FAIL'}"
        )
    passed = sum(result.passed for result in results)
    total = sum(result.seconds for result in results)
    lines.append(f"{passed}/{len(results)} criteria passed in {total:.1f} s")
    return "\n".join(lines) + "\n"


def results_as_dicts(results: List[CriterionResult]) -> List[dict]:
    """JSON-ready rows, seconds included."""
    return [asdict(result) for result in results]
