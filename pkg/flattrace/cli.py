"""Command-line front end."""
import argparse
import csv
from dataclasses import dataclass
import io
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .acceptance import format_table, results_as_dicts, run_acceptance
from .billiards import billiard_trace, unfold_rational
from .experiments import (
    diffusion_exponent,
    ergodicity_report,
    illumination_map,
    random_walk_baseline,
    theoretical_windtree_rate,
)
from .flow import trace
from .geometry import GroupElement, Vec2
from .models import RunConfig
from .moduli import apply_matrix, divergence_profile, geodesic_flow, saddle_connections, systole_proxy
from .surface import SurfacePoint, TranslationSurface, cone_angle_total, topology
from .util import FlatTraceError, InvalidParameter
from .windtree import windtree_trace

LOGGER = logging.getLogger(__name__)

CSV_VERSION = "# flattrace-v1"
UNITS = "Lengths are in flat-metric units, angles in radians."
LOG_FORMAT = "[%(asctime)s: %(levelname)s/%(name)s]: %(message)s"

_handler: Optional[logging.Handler] = None


class UsageError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def _numbers(count: Optional[int]) -> Callable[[str], tuple]:
    """Parser for comma-separated numbers."""
    def parse(text: str) -> tuple:
        try:
            values = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
        if count is not None and len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} numbers, got {len(values)}")
        return values
    return parse


@dataclass
class Output:
    """What a subcommand produced."""

    payload: Dict[str, Any]
    header: Optional[List[str]] = None
    rows: Optional[List[Sequence]] = None
    default_format: str = "json"
    exit_code: int = 0


def _parents() -> Dict[str, argparse.ArgumentParser]:
    """Shared flag groups."""
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of defaults; flags override it")
    common.add_argument("--seed", type=int, help="random seed (env FLATTRACE_SEED, then 0)")
    common.add_argument("--threads", type=int, help="worker process cap")
    common.add_argument("-o", "--output", help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--eps-len", type=float, help="length tolerance")
    common.add_argument("--eps-angle", type=float, help="angle tolerance (radians)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    surface = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    surface.add_argument("--spec", help="surface-spec JSON file")
    surface.add_argument(
        "--builtin",
        help="unit-torus, rect-torus, regular-2n-gon or slit-torus (default unit-torus)",
    )
    surface.add_argument("--n", type=int, help="half the number of sides of the regular 2n-gon")
    surface.add_argument("--side", type=float, help="side of the regular 2n-gon")
    surface.add_argument("--w", type=float, help="rectangle torus width")
    surface.add_argument("--h", type=float, help="rectangle torus height")
    surface.add_argument("--lam", type=float, help="slit length, 0 < lam < 1")

    position = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    position.add_argument("--start", type=_numbers(2), help="start point x,y")
    position.add_argument("--face", type=int, help="face whose chart holds --start")
    position.add_argument("--direction", type=float, help="direction angle in radians")

    table = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    table.add_argument("--spec", help="table JSON file")
    table.add_argument("--table", choices=["square", "right-isosceles", "triangle"])
    table.add_argument("--angles", type=_numbers(2), help="two triangle angles in radians")

    scene = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    scene.add_argument("--scene", help="scene-spec JSON file")
    scene.add_argument("--m", type=int, help="staircase steps per quadrant (0: no obstacle)")
    scene.add_argument("--width", type=float, help="m = 1 obstacle width")
    scene.add_argument("--height", type=float, help="m = 1 obstacle height")

    check = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    check.add_argument("--check", action="store_true", help="exit 1 when the exponent misses its target")
    check.add_argument("--tol", type=float, help="tolerance of --check (default 0.1)")
    return {
        "common": common,
        "surface": surface,
        "position": position,
        "table": table,
        "scene": scene,
        "check": check,
    }


def build_parser() -> argparse.ArgumentParser:
    """Parser for every subcommand."""
    parents = _parents()
    parser = _Parser(
        prog="flattrace",
        description="Flat surfaces, straight-line flows, billiards and the GL(2,R) action. " + UNITS,
    )
    commands = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, groups, help_text):
        return commands.add_parser(
            name,
            parents=[parents["common"]] + [parents[group] for group in groups],
            argument_default=argparse.SUPPRESS,
            help=help_text,
            description=f"{help_text}. {UNITS}",
        )

    add("validate", ["surface"], "Build a surface and print its topology")
    command = add("trace", ["surface", "position"], "Trace straight-line flow (CSV segments)")
    command.add_argument("--length", type=float, help="maximum length (default 100)")
    command.add_argument("--crossings", type=int, help="maximum edge crossings")
    command = add("act", ["surface"], "Apply a GL(2,R) matrix or a rotation")
    command.add_argument("--matrix", type=_numbers(4), help="a,b,c,d for the matrix (a b; c d)")
    command.add_argument("--theta", type=float, help="rotation angle in radians")
    command = add("flow", ["surface"], "Apply the Teichmuller flow g_t = diag(e^t, e^-t)")
    command.add_argument("--t", type=float, help="flow time")
    command.add_argument("--renormalize", action="store_true", help="Delaunay-normalize after each step")
    command = add("systole", ["surface"], "Shortest saddle connection")
    command.add_argument("--saddle-length", type=float, help="also list saddle connections up to this length")
    command = add("diverge", ["surface"], "Systole along the renormalized Teichmuller flow (CSV t, systole)")
    command.add_argument("--t-max", type=float, help="final flow time (default 10)")
    command.add_argument("--dt", type=float, help="sampling step (default 0.5)")
    command = add("billiard", ["table", "position"], "Billiard trajectory by direct reflection (CSV t, x, y)")
    command.add_argument("--length", type=float, help="maximum length (default 100)")
    command.add_argument("--reflections", type=int, help="maximum reflections")
    add("unfold", ["table"], "Unfold a rational polygon into a translation surface")
    command = add("windtree", ["scene"], "Windtree trajectory in the plane (CSV t, x, y)")
    command.add_argument("--start", type=_numbers(2), help="start point x,y")
    command.add_argument("--direction", type=float, help="direction angle in radians")
    command.add_argument("-T", dest="T", type=float, help="trajectory length (default 1000)")
    command = add("diffusion", ["scene", "check"], "Windtree diffusion exponent nu")
    command.add_argument("--tmax", type=float, help="trajectory length per direction (>= 1e3)")
    command.add_argument("--directions", type=int, help="number of seeded directions")
    command = add("baseline", ["check"], "Planar random-walk exponent (1/2 without drift)")
    command.add_argument("--steps", type=int, help="unit steps per walk (>= 1e4)")
    command.add_argument("--trials", type=int, help="number of walks")
    command.add_argument("--drift", type=float, help="drift added to each step along x")
    command = add("illuminate", ["surface"], "Chart-grid cells reached by rays from a source")
    command.add_argument("--start", type=_numbers(2), help="source point x,y")
    command.add_argument("--face", type=int, help="face whose chart holds --start")
    command.add_argument("--rays", type=int, help="number of rays")
    command.add_argument("--ray-length", type=float, help="length of each ray")
    command.add_argument("--grid", type=int, help="grid cells per side")
    command = add("ergodicity", ["surface", "position"], "Discrepancy of one orbit at increasing lengths")
    command.add_argument("--lengths", type=_numbers(None), help="comma-separated lengths")
    command.add_argument("--grid", type=int, help="grid cells per side")
    command = add("accept", [], "Run the acceptance suite and print a pass/fail table")
    command.add_argument("--quick", action="store_true", help="reduced budgets and wider tolerances")
    return parser


def parse_config(argv: Optional[Sequence[str]]) -> RunConfig:
    """Flags over the optional --config file; seed falls back to FLATTRACE_SEED."""
    flags = vars(build_parser().parse_args(argv))
    values: Dict[str, Any] = {}
    config_file = flags.pop("config", None)
    if config_file is not None:
        try:
            with open(config_file, encoding="utf-8") as stream:
                values = json.load(stream)
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config {config_file}: {err}")
        if not isinstance(values, dict):
            raise UsageError(f"config {config_file} must hold a JSON object")
        values.pop("subcommand", None)
    values.update(flags)
    if "seed" not in values:
        env_seed = os.environ.get("FLATTRACE_SEED")
        try:
            values["seed"] = int(env_seed) if env_seed is not None else 0
        except ValueError:
            raise UsageError(f"FLATTRACE_SEED must be an integer, got {env_seed!r}")
    return RunConfig(**values)


def _configure_logging(verbose: bool):
    """Send flattrace logs to stderr."""
    global _handler
    logger = logging.getLogger("flattrace")
    if _handler is not None:
        logger.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(_handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _surface(config: RunConfig) -> TranslationSurface:
    return config.surface_spec().build(config.tolerance)


def _surface_point(surface: TranslationSurface, config: RunConfig) -> SurfacePoint:
    if config.start is None:
        return surface.default_point()
    x, y = config.start
    if config.face is not None:
        return surface.point(config.face, x, y)
    return surface.point_at(x, y)


def _summary(surface: TranslationSurface) -> Dict[str, Any]:
    topo = topology(surface)
    return {
        "area": surface.area,
        "genus": topo.genus,
        "cone_orders": list(topo.cone_orders),
        "stratum": topo.stratum,
        "systole": systole_proxy(surface),
        "faces": [[list(p) for p in triangle] for triangle in surface.faces],
    }


def _planar_rows(path) -> List[Sequence]:
    return [tuple(row) for row in path.as_array().tolist()]


def _planar_payload(path) -> Dict[str, Any]:
    return {
        "termination": path.termination.value,
        "total_length": path.total_length,
        "reflections": path.reflections,
        "end": list(path.end),
        "diameter": path.diameter(),
    }


def cmd_validate(config: RunConfig) -> Output:
    """Topology summary of a surface."""
    surface = _surface(config)
    topo = topology(surface)
    return Output({
        "genus": topo.genus,
        "cone_orders": list(topo.cone_orders),
        "stratum": topo.stratum,
        "area": surface.area,
        "num_faces": topo.num_faces,
        "num_edges": topo.num_edges,
        "num_vertices": topo.num_vertices,
        "cone_angle_total": cone_angle_total(surface),
    })


def cmd_trace(config: RunConfig) -> Output:
    """Straight-line flow as segments or a summary."""
    surface = _surface(config)
    start = _surface_point(surface, config)
    length = config.length
    if length is None and config.crossings is None:
        length = 100.0
    path = trace(surface, start, config.direction, max_length=length, max_crossings=config.crossings)
    rows = []
    travelled = 0.0
    for segment in path.segments:
        travelled += segment.length
        rows.append((segment.face, segment.x_in, segment.y_in, segment.x_out, segment.y_out, travelled))
    end = path.end
    return Output(
        {
            "termination": path.termination.value,
            "total_length": path.total_length,
            "crossings": path.crossings,
            "crossing_word": list(path.crossing_word),
            "end": {"face": end.face, "x": end.pos.x, "y": end.pos.y},
        },
        ["face", "x_in", "y_in", "x_out", "y_out", "cum_length"],
        rows,
        default_format="csv",
    )


def cmd_act(config: RunConfig) -> Output:
    """Surface after a GL(2,R) matrix, with its topology."""
    if config.matrix is None and config.theta is None:
        raise InvalidParameter("give --matrix or --theta")
    M = GroupElement(*config.matrix) if config.matrix is not None else GroupElement.rotation(config.theta)
    payload = _summary(apply_matrix(_surface(config), M))
    payload["det"] = M.det
    return Output(payload)


def cmd_flow(config: RunConfig) -> Output:
    """Surface after the geodesic flow."""
    payload = _summary(geodesic_flow(_surface(config), config.t, renormalize=config.renormalize))
    payload["t"] = config.t
    return Output(payload)


def cmd_systole(config: RunConfig) -> Output:
    """Systole, plus the saddle connections up to --saddle-length."""
    surface = _surface(config)
    payload: Dict[str, Any] = {"systole": systole_proxy(surface)}
    rows = None
    if config.saddle_length is not None:
        connections = saddle_connections(surface, config.saddle_length)
        payload["saddle_connections"] = [
            {
                "holonomy": [sc.holonomy.x, sc.holonomy.y],
                "length": sc.length,
                "endpoints": list(sc.endpoints),
                "crossing_word": list(sc.crossing_word),
            }
            for sc in connections
        ]
        rows = [
            (sc.holonomy.x, sc.holonomy.y, sc.length, sc.endpoints[0], sc.endpoints[1])
            for sc in connections
        ]
    return Output(payload, ["hx", "hy", "length", "from_class", "to_class"], rows)


def cmd_diverge(config: RunConfig) -> Output:
    """Systole profile and its log slope."""
    profile = divergence_profile(_surface(config), config.t_max, config.dt)
    return Output(
        {"samples": [list(sample) for sample in profile.samples], "slope": profile.slope},
        ["t", "systole"],
        [tuple(sample) for sample in profile.samples],
        default_format="csv",
    )


def cmd_billiard(config: RunConfig) -> Output:
    """Billiard path in a polygonal table."""
    table = config.table_spec().build(config.tolerance)
    if config.start is not None:
        start = Vec2(*config.start)
    else:
        points = table.points
        start = Vec2(sum(p[0] for p in points) / len(points), sum(p[1] for p in points) / len(points))
    length = config.length
    if length is None and config.reflections is None:
        length = 100.0
    path = billiard_trace(table, start, config.direction, max_length=length, max_reflections=config.reflections)
    payload = _planar_payload(path)
    payload["walls"] = list(path.walls)
    return Output(payload, ["t", "x", "y"], _planar_rows(path), default_format="csv")


def cmd_unfold(config: RunConfig) -> Output:
    """Unfolded surface of a rational table."""
    table = config.table_spec().build(config.tolerance)
    surface, folding = unfold_rational(table)
    topo = topology(surface)
    return Output({
        "order": folding.order,
        "copies": len(folding.elements),
        "genus": topo.genus,
        "cone_orders": list(topo.cone_orders),
        "stratum": topo.stratum,
        "area": surface.area,
        "num_faces": topo.num_faces,
        "num_vertices": topo.num_vertices,
    })


def cmd_windtree(config: RunConfig) -> Output:
    """Windtree path in the plane."""
    scene = config.scene_spec().build()
    start = Vec2(*config.start) if config.start is not None else scene.default_start()
    path = windtree_trace(scene, start, config.direction, config.T)
    return Output(_planar_payload(path), ["t", "x", "y"], _planar_rows(path), default_format="csv")


def _checked(payload: Dict[str, Any], exponent: float, target: float, config: RunConfig) -> int:
    """Record the target and tell whether the run missed it."""
    payload["target"] = target
    if not config.check:
        return 0
    payload["passed"] = abs(exponent - target) <= config.tol
    LOGGER.info("nu = %.4f, target %.4f +- %g", exponent, target, config.tol)
    return 0 if payload["passed"] else 1


def _windows(estimate) -> List[Sequence]:
    return [tuple(window) for window in estimate.windows]


def cmd_diffusion(config: RunConfig) -> Output:
    """Diffusion exponent of a windtree scene."""
    scene = config.scene_spec().build()
    estimate = diffusion_exponent(scene, config.directions, config.tmax, config.seed, config.threads)
    payload = estimate.as_dict()
    payload["m"] = scene.m
    target = float(theoretical_windtree_rate(scene.m)) if scene.m >= 1 else 1.0
    code = _checked(payload, estimate.exponent, target, config)
    return Output(payload, ["log_T", "log_diameter"], _windows(estimate), exit_code=code)


def cmd_baseline(config: RunConfig) -> Output:
    """Random-walk baseline exponent, optionally checked against its target."""
    estimate = random_walk_baseline(config.steps, config.trials, config.seed, config.drift, config.threads)
    payload = estimate.as_dict()
    payload["drift"] = config.drift
    code = _checked(payload, estimate.exponent, 0.5 if config.drift == 0 else 1.0, config)
    return Output(payload, ["log_T", "log_diameter"], _windows(estimate), exit_code=code)


def cmd_illuminate(config: RunConfig) -> Output:
    """Illumination map from a source point."""
    surface = _surface(config)
    source = _surface_point(surface, config)
    grid = illumination_map(surface, source, config.rays, config.ray_length, config.grid, config.seed)
    payload = grid.as_dict()
    payload["uncovered"] = [list(cell) for cell in grid.uncovered]
    rows = [(face, i, j, int(lit)) for (face, i, j), lit in zip(grid.cells, grid.lit)]
    return Output(payload, ["face", "i", "j", "lit"], rows)


def cmd_ergodicity(config: RunConfig) -> Output:
    """Discrepancy of one orbit at increasing lengths."""
    surface = _surface(config)
    start = _surface_point(surface, config)
    report = ergodicity_report(surface, config.direction, config.lengths, config.grid, start)
    rows = [
        (length, "" if value is None else value, reason)
        for length, value, reason in report.rows
    ]
    return Output(report.as_dict(), ["length", "discrepancy", "termination"], rows)


HANDLERS: Dict[str, Callable[[RunConfig], Output]] = {
    "validate": cmd_validate,
    "trace": cmd_trace,
    "act": cmd_act,
    "flow": cmd_flow,
    "systole": cmd_systole,
    "diverge": cmd_diverge,
    "billiard": cmd_billiard,
    "unfold": cmd_unfold,
    "windtree": cmd_windtree,
    "diffusion": cmd_diffusion,
    "baseline": cmd_baseline,
    "illuminate": cmd_illuminate,
    "ergodicity": cmd_ergodicity,
}


def _render(output: Output, fmt: Optional[str]) -> str:
    fmt = fmt or output.default_format
    if fmt == "csv" and output.rows is not None:
        stream = io.StringIO()
        stream.write(CSV_VERSION + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(output.header)
        writer.writerows(output.rows)
        return stream.getvalue()
    return json.dumps(output.payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as stream:
        stream.write(text)


def _accept(config: RunConfig) -> int:
    results = run_acceptance(config.seed, config.quick, config.threads)
    sys.stdout.write(format_table(results, config.seed, config.quick))
    if config.output is not None:
        _emit(json.dumps(results_as_dicts(results), indent=2, sort_keys=True) + "\n", config.output)
    return 0 if all(result.passed for result in results) else 1


def _report(err: BaseException):
    """Machine-readable error on stderr."""
    sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the exit code."""
    try:
        config = parse_config(argv)
    except (UsageError, ValidationError) as err:
        _report(err)
        return 2
    except SystemExit as exit_:
        # --help
        return exit_.code or 0
    _configure_logging(config.verbose)
    LOGGER.debug("Running %s with seed %d", config.subcommand, config.seed)
    try:
        if config.subcommand == "accept":
            return _accept(config)
        output = HANDLERS[config.subcommand](config)
        _emit(_render(output, config.format), config.output)
        return output.exit_code
    except (ValidationError, json.JSONDecodeError) as err:
        # malformed spec or scene file
        _report(err)
        return 2
    except (FlatTraceError, ValueError, OSError) as err:
        _report(err)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))
