"""Test the command line and run configuration."""
import dataclasses
from fractions import Fraction
import json

import pytest
from pydantic import ValidationError

from flattrace.acceptance import (
    GENERIC_OBSTACLE,
    QUICK,
    CriterionResult,
    check_topology,
    check_unfolding,
    format_table,
    results_as_dicts,
)
from flattrace.cli import CSV_VERSION, UsageError, parse_config, run
from flattrace.models import RunConfig, SceneSpec, SurfaceSpec, TableSpec
from flattrace.util import BadDimensions
from flattrace.windtree import windtree_scene

from .logging_setup import setup_logger

setup_logger()


def run_json(capsys, argv):
    """Run a subcommand and parse its JSON output."""
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_validate(capsys):
    """Test topology output."""
    code, payload = run_json(capsys, ["validate", "--builtin", "regular-2n-gon", "--n", "4"])
    assert code == 0
    assert payload["genus"] == 2
    assert payload["cone_orders"] == [2]
    assert payload["stratum"] == "H(2)"


def test_trace_csv(capsys):
    """Traces default to versioned CSV."""
    assert run(["trace", "--start", "0.3,0.4", "--direction", "0", "--length", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == CSV_VERSION
    assert lines[1] == "face,x_in,y_in,x_out,y_out,cum_length"
    assert float(lines[-1].split(",")[-1]) == pytest.approx(1.0)


def test_trace_json(capsys):
    """--format json gives the summary."""
    code, payload = run_json(
        capsys,
        ["trace", "--start", "0.3,0.4", "--direction", "0", "--length", "10", "--format", "json"],
    )
    assert code == 0
    assert payload["termination"] == "Closed"
    assert payload["total_length"] == pytest.approx(1.0)


def test_billiard_and_unfold(capsys):
    """Test table subcommands."""
    code, payload = run_json(
        capsys,
        ["billiard", "--start", "0.75,0.25", "--direction", "0.7853981633974483", "--format", "json"],
    )
    assert code == 0
    assert payload["termination"] == "Closed"
    assert payload["reflections"] == 4

    code, payload = run_json(capsys, ["unfold", "--table", "right-isosceles"])
    assert code == 0
    assert payload["copies"] == 8
    assert payload["genus"] == 1


def test_windtree(capsys, tmp_path):
    """Windtree output can go to a file."""
    target = tmp_path / "path.csv"
    assert run(["windtree", "--m", "0", "--direction", "0.3", "-T", "5", "-o", str(target)]) == 0
    assert capsys.readouterr().out == ""
    lines = target.read_text().splitlines()
    assert lines[0] == CSV_VERSION
    assert lines[1] == "t,x,y"
    assert len(lines) == 4


def test_baseline_check(capsys):
    """--check passes a drifting walk against the ballistic target."""
    code, payload = run_json(
        capsys,
        ["baseline", "--steps", "10000", "--trials", "3", "--drift", "1", "--check", "--tol", "0.2"],
    )
    assert code == 0
    assert payload["passed"] is True
    assert payload["target"] == 1.0


def test_usage_errors(capsys):
    """Bad flags exit 2 with a JSON error."""
    assert run(["act", "--matrix", "1,0,0"]) == 2
    error = json.loads(capsys.readouterr().err.splitlines()[-1])
    assert error["error"] == "UsageError"
    assert run(["validate", "--n", "1"]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["validate", "--help"]) == 0


def test_runtime_errors(capsys):
    """Domain errors exit 1."""
    assert run(["windtree", "--start", "0.5,0.5"]) == 1
    error = json.loads(capsys.readouterr().err.splitlines()[-1])
    assert error["error"] == "StartInsideObstacle"
    assert run(["act"]) == 1
    assert run(["unfold", "--table", "triangle", "--angles", "1,1"]) == 1


def test_seed_sources(monkeypatch, tmp_path):
    """Flags beat the config file, and the seed falls back to the environment."""
    monkeypatch.delenv("FLATTRACE_SEED", raising=False)
    assert parse_config(["validate"]).seed == 0
    monkeypatch.setenv("FLATTRACE_SEED", "5")
    assert parse_config(["validate"]).seed == 5
    assert parse_config(["validate", "--seed", "3"]).seed == 3
    monkeypatch.setenv("FLATTRACE_SEED", "five")
    with pytest.raises(UsageError):
        parse_config(["validate"])

    config_file = tmp_path / "run.json"
    config_file.write_text(json.dumps({"direction": 0.5, "length": 3.0, "seed": 9}))
    config = parse_config(["trace", "--config", str(config_file), "--length", "4"])
    assert config.direction == 0.5
    assert config.length == 4.0
    assert config.seed == 9


def test_run_config():
    """Test config validation."""
    config = RunConfig(subcommand="trace", eps_len=1e-7)
    assert config.tolerance.eps_len == 1e-7
    assert config.surface_spec().builtin == "unit-torus"
    with pytest.raises(ValidationError):
        RunConfig(subcommand="trace", length=float("inf"))
    with pytest.raises(ValidationError):
        RunConfig(subcommand="trace", colour="red")
    with pytest.raises(ValidationError):
        RunConfig(subcommand="diffusion", tmax=10.0)


def test_specs():
    """Test surface, table and scene specs."""
    torus = SurfaceSpec(edges=[(1, 0), (0, 1), (-1, 0), (0, -1)], pairing=[2, 3, 0, 1])
    assert torus.build(RunConfig(subcommand="validate").tolerance).area == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        SurfaceSpec(builtin="unit-torus", edges=[(1, 0)])
    with pytest.raises(ValidationError):
        SurfaceSpec(edges=[(1, 0), (0, 1), (-1, 0), (0, -1)])
    with pytest.raises(ValidationError):
        TableSpec(builtin="triangle")
    assert SceneSpec(m=2).build().corner_counts() == (8, 4)
    with pytest.raises(BadDimensions):
        SceneSpec(m=1, cell=[[1.0, 1.0], [0.0, 1.0]]).build()


def test_acceptance_pieces():
    """Cheap acceptance criteria pass and the table reports them."""
    budget = dataclasses.replace(QUICK, fold_trials=5, fold_reflections=50)
    results = [check_topology(budget, 0, 1), check_unfolding(budget, 0, 1)]
    assert all(result.passed for result in results)
    failing = CriterionResult(99, "made up", "1", "0", False)
    table = format_table(results + [failing], seed=0, quick=True)
    assert "2/3 criteria passed" in table
    assert "FAIL" in table


def test_malformed_spec_files(capsys, tmp_path):
    """Spec files that fail validation or parsing are usage errors."""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert run(["validate", "--spec", str(bad)]) == 2
    error = json.loads(capsys.readouterr().err.splitlines()[-1])
    assert error["error"] == "ValidationError"

    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert run(["windtree", "--scene", str(garbled)]) == 2
    error = json.loads(capsys.readouterr().err.splitlines()[-1])
    assert error["error"] == "JSONDecodeError"

    assert run(["validate", "--spec", str(tmp_path / "missing.json")]) == 1


def test_generic_obstacle():
    """The diffusion criterion runs on a rectangle with irrational side ratio."""
    width, height = GENERIC_OBSTACLE
    ratio = Fraction(width / height).limit_denominator(50)
    assert abs(float(ratio) - width / height) > 1e-4
    scene = windtree_scene(1, {"width": width, "height": height})
    assert scene.half_widths == pytest.approx((width / 2,))
    assert scene.half_heights == pytest.approx((height / 2,))


def test_acceptance_timing():
    """Per-criterion seconds reach the table and the JSON rows."""
    results = [
        CriterionResult(1, "first", "1", "1", True, seconds=1.5),
        CriterionResult(2, "second", "2", "2", True, seconds=0.5),
    ]
    table = format_table(results, seed=0, quick=True)
    assert "time" in table.splitlines()[1]
    assert "1.5s" in table
    assert "2/2 criteria passed in 2.0 s" in table
    assert [row["seconds"] for row in results_as_dicts(results)] == [1.5, 0.5]
