"""Input specs and run configuration."""
import json
import logging
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .billiards import BilliardTable
from .geometry import Tolerance, Vec2
from .patterns import builtin
from .surface import PolygonPattern, TranslationSurface, build_from_pattern
from .windtree import WindtreeScene, windtree_scene

LOGGER = logging.getLogger(__name__)

Pair = Tuple[float, float]


class SurfaceSpec(BaseModel):
    """Surface-spec JSON: a builtin, one polygon, or several polygons."""

    model_config = ConfigDict(extra="forbid")

    builtin: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    edges: Optional[List[Pair]] = None
    polygons: Optional[List[List[Pair]]] = None
    origins: Optional[List[Pair]] = None
    pairing: Optional[List[int]] = None

    @model_validator(mode="after")
    def one_source(self):
        """Exactly one of builtin, edges, polygons."""
        given = [name for name in ("builtin", "edges", "polygons") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of builtin, edges, polygons")
        if self.builtin is None and self.pairing is None:
            raise ValueError("pairing is required with edges or polygons")
        return self

    def pattern(self) -> PolygonPattern:
        """Polygon pattern described by the spec."""
        if self.builtin is not None:
            return builtin(self.builtin, self.params)
        polygons = [self.edges] if self.edges is not None else self.polygons
        origins = tuple(Vec2(*p) for p in self.origins) if self.origins else None
        return PolygonPattern(
            tuple(tuple(Vec2(*edge) for edge in polygon) for polygon in polygons),
            tuple(self.pairing),
            origins,
        )

    def build(self, tol: Tolerance) -> TranslationSurface:
        """Glue the surface."""
        return build_from_pattern(self.pattern(), tol)


class TableSpec(BaseModel):
    """Billiard table: a named table or explicit vertices."""

    model_config = ConfigDict(extra="forbid")

    builtin: Optional[Literal["square", "right-isosceles", "triangle"]] = None
    angles: Optional[Pair] = None
    vertices: Optional[List[Pair]] = None

    @model_validator(mode="after")
    def one_source(self):
        """Exactly one of builtin, vertices."""
        if (self.builtin is None) == (self.vertices is None):
            raise ValueError("give exactly one of builtin, vertices")
        if self.builtin == "triangle" and self.angles is None:
            raise ValueError("a triangle table needs two angles")
        return self

    def build(self, tol: Tolerance) -> BilliardTable:
        """Make the table."""
        if self.vertices is not None:
            return BilliardTable.polygon(self.vertices, tol)
        if self.builtin == "square":
            return BilliardTable.square()
        if self.builtin == "right-isosceles":
            return BilliardTable.right_isosceles()
        return BilliardTable.triangle(*self.angles)


class SceneSpec(BaseModel):
    """Windtree scene JSON, e.g. {"m": 2, "cell": [[1, 0], [0, 1]], "obstacle": {...}}."""

    model_config = ConfigDict(extra="forbid")

    m: int = Field(1, ge=0)
    cell: Any = (1.0, 1.0)
    obstacle: Dict[str, Any] = Field(default_factory=dict)

    def build(self) -> WindtreeScene:
        """Make the scene."""
        return windtree_scene(self.m, {"cell": self.cell, "obstacle": self.obstacle})


def load_spec(model, path: str):
    """Parse a JSON spec file into a model."""
    with open(path, encoding="utf-8") as stream:
        data = json.load(stream)
    return model.model_validate(data)


class RunConfig(BaseModel):
    """Validated parameters of one CLI run.

    Lengths are in flat-metric units and angles in radians.
    """

    model_config = ConfigDict(extra="forbid")

    subcommand: str
    # inputs
    spec: Optional[str] = None
    builtin: Optional[str] = None
    n: Optional[int] = Field(None, ge=2)
    side: Optional[float] = Field(None, gt=0)
    w: Optional[float] = Field(None, gt=0)
    h: Optional[float] = Field(None, gt=0)
    lam: Optional[float] = Field(None, gt=0, lt=1)
    table: Optional[str] = None
    angles: Optional[Pair] = None
    scene: Optional[str] = None
    m: int = Field(1, ge=0)
    width: Optional[float] = Field(None, gt=0)
    height: Optional[float] = Field(None, gt=0)
    # positions and directions
    start: Optional[Pair] = None
    face: Optional[int] = Field(None, ge=0)
    direction: float = 0.0
    # budgets
    length: Optional[float] = Field(None, gt=0)
    crossings: Optional[int] = Field(None, ge=1)
    reflections: Optional[int] = Field(None, ge=1)
    T: float = Field(1000.0, gt=0)
    # moduli
    matrix: Optional[Tuple[float, float, float, float]] = None
    theta: Optional[float] = None
    t: float = 0.0
    t_max: float = Field(10.0, gt=0)
    dt: float = Field(0.5, gt=0)
    renormalize: bool = False
    saddle_length: Optional[float] = Field(None, gt=0)
    # experiments
    tmax: float = Field(1e7, ge=1e3)
    directions: int = Field(20, ge=1)
    steps: int = Field(10 ** 6, ge=10 ** 4)
    trials: int = Field(100, ge=1)
    drift: float = 0.0
    rays: int = Field(10_000, ge=1)
    ray_length: float = Field(200.0, gt=0)
    grid: int = Field(10, ge=1)
    lengths: List[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5])
    check: bool = False
    tol: float = Field(0.1, gt=0)
    # run
    seed: int = Field(0, ge=0)
    eps_len: float = Field(1e-9, gt=0)
    eps_angle: float = Field(1e-9, gt=0)
    threads: int = Field(1, ge=1)
    output: Optional[str] = None
    format: Optional[Literal["csv", "json"]] = None
    quick: bool = False
    verbose: bool = False

    @model_validator(mode="after")
    def finite(self):
        """Reject non-finite numbers."""
        for name, value in self:
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def tolerance(self) -> Tolerance:
        """Tolerances as a Tolerance."""
        return Tolerance(self.eps_len, self.eps_angle)

    def surface_spec(self) -> SurfaceSpec:
        """Surface spec from --spec or --builtin and its parameters."""
        if self.spec is not None:
            return load_spec(SurfaceSpec, self.spec)
        params = {
            key: value
            for key, value in (("n", self.n), ("side", self.side), ("w", self.w), ("h", self.h), ("lam", self.lam))
            if value is not None
        }
        return SurfaceSpec(builtin=self.builtin or "unit-torus", params=params)

    def table_spec(self) -> TableSpec:
        """Table spec from --spec or --table."""
        if self.spec is not None:
            return load_spec(TableSpec, self.spec)
        return TableSpec(builtin=self.table or "square", angles=self.angles)

    def scene_spec(self) -> SceneSpec:
        """Scene spec from --scene or --m and the rectangle flags."""
        if self.scene is not None:
            return load_spec(SceneSpec, self.scene)
        obstacle = {
            key: value
            for key, value in (("width", self.width), ("height", self.height))
            if value is not None
        }
        return SceneSpec(m=self.m, obstacle=obstacle)
