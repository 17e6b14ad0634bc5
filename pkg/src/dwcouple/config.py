"""Problem configuration in TOML.

Example::

    mode = "adaptive"            # single_solve | adaptive | uniform_study
    output = "out"

    [geometry]
    shape = "unit_square"        # unit_square | l_shape | polygon
    # vertices = [[0, 0], [2, 0], [0, 1]]   (shape = "polygon")
    h0 = 0.25
    labels = { 0 = "S" }         # side index -> "T" | "S"; unlisted sides are "T"

    [wells]
    f1 = [-1.0, 0.0]
    f2 = [1.0, 0.0]

    [data]
    f = "0.2"
    t0 = "0"
    u0 = "0"

    [solver]
    tol = 1e-8
    max_iter = 100
    # seed = 1                   random initial guess

    [adaptivity]
    theta = 0.5
    max_levels = 6
    dof_budget = 1000000
    eta_target = 0.0
    dist_surrogate = false

Side ``i`` of a polygon runs from vertex ``i`` to vertex ``i + 1``.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from shapely.geometry import LinearRing

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .assembly import ProblemData
from .estimator import AdaptiveOptions
from .expression import Expression, ExpressionError, parse_expression
from .mesh import NAMED_GEOMETRIES, BoundaryLabel, Mesh, Polygon, generate_initial_mesh
from .potential import WellParams
from .solver import SolveOptions

MODES = ("single_solve", "adaptive", "uniform_study")

_SCHEMA = {
    "": {"mode", "output", "geometry", "wells", "data", "solver", "adaptivity"},
    "geometry": {"shape", "vertices", "h0", "labels"},
    "wells": {"f1", "f2"},
    "data": {"f", "t0", "u0"},
    "solver": {"tol", "max_iter", "max_newton", "seed", "mean_constraint"},
    "adaptivity": {"theta", "max_levels", "dof_budget", "eta_target", "dist_surrogate"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass
class ProblemConfig:
    polygon: Polygon
    side_labels: tuple
    h0: float
    wells: WellParams
    f: Expression
    t0: Expression
    u0: Expression
    mode: str = "single_solve"
    output: str = "out"
    tol: float = 1e-8
    max_iter: int = 100
    max_newton: int = 200
    mean_constraint: bool = True
    seed: int | None = None
    theta: float = 0.5
    max_levels: int = 6
    dof_budget: int = 10 ** 6
    eta_target: float = 0.0
    dist_surrogate: bool = False
    source: dict = field(default_factory=dict, repr=False)

    def initial_mesh(self) -> Mesh:
        return generate_initial_mesh(self.polygon, list(self.side_labels), self.h0)

    def problem_data(self) -> ProblemData:
        return ProblemData(f=self.f, t0=self.t0, u0=self.u0)

    def solve_options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol, max_iter=self.max_iter, max_newton=self.max_newton,
                            mean_constraint=self.mean_constraint, seed=self.seed)

    def adaptive_options(self) -> AdaptiveOptions:
        mode = "uniform" if self.mode == "uniform_study" else "adaptive"
        return AdaptiveOptions(mode=mode, theta=self.theta, max_levels=self.max_levels,
                               dof_budget=self.dof_budget, eta_target=self.eta_target,
                               with_dist=self.dist_surrogate)

    def with_overrides(self, **kw) -> "ProblemConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "theta" in kw:
            _check_theta(kw["theta"], "theta")
        if "max_levels" in kw and kw["max_levels"] < 1:
            raise ConfigError("must be at least 1", "levels")
        return replace(self, **kw)


def _check_theta(theta, name):
    if not 0 < theta <= 1:
        raise ConfigError(f"theta must lie in (0, 1], got {theta}", name)


def _check_keys(table: dict, section: str):
    allowed = _SCHEMA[section]
    for key in table:
        if key not in allowed:
            where = f"{section}.{key}" if section else key
            raise ConfigError("unknown key", where)


def _number(table, key, section, default, kind=float, positive=False):
    name = f"{section}.{key}"
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", name)
    if kind is int and (not isinstance(value, int) and not float(value).is_integer()):
        raise ConfigError(f"expected an integer, got {value!r}", name)
    value = kind(value)
    if not np.isfinite(value):
        raise ConfigError("must be finite", name)
    if positive and value <= 0:
        raise ConfigError(f"must be positive, got {value!r}", name)
    return value


def _vector(value, name):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a 2-vector, got {value!r}", name) from None
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"expected a finite 2-vector, got {value!r}", name)
    return tuple(float(v) for v in arr)


def _labels(raw, n_sides) -> tuple:
    out = [BoundaryLabel.TRANSMISSION] * n_sides
    if raw is None:
        return tuple(out)
    if isinstance(raw, dict):
        items = []
        for k, v in raw.items():
            try:
                items.append((int(k), v))
            except ValueError:
                raise ConfigError(f"side index {k!r} is not an integer", "geometry.labels") from None
    elif isinstance(raw, list):
        if len(raw) != n_sides:
            raise ConfigError(f"expected {n_sides} labels, got {len(raw)}", "geometry.labels")
        items = list(enumerate(raw))
    else:
        raise ConfigError("expected a table or a list", "geometry.labels")
    for side, lab in items:
        if not 0 <= side < n_sides:
            raise ConfigError(f"no side {side} (polygon has {n_sides})", "geometry.labels")
        lab = str(lab).upper()
        if lab not in ("T", "S"):
            raise ConfigError(f"label must be 'T' or 'S', got {lab!r}", "geometry.labels")
        out[side] = BoundaryLabel.TRANSMISSION if lab == "T" else BoundaryLabel.SIGNORINI
    if BoundaryLabel.TRANSMISSION not in out:
        raise ConfigError("transmission boundary is empty", "geometry.labels")
    return tuple(out)


def parse_config(text: str | bytes) -> ProblemConfig:
    """Parse and validate a TOML configuration."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"not valid UTF-8 (byte {exc.start})") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    _check_keys(raw, "")
    for section in ("geometry", "wells", "data", "solver", "adaptivity"):
        if section in raw and not isinstance(raw[section], dict):
            raise ConfigError("expected a table", section)
        _check_keys(raw.get(section, {}), section)

    mode = raw.get("mode", "single_solve")
    if mode not in MODES:
        raise ConfigError(f"expected one of {', '.join(MODES)}, got {mode!r}", "mode")
    output = raw.get("output", "out")
    if not isinstance(output, str):
        raise ConfigError("expected a path string", "output")

    geo = raw.get("geometry", {})
    shape = geo.get("shape", "unit_square")
    if shape == "polygon":
        if "vertices" not in geo:
            raise ConfigError("polygon needs a vertex list", "geometry.vertices")
        verts = geo["vertices"]
        if not isinstance(verts, list) or len(verts) < 3:
            raise ConfigError("expected at least three vertices", "geometry.vertices")
        polygon = Polygon(tuple(_vector(v, "geometry.vertices") for v in verts))
    elif shape in NAMED_GEOMETRIES:
        if "vertices" in geo:
            raise ConfigError(f"vertices given for named shape {shape!r}", "geometry.vertices")
        polygon = NAMED_GEOMETRIES[shape]
    else:
        raise ConfigError(f"unknown shape {shape!r}", "geometry.shape")
    h0 = _number(geo, "h0", "geometry", 0.25, positive=True)
    side_labels = _labels(geo.get("labels"), polygon.n_sides)

    wells = raw.get("wells", {})
    f1 = _vector(wells.get("f1", [-1.0, 0.0]), "wells.f1")
    f2 = _vector(wells.get("f2", [1.0, 0.0]), "wells.f2")
    if f1 == f2:
        raise ConfigError("f1 and f2 must be distinct", "wells")
    params = WellParams(f1, f2)

    data = raw.get("data", {})
    exprs = {}
    for key in ("f", "t0", "u0"):
        try:
            exprs[key] = parse_expression(data.get(key, "0"))
        except ExpressionError as exc:
            raise ConfigError(str(exc), f"data.{key}") from None

    sol = raw.get("solver", {})
    seed = sol.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError(f"expected a nonnegative integer, got {seed!r}", "solver.seed")
    mean_constraint = sol.get("mean_constraint", True)
    if not isinstance(mean_constraint, bool):
        raise ConfigError("expected true or false", "solver.mean_constraint")

    ad = raw.get("adaptivity", {})
    theta = _number(ad, "theta", "adaptivity", 0.5)
    _check_theta(theta, "adaptivity.theta")
    dist = ad.get("dist_surrogate", False)
    if not isinstance(dist, bool):
        raise ConfigError("expected true or false", "adaptivity.dist_surrogate")

    cfg = ProblemConfig(
        polygon=polygon, side_labels=side_labels, h0=h0, wells=params,
        f=exprs["f"], t0=exprs["t0"], u0=exprs["u0"], mode=mode, output=output,
        tol=_number(sol, "tol", "solver", 1e-8, positive=True),
        max_iter=_number(sol, "max_iter", "solver", 100, int, positive=True),
        max_newton=_number(sol, "max_newton", "solver", 200, int, positive=True),
        mean_constraint=mean_constraint, seed=seed, theta=theta,
        max_levels=_number(ad, "max_levels", "adaptivity", 6, int, positive=True),
        dof_budget=_number(ad, "dof_budget", "adaptivity", 10 ** 6, int, positive=True),
        eta_target=_number(ad, "eta_target", "adaptivity", 0.0),
        dist_surrogate=dist, source=raw)
    if not _is_simple(polygon):
        raise ConfigError("polygon is not simple", "geometry.vertices")
    return cfg


def _is_simple(polygon: Polygon) -> bool:
    return polygon.n_sides >= 3 and LinearRing(polygon.array).is_simple


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
