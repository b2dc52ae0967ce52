"""Experiment configuration: INI files with [model], [grid], [solver], [experiment].

Specs are plain key-value text. Every builder validates before any
solver step runs and raises SpecError naming the violated invariant.
Bundled specs ship with the package and can be referenced by bare name.
"""

from __future__ import annotations

import configparser
import importlib.resources
from pathlib import Path

import numpy as np

from . import reaction_diffusion as rd
from .asymptotics import EpsilonLadder
from .errors import SpecError
from .expressions import compile_expression
from .fields import Grid, ScalarField, read_field
from .hamilton_jacobi import first_order_cfl, curvature_cfl, speed_field
from .models import (BistableModel, VelocityModel, circle_interface,
                     far_interface, hyperplane_interface, wave_front_initial)

MODEL_DEFAULTS = {"rho": 0.05, "k": 0.25, "scaling": "one"}
BOUNDARY_ALIASES = {"neumann": "zero-normal-derivative",
                    "zero-normal-derivative": "zero-normal-derivative",
                    "periodic": "periodic"}


def resolve_spec_path(name_or_path: str) -> Path:
    """A filesystem path, or the name of a bundled spec."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = importlib.resources.files("frontlim") / "specs" / (
        name_or_path if name_or_path.endswith(".ini") else name_or_path + ".ini")
    if bundled.is_file():
        return Path(str(bundled))
    raise SpecError("spec %r not found (no such file and no bundled spec)"
                    % name_or_path)


def load_spec(name_or_path: str, overrides=()) -> configparser.ConfigParser:
    path = resolve_spec_path(name_or_path)
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    with open(path) as fh:
        cfg.read_file(fh, source=str(path))
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise SpecError("override %r is not of the form section.key=value" % item)
        key, value = item.split("=", 1)
        section, option = key.split(".", 1)
        if not cfg.has_section(section):
            cfg.add_section(section)
        cfg.set(section, option.strip(), value.strip())
    return cfg


def _get(cfg, section, key, default=None, required=False):
    if cfg.has_option(section, key):
        return cfg.get(section, key).strip()
    if required:
        raise SpecError("missing required option [%s] %s" % (section, key))
    return default


def _get_float(cfg, section, key, default=None, required=False):
    raw = _get(cfg, section, key, None, required)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise SpecError("option [%s] %s must be a number, got %r"
                        % (section, key, raw)) from None


def _get_int(cfg, section, key, default=None, required=False):
    raw = _get(cfg, section, key, None, required)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise SpecError("option [%s] %s must be an integer, got %r"
                        % (section, key, raw)) from None


def _csv_floats(raw: str, what: str):
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise SpecError("%s must be comma-separated numbers, got %r"
                        % (what, raw)) from None


def build_grid(cfg) -> Grid:
    origin = _csv_floats(_get(cfg, "grid", "origin", required=True),
                         "[grid] origin")
    raw_ext = _get(cfg, "grid", "extents", required=True)
    try:
        extents = tuple(int(v) for v in raw_ext.split(","))
    except ValueError:
        raise SpecError("[grid] extents must be comma-separated integers") from None
    h = _get_float(cfg, "grid", "h", required=True)
    raw_b = _get(cfg, "grid", "boundary", "zero-normal-derivative")
    if raw_b not in BOUNDARY_ALIASES:
        raise SpecError("[grid] boundary must be one of %s"
                        % sorted(BOUNDARY_ALIASES))
    return Grid(origin=origin, h=h, extents=extents,
                boundary=BOUNDARY_ALIASES[raw_b])


def _speed_value(raw: str):
    try:
        return float(raw)
    except ValueError:
        return compile_expression(raw)


def _build_interface(raw: str):
    parts = raw.split()
    kind = parts[0] if parts else ""
    kv = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise SpecError("[model] interface parameters must be key=value, got %r"
                            % tok)
        k, v = tok.split("=", 1)
        kv[k] = v
    if kind == "hyperplane":
        if "v" not in kv or "b" not in kv:
            raise SpecError("[model] hyperplane interface needs v=<csv> b=<num>")
        return hyperplane_interface(_csv_floats(kv["v"], "interface v"),
                                    float(kv["b"]))
    if kind == "circle":
        if "c" not in kv or "R" not in kv:
            raise SpecError("[model] circle interface needs c=<csv> R=<num>")
        return circle_interface(_csv_floats(kv["c"], "interface c"),
                                float(kv["R"]))
    if kind == "none":
        return far_interface(float(kv.get("distance", 1e9)))
    raise SpecError("[model] interface must be hyperplane, circle or none, got %r"
                    % kind)


def build_velocity(cfg) -> VelocityModel:
    n1 = _speed_value(_get(cfg, "model", "n1", required=True))
    n2 = _speed_value(_get(cfg, "model", "n2", required=True))
    interface = _build_interface(_get(cfg, "model", "interface", "none"))
    rho = _get_float(cfg, "model", "rho", MODEL_DEFAULTS["rho"])
    k = _get_float(cfg, "model", "k", MODEL_DEFAULTS["k"])
    return VelocityModel(n1=n1, n2=n2, dtilde=interface, rho=rho, k=k)


def build_bistable(cfg) -> BistableModel:
    velocity = build_velocity(cfg)
    epsilon = _get_float(cfg, "model", "epsilon", required=True)
    scaling = _get(cfg, "model", "scaling", MODEL_DEFAULTS["scaling"])
    return BistableModel(velocity=velocity, epsilon=epsilon, scaling=scaling)


def initial_spec(cfg) -> str:
    return _get(cfg, "experiment", "initial", required=True)


def build_levelset_initial(cfg, grid: Grid) -> ScalarField:
    """Initial level-set data: an expression in x, or a field file.

    A ``wavefront:<expr>`` initial (reaction-diffusion profile seeded on
    the zero set of the expression) degrades gracefully here: the inner
    expression itself is the natural level-set data for the same front.
    """
    raw = initial_spec(cfg)
    if raw.startswith("file:"):
        return read_field(raw[len("file:"):].strip(), boundary=grid.boundary)
    if raw.startswith("wavefront:"):
        raw = raw[len("wavefront:"):].strip()
    fn = compile_expression(raw)
    return ScalarField(grid, fn(grid.points()).reshape(grid.shape))


def build_rd_initial(cfg, model: BistableModel, grid: Grid) -> ScalarField:
    """Reaction-diffusion initial data.

    ``wavefront:<expr>`` seeds the exact traveling-wave profile across
    the zero set of the expression; a bare expression or ``file:`` is
    used directly and must take values in [-1, 1].
    """
    raw = initial_spec(cfg)
    if raw.startswith("wavefront:"):
        fn = compile_expression(raw[len("wavefront:"):].strip())
        s = fn(grid.points()).reshape(grid.shape)
        return wave_front_initial(model, grid, s)
    if raw.startswith("file:"):
        return read_field(raw[len("file:"):].strip(), boundary=grid.boundary)
    fn = compile_expression(raw)
    return ScalarField(grid, fn(grid.points()).reshape(grid.shape))


def initial_builder(cfg):
    """Per-(model, grid) initial-data factory for ladder runs."""
    def build(model, grid):
        return build_rd_initial(cfg, model, grid)
    return build


def reference_level_values(cfg, grid: Grid, velocity: VelocityModel) -> np.ndarray:
    """Level-set values whose zero set is the initial front."""
    raw = initial_spec(cfg)
    if raw.startswith("wavefront:"):
        fn = compile_expression(raw[len("wavefront:"):].strip())
        return fn(grid.points()).reshape(grid.shape)
    if raw.startswith("file:"):
        raise SpecError("a ladder reference needs an expression initial; "
                        "field files are tied to one grid")
    fn = compile_expression(raw)
    g = fn(grid.points())
    _, upper = velocity.envelopes(grid.points(), snap=0.5 * grid.h)
    return (g - 0.5 * upper).reshape(grid.shape)


def solver_dt(cfg, bound: float) -> float:
    raw = _get(cfg, "solver", "dt", "auto")
    safety = _get_float(cfg, "solver", "safety", 0.9)
    if raw == "auto":
        if not (0 < safety <= 1):
            raise SpecError("[solver] safety must lie in (0, 1]")
        return safety * bound
    try:
        return float(raw)
    except ValueError:
        raise SpecError("[solver] dt must be a number or 'auto'") from None


def build_rd_config(cfg, model: BistableModel, grid: Grid) -> rd.RDConfig:
    t_end = _get_float(cfg, "solver", "t_end", required=True)
    dt = solver_dt(cfg, rd.cfl_bound(model, grid))
    record_every = _get_int(cfg, "solver", "record_every", 1)
    return rd.RDConfig(model=model, grid=grid, dt=dt, t_end=t_end,
                       record_every=record_every)


def build_hj_config(cfg, grid: Grid, model, curvature: bool):
    from .hamilton_jacobi import HJConfig

    mode = _get(cfg, "solver", "velocity_mode", "lower_envelope")
    eps_raw = _get(cfg, "solver", "eps", "auto")
    if eps_raw == "auto":
        eps = model.epsilon if isinstance(model, BistableModel) else None
    else:
        eps = float(eps_raw)
    snap_raw = _get(cfg, "solver", "snap", "auto")
    snap = None if snap_raw == "auto" else float(snap_raw)
    floor_raw = _get(cfg, "solver", "grad_floor", "auto")
    grad_floor = None if floor_raw == "auto" else float(floor_raw)
    t_end = _get_float(cfg, "solver", "t_end", required=True)

    speed = speed_field(model, grid, mode, eps=eps, snap=snap)
    bound = first_order_cfl(grid, float(speed.max()))
    if curvature:
        bound = min(bound, curvature_cfl(grid))
    dt = solver_dt(cfg, bound)
    return HJConfig(grid=grid, dt=dt, t_end=t_end, velocity_mode=mode, eps=eps,
                    record_every=_get_int(cfg, "solver", "record_every", 1),
                    curvature=curvature, grad_floor=grad_floor, snap=snap,
                    reinit_every=_get_int(cfg, "solver", "reinit_every", 0))


def build_ladder(cfg, velocity: VelocityModel, grid: Grid,
                 scaling: str) -> EpsilonLadder:
    """Ladder over the domain of [grid]; spacing follows the width policy.

    Each entry refines on its own (h <= min(eps, eps^k)/4); the [grid]
    spacing only describes the base domain, it does not cap the ladder.
    """
    raw = _get(cfg, "experiment", "epsilons", required=True)
    epsilons = _csv_floats(raw, "[experiment] epsilons")
    lengths = tuple((n - 1) * grid.h for n in grid.extents)
    return EpsilonLadder(velocity=velocity, epsilons=epsilons,
                         origin=grid.origin, lengths=lengths, scaling=scaling,
                         boundary=grid.boundary)


def experiment_times(cfg) -> tuple[float, ...]:
    raw = _get(cfg, "experiment", "times", required=True)
    times = _csv_floats(raw, "[experiment] times")
    if any(t < 0 for t in times):
        raise SpecError("[experiment] times must be nonnegative")
    return times


def parse_seed(raw: str, grid: Grid):
    """Arrival seed: ``point:<csv>`` or ``region:<expr>`` (cells with expr <= 0)."""
    if raw.startswith("point:"):
        coords = _csv_floats(raw[len("point:"):], "seed point")
        if len(coords) != grid.dim:
            raise SpecError("seed point has %d coordinates for a %dD grid"
                            % (len(coords), grid.dim))
        return np.asarray(coords)
    if raw.startswith("region:"):
        fn = compile_expression(raw[len("region:"):].strip())
        mask = fn(grid.points()).reshape(grid.shape) <= 0
        if not mask.any():
            raise SpecError("seed region is empty on the grid")
        return mask
    raise SpecError("seed must be 'point:<csv>' or 'region:<expr>', got %r" % raw)


def experiment_name(cfg, fallback: str) -> str:
    return _get(cfg, "experiment", "name", fallback)
