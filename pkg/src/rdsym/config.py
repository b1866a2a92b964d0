"""JSON run configuration: parsing with collected, path-labelled errors, and serialization.

Layout::

    {
      "grid":     {"half_width": 40, "nodes_per_side": 801},      # or "spacing" instead of nodes
      "solver":   {"t_end": 15, "record_interval": 0.5,
                   "cfl_fraction": 0.8, "boundary_tolerance": 1e-6},
      "reaction": {"variant": "fisher_kpp", "rho": 1.0},
      "scenario": {"variant": "symmetrization", "datum": {"bumps": [...]}, "thetas": [0.5],
                   "ray_count": 720, "late_fraction": 0.5},
      "output":   {"directory": "out", "snapshots": false, "snapshot_stride": 1,
                   "snapshot_prefix": "snap"},
      "seed": 0
    }
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .exceptions import ConfigError, ContractViolation
from .experiments import SCENARIOS, Setting
from .fields import Bump, DatumSpec, GridSpec
from .geometry import DEFAULT_RAYS
from .reactions import ReactionTerm, reaction_from_dict
from .solver import SolverConfig

DATUM_KEYS = {"datum", "u1", "u2", "datum1", "datum2"}
VECTOR_KEYS = {"xi", "origin", "window", "shift"}
_MISSING = object()


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    snapshots: bool = False
    snapshot_stride: int = 1
    snapshot_prefix: str = "snap"


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    reaction: ReactionTerm
    scenario: object
    output: OutputSpec = OutputSpec()
    ray_count: int = DEFAULT_RAYS
    late_fraction: float = 0.5
    seed: int = 0

    @property
    def grid(self) -> GridSpec:
        return self.solver.grid

    def setting(self, seed=None, threads=1) -> Setting:
        return Setting(self.solver, self.reaction, self.ray_count,
                       self.seed if seed is None else seed, threads, self.late_fraction)


class _Collector:
    def __init__(self):
        self.errors = []

    def fail(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def section(self, doc, key):
        val = doc.get(key, _MISSING)
        if val is _MISSING:
            self.fail(key, "missing section")
            return None
        if not isinstance(val, dict):
            self.fail(key, "must be an object")
            return None
        return val

    def number(self, d, key, path, default=_MISSING, integer=False, check=None, msg=""):
        val = d.get(key, default)
        if val is _MISSING:
            self.fail(f"{path}.{key}", "required")
            return None
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(f"{path}.{key}", "must be a number")
            return None
        if integer and int(val) != val:
            self.fail(f"{path}.{key}", "must be an integer")
            return None
        val = int(val) if integer else float(val)
        if check is not None and not check(val):
            self.fail(f"{path}.{key}", msg)
            return None
        return val

    def unknown(self, d, allowed, path):
        for k in d:
            if k not in allowed:
                self.fail(f"{path}.{k}", "unknown key")


def _loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError([f"syntax error at line {err.lineno}, column {err.colno}: {err.msg}"])


def _grid(c: _Collector, d):
    if d is None:
        return None
    c.unknown(d, {"half_width", "nodes_per_side", "spacing"}, "grid")
    L = c.number(d, "half_width", "grid", check=lambda v: v > 0 and math.isfinite(v),
                 msg="must be positive")
    if "nodes_per_side" in d:
        n = c.number(d, "nodes_per_side", "grid", integer=True, check=lambda v: v >= 3,
                     msg="must be at least 3")
        if n is not None and n % 2 == 0:
            c.fail("grid.nodes_per_side", "nodes_per_side must be odd")
            return None
    elif "spacing" in d:
        h = c.number(d, "spacing", "grid", check=lambda v: v > 0, msg="must be positive")
        if L is None or h is None:
            return None
        try:
            return GridSpec.from_spacing(L, h)
        except ContractViolation as err:
            c.fail("grid.spacing", str(err))
            return None
    else:
        c.fail("grid.nodes_per_side", "required (or give spacing)")
        return None
    if L is None or n is None:
        return None
    return GridSpec(L, n)


def _solver(c: _Collector, d, grid):
    if d is None:
        return None
    c.unknown(d, {"t_end", "record_interval", "cfl_fraction", "boundary_tolerance", "boundary"},
              "solver")
    t_end = c.number(d, "t_end", "solver", check=lambda v: v >= 0, msg="must be nonnegative")
    rec = c.number(d, "record_interval", "solver", check=lambda v: v > 0, msg="must be positive")
    cfl = c.number(d, "cfl_fraction", "solver", 0.8, check=lambda v: 0 < v < 1,
                   msg="must lie in (0, 1)")
    tol = c.number(d, "boundary_tolerance", "solver", 1e-6, check=lambda v: v > 0,
                   msg="must be positive")
    if d.get("boundary", "dirichlet") != "dirichlet":
        c.fail("solver.boundary", "only 'dirichlet' is supported")
    if None in (grid, t_end, rec, cfl, tol):
        return None
    try:
        return SolverConfig(grid, t_end, rec, cfl, tol)
    except ContractViolation as err:
        c.fail("solver", str(err))
        return None


def _reaction(c: _Collector, d, path):
    if d is None:
        return None
    try:
        return reaction_from_dict(d)
    except (ContractViolation, TypeError, ValueError) as err:
        c.fail(path, str(err))
        return None


def _datum(c: _Collector, d, path, grid):
    if not isinstance(d, dict) or not isinstance(d.get("bumps"), list):
        c.fail(path, "must be an object with a 'bumps' list")
        return None
    bumps = []
    for k, b in enumerate(d["bumps"]):
        p = f"{path}.bumps[{k}]"
        if not isinstance(b, dict):
            c.fail(p, "must be an object")
            continue
        try:
            bump = Bump(**b)
        except (ContractViolation, TypeError, ValueError) as err:
            c.fail(p, str(err))
            continue
        if grid is not None:
            L = grid.half_width
            if max(abs(bump.center[0]), abs(bump.center[1])) + bump.radius >= L:
                c.fail(p, f"support does not fit strictly inside [-{L}, {L}]^2")
        bumps.append(bump)
    if not d["bumps"]:
        c.fail(f"{path}.bumps", "needs at least one bump")
    if len(bumps) != len(d["bumps"]) or not bumps:
        return None
    return DatumSpec(tuple(bumps))


def _vector(c: _Collector, val, path):
    if not isinstance(val, (list, tuple)) or len(val) != 2 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        c.fail(path, "must be a pair of numbers")
        return None
    return (float(val[0]), float(val[1]))


def _thresholds(c: _Collector, kw, reaction, path):
    if reaction is None:
        return
    Z = reaction.Z
    for key in ("theta", "theta_prime"):
        if key in kw and kw[key] is not None and not 0 < kw[key] < Z:
            c.fail(f"{path}.{key}", f"threshold outside (0, Z) with Z={Z}")
    for k, th in enumerate(kw.get("thetas", ())):
        if not 0 < th < Z:
            c.fail(f"{path}.thetas[{k}]", f"threshold outside (0, Z) with Z={Z}")


def _scenario(c: _Collector, d, grid, reaction):
    if d is None:
        return None, DEFAULT_RAYS, 0.5
    d = dict(d)
    variant = d.pop("variant", None)
    if variant not in SCENARIOS:
        c.fail("scenario.variant", f"unknown scenario {variant!r}; expected one of "
                                   f"{sorted(SCENARIOS)}")
        return None, DEFAULT_RAYS, 0.5
    rays = c.number(d, "ray_count", "scenario", DEFAULT_RAYS, integer=True,
                    check=lambda v: v >= 8, msg="must be at least 8")
    late = c.number(d, "late_fraction", "scenario", 0.5, check=lambda v: 0 < v <= 1,
                    msg="must lie in (0, 1]")
    d.pop("ray_count", None)
    d.pop("late_fraction", None)
    cls = SCENARIOS[variant]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    c.unknown(d, set(fields), "scenario")
    kw, ok = {}, True
    for name, f in fields.items():
        path = f"scenario.{name}"
        if name not in d:
            if f.default is dataclasses.MISSING:
                c.fail(path, "required")
                ok = False
            continue
        val = d[name]
        if name in DATUM_KEYS:
            kw[name] = _datum(c, val, path, grid)
        elif name in VECTOR_KEYS:
            kw[name] = _vector(c, val, path)
        elif name == "thetas":
            if not isinstance(val, list) or not val or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
                c.fail(path, "must be a nonempty list of numbers")
                kw[name] = None
            else:
                kw[name] = tuple(float(v) for v in val)
        elif name == "g":
            kw[name] = None if val is None else _reaction(c, val, path)
        else:
            kw[name] = c.number(d, name, "scenario")
        if kw[name] is None and val is not None:
            ok = False
    _thresholds(c, kw, reaction, "scenario")
    if not ok:
        return None, rays, late
    try:
        return cls(**kw), rays, late
    except (ContractViolation, TypeError, ValueError) as err:
        c.fail("scenario", str(err))
        return None, rays, late


def _output(c: _Collector, d):
    if d is None:
        return OutputSpec()
    c.unknown(d, {f.name for f in dataclasses.fields(OutputSpec)}, "output")
    directory = d.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        c.fail("output.directory", "must be a nonempty string")
    snaps = d.get("snapshots", False)
    if not isinstance(snaps, bool):
        c.fail("output.snapshots", "must be true or false")
    stride = c.number(d, "snapshot_stride", "output", 1, integer=True, check=lambda v: v >= 1,
                      msg="must be a positive integer")
    prefix = d.get("snapshot_prefix", "snap")
    if not isinstance(prefix, str) or not prefix or "/" in prefix:
        c.fail("output.snapshot_prefix", "must be a nonempty file-name prefix")
    return OutputSpec(directory, snaps, stride, prefix)


def parse_config(text) -> RunConfig:
    """Parses and validates; raises :class:`ConfigError` listing every problem found."""
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be an object"])
    c = _Collector()
    c.unknown(doc, {"grid", "solver", "reaction", "scenario", "output", "seed"}, "config")
    grid = _grid(c, c.section(doc, "grid"))
    solver = _solver(c, c.section(doc, "solver"), grid)
    reaction = _reaction(c, c.section(doc, "reaction"), "reaction")
    scenario, rays, late = _scenario(c, c.section(doc, "scenario"), grid, reaction)
    output = _output(c, doc.get("output") if isinstance(doc.get("output"), dict) else None)
    seed = c.number(doc, "seed", "config", 0, integer=True)
    if c.errors:
        raise ConfigError(c.errors)
    return RunConfig(solver, reaction, scenario, output, rays, late, seed)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _datum_dict(datum: DatumSpec):
    return {"bumps": [{"center": list(b.center), "radius": b.radius, "height": b.height,
                       "profile": b.profile} for b in datum.bumps]}


def config_to_dict(cfg: RunConfig) -> dict:
    s = cfg.solver
    scen = {"variant": cfg.scenario.kind}
    for f in dataclasses.fields(cfg.scenario):
        val = getattr(cfg.scenario, f.name)
        if isinstance(val, DatumSpec):
            val = _datum_dict(val)
        elif isinstance(val, ReactionTerm):
            val = val.to_dict()
        elif isinstance(val, tuple):
            val = list(val)
        scen[f.name] = val
    scen.update(ray_count=cfg.ray_count, late_fraction=cfg.late_fraction)
    return {
        "grid": {"half_width": s.grid.half_width, "nodes_per_side": s.grid.n},
        "solver": {"t_end": s.t_end, "record_interval": s.record_interval,
                   "cfl_fraction": s.cfl_fraction, "boundary_tolerance": s.boundary_tolerance},
        "reaction": cfg.reaction.to_dict(),
        "scenario": scen,
        "output": dataclasses.asdict(cfg.output),
        "seed": cfg.seed,
    }


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"
