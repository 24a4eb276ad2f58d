"""Run configuration: TOML files with a fixed set of blocks and keys.

Unknown keys, out-of-range numbers and missing referenced files are
rejected while parsing, so a run never starts on a bad configuration.
"""
from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .boundary import DampedSpecular, Diffuse, Inflow, Maxwellian, Specular
from .coefficients import CoefficientField
from .expr import ExpressionError, compile_expression
from .solver import Grid, SolverConfig

CHECKS = (
    "mass",
    "max_principle",
    "analytic_error",
    "steady_residual",
    "boundary_exponents",
    "energy_ledger",
    "oscillation",
)

SCHEMA: Dict[str, Dict[str, tuple]] = {
    "geometry": {"kind": (str,), "length": (float, int)},
    "coefficients": {
        "A": (str, float, int),
        "B": (str, float, int),
        "c": (str, float, int),
        "s": (str, float, int),
        "Bdiv": (str, float, int),
        "Lambda": (float, int),
    },
    "boundary": {
        "variant": (str,),
        "g": (str, float, int),
        "g_left": (str, float, int),
        "g_right": (str, float, int),
        "preset": (str,),
        "csv": (str,),
        "theta": (float, int),
        "a": (float, int),
        "renormalize": (bool,),
    },
    "grid": {"hx": (float, int), "hv": (float, int), "dt": (float, int), "cfl": (float, int), "V": (float, int), "T": (float, int)},
    "initial": {"f0": (str, float, int), "preset": (str,)},
    "scheme": {"name": (str,), "epsilon": (float, int), "velocity_wall": (str, float, int), "steady_tol": (float, int)},
    "diagnostics": {
        "checks": (list,),
        "mass_tolerance": (float, int),
        "analytic_tolerance": (float, int),
        "max_principle_tolerance": (float, int),
        "ledger_q": (float, int),
        "ledger_tolerance": (float, int),
        "ladder_ratio": (float, int),
        "ladder_depth": (int,),
        "centers": (list,),
    },
    "output": {"dir": (str,), "formats": (list,), "name": (str,)},
}
TOP_LEVEL = set(SCHEMA) | {"seed"}

VARIANTS = ("inflow", "diffuse", "specular", "damped_specular")
PRESETS = ("steady_benchmark",)
FORMATS = ("csv", "json", "png")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: Dict[str, Any]
    source: Optional[Path]
    grid: Grid
    coeffs: CoefficientField
    boundary: Any
    solver: SolverConfig
    f0: Any
    t_end: float
    steady_tol: Optional[float]
    checks: tuple
    diagnostics: Dict[str, Any]
    out_dir: Path
    name: str
    formats: tuple
    seed: int = 0
    preset: Optional[str] = None
    extras: Dict[str, Any] = field(default_factory=dict)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _validate_keys(raw):
    for key in raw:
        _require(key in TOP_LEVEL, f"unknown top-level key {key!r}")
    for block, spec in SCHEMA.items():
        body = raw.get(block, {})
        _require(isinstance(body, dict), f"[{block}] must be a table")
        for key, val in body.items():
            _require(key in spec, f"unknown key {key!r} in [{block}]")
            types = spec[key]
            ok = isinstance(val, types) and not (isinstance(val, bool) and bool not in types)
            _require(ok, f"[{block}].{key} has type {type(val).__name__}")


def _positive(val, what):
    _require(isinstance(val, (int, float)) and math.isfinite(val) and val > 0, f"{what} must be positive and finite")
    return float(val)


def _expr(text, what):
    try:
        return compile_expression(text)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _csv_inflow(path: Path):
    """Tabulated time-independent inflow: columns face, v, g; linear in v."""
    table: Dict[str, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        _require(reader.fieldnames is not None and {"face", "v", "g"} <= set(reader.fieldnames), f"{path} needs columns face, v, g")
        for row in reader:
            table.setdefault(row["face"], []).append((float(row["v"]), float(row["g"])))
    _require(table, f"{path} holds no rows")
    out = {}
    for face, rows in table.items():
        rows.sort()
        vs, gs = np.array(rows).T

        def g(t, x, v, vs=vs, gs=gs):
            return np.interp(v, vs, gs)

        out[face] = g
    return out


def _grid(block, length):
    V = _positive(block.get("V", 3.0), "[grid].V")
    T = _positive(block.get("T", 1.0), "[grid].T")
    hx = _positive(block.get("hx", length / 100), "[grid].hx")
    hv = _positive(block.get("hv", V / 50), "[grid].hv")
    nx = int(round(length / hx))
    nv = int(round(2 * V / hv)) + 1
    _require(nx >= 2 and abs(nx * hx - length) <= 1e-9 * length, "[grid].hx must divide the domain length")
    _require(nv >= 5 and abs((nv - 1) * hv - 2 * V) <= 1e-9 * V, "[grid].hv must divide 2 V")
    _require(nv % 2 == 1, "the velocity grid needs an odd node count so that v = 0 is a node")
    if "dt" in block:
        dt = _positive(block["dt"], "[grid].dt")
        _require(dt * V / (length / nx) <= 0.9 + 1e-12, "[grid].dt violates the CFL limit 0.9")
        return Grid(float(length), nx, V, nv, dt), T
    cfl = _positive(block.get("cfl", 0.9), "[grid].cfl")
    _require(cfl <= 0.9, "[grid].cfl must not exceed 0.9")
    return Grid.with_cfl(float(length), nx, V, nv, cfl, t_end=T), T


def _boundary(block, base: Path, grid):
    variant = block.get("variant", "inflow")
    _require(variant in VARIANTS, f"unknown boundary variant {variant!r}; known: {list(VARIANTS)}")
    if variant == "inflow":
        sources = [k for k in ("g", "preset", "csv") if k in block] + (["g_left/g_right"] if "g_left" in block or "g_right" in block else [])
        _require(len(sources) <= 1, f"inflow data given more than once: {sources}")
        if "preset" in block:
            _require(block["preset"] in PRESETS, f"unknown boundary preset {block['preset']!r}")
            return None, block["preset"]
        if "csv" in block:
            path = (base / block["csv"]).resolve()
            _require(path.is_file(), f"inflow table {path} does not exist")
            return Inflow(_csv_inflow(path)), None
        if "g_left" in block or "g_right" in block:
            return Inflow({side: _expr(block.get(f"g_{side}", 0.0), f"[boundary].g_{side}") for side in ("left", "right")}), None
        return Inflow(_expr(block.get("g", 0.0), "[boundary].g")), None
    if variant == "diffuse":
        theta = _positive(block.get("theta", 1.0), "[boundary].theta")
        return Diffuse(Maxwellian(theta, 1), bool(block.get("renormalize", True))), None
    if variant == "specular":
        return Specular(), None
    a = block.get("a", 1.0)
    _require(0.0 <= a <= 1.0, "[boundary].a must lie in [0, 1]")
    return DampedSpecular(float(a)), None


def _coefficients(block):
    names = {"A": 1.0, "B": 0.0, "c": 0.0, "s": 0.0, "Bdiv": 0.0}
    fns = {k: _expr(block.get(k, default), f"[coefficients].{k}") for k, default in names.items()}
    lam = _positive(block.get("Lambda", 2.0), "[coefficients].Lambda")
    _require(lam >= 1.0, "[coefficients].Lambda must be at least 1")
    time_dep = any("t" in fn.names for fn in fns.values())
    return CoefficientField(A=fns["A"], B=fns["B"], c=fns["c"], s=fns["s"], Bdiv=fns["Bdiv"], Lambda=lam, time_dependent=time_dep)


def parse_config(raw: Dict[str, Any], source: Optional[Path] = None, out_dir=None, seed=None) -> RunConfig:
    _validate_keys(raw)
    base = source.parent if source is not None else Path.cwd()
    geo = raw.get("geometry", {})
    _require(geo.get("kind", "interval") == "interval", "only the interval geometry can be simulated")
    length = _positive(geo.get("length", 1.0), "[geometry].length")
    grid, T = _grid(raw.get("grid", {}), length)

    coeffs = _coefficients(raw.get("coefficients", {}))
    spec, preset = _boundary(raw.get("boundary", {}), base, grid)

    sch = raw.get("scheme", {})
    scheme = sch.get("name", "imex-upwind")
    _require(scheme in ("imex-upwind", "viscous"), f"unknown scheme {scheme!r}")
    eps = float(sch.get("epsilon", 0.0))
    _require(eps >= 0.0, "[scheme].epsilon must be nonnegative")
    _require(scheme != "viscous" or (eps > 0 and (isinstance(spec, Inflow) or preset is not None)), "the viscous scheme needs epsilon > 0 and inflow data")
    wall = _expr(sch["velocity_wall"], "[scheme].velocity_wall") if "velocity_wall" in sch else None
    steady_tol = sch.get("steady_tol")
    if steady_tol is not None:
        steady_tol = _positive(steady_tol, "[scheme].steady_tol")

    init = raw.get("initial", {})
    _require(not ("f0" in init and "preset" in init), "[initial] takes f0 or preset, not both")
    if "preset" in init:
        _require(init["preset"] in ("zero",), f"unknown initial preset {init['preset']!r}")
        f0 = None
    else:
        f0 = _expr(init.get("f0", 0.0), "[initial].f0")

    diag = dict(raw.get("diagnostics", {}))
    checks = tuple(diag.get("checks", ["mass"]))
    for c in checks:
        _require(c in CHECKS, f"unknown check {c!r}; known: {list(CHECKS)}")
    if any(c in checks for c in ("analytic_error", "steady_residual", "boundary_exponents")):
        _require(preset == "steady_benchmark", "analytic checks need the steady_benchmark boundary preset")
    ratio = diag.get("ladder_ratio", 0.5)
    _require(0.0 < ratio < 1.0, "[diagnostics].ladder_ratio must lie in (0, 1)")
    for key in ("mass_tolerance", "analytic_tolerance", "max_principle_tolerance", "ledger_tolerance"):
        if key in diag:
            _positive(diag[key], f"[diagnostics].{key}")

    out = raw.get("output", {})
    formats = tuple(out.get("formats", ["csv", "json", "png"]))
    for fmt in formats:
        _require(fmt in FORMATS, f"unknown output format {fmt!r}")
    if out_dir is None:
        out_dir = base / out.get("dir", "out")
    name = out.get("name", source.stem if source is not None else "run")
    cfg_seed = raw.get("seed", 0)
    _require(isinstance(cfg_seed, int) and not isinstance(cfg_seed, bool), "seed must be an integer")

    if preset == "steady_benchmark":
        from .benchmarks import steady_problem

        _require(isinstance(init.get("f0", 0.0), (int, float)) and init.get("f0", 0.0) == 0, "the steady benchmark starts from zero")
        _, spec, cfg_b = steady_problem(grid.nx, grid.nv, length=grid.length, V=grid.V)
        wall = cfg_b.velocity_wall
        f0 = None

    solver = SolverConfig(scheme=scheme, epsilon=eps, velocity_wall=wall)
    return RunConfig(
        raw=raw,
        source=source,
        grid=grid,
        coeffs=coeffs,
        boundary=spec,
        solver=solver,
        f0=f0,
        t_end=T,
        steady_tol=steady_tol,
        checks=checks,
        diagnostics=diag,
        out_dir=Path(out_dir),
        name=name,
        formats=formats,
        seed=int(seed if seed is not None else cfg_seed),
        preset=preset,
    )


def load_config(path, out_dir=None, seed=None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, path, out_dir, seed)


def bundled_config(name: str) -> Path:
    path = Path(__file__).parent / "configs" / f"{name}.toml"
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return path
