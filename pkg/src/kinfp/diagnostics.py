"""Empirical regularity probes and the verdict record.

Distances follow the kinetic cylinder geometry: two points are at distance
r when the earlier one lies on the boundary of Q_r centered at the later one,

    r = max(sqrt(t0 - t), |x - x0 - (t - t0) v0|^(1/3), |v - v0|).

A Euclidean option (max of |dt|, |dx|, |dv|) is kept for comparison with
one-variable exponents.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .analytic.steady import steady_value

DEFAULT_PAIRS = 100_000
DEFAULT_SEED = 0
MIN_FIT_SAMPLES = 5


@dataclass
class GriddedField:
    """Values on a tensor grid: ``values[i, j]`` at (x[i], v[j]) or ``values[k, i, j]`` at (t[k], x[i], v[j])."""

    x: np.ndarray
    v: np.ndarray
    values: np.ndarray
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        expect = (len(self.x), len(self.v)) if self.t is None else (len(self.t), len(self.x), len(self.v))
        if self.t is not None:
            self.t = np.asarray(self.t, dtype=float)
        if self.values.shape != expect:
            raise ValueError(f"values have shape {self.values.shape}, expected {expect}")

    @classmethod
    def from_function(cls, fn, x, v):
        X, V = np.meshgrid(x, v, indexing="ij")
        return cls(np.asarray(x), np.asarray(v), fn(X, V))

    @property
    def steady(self):
        return self.t is None


def kinetic_distance(t, x, v, t0, x0, v0):
    """Cylinder scale separating (t, x, v) from (t0, x0, v0); the later time is the center."""
    t, x, v, t0, x0, v0 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, x, v, t0, x0, v0)))
    swap = t > t0
    tc = np.where(swap, t, t0)
    xc = np.where(swap, x, x0)
    vc = np.where(swap, v, v0)
    tp = np.where(swap, t0, t)
    xp = np.where(swap, x0, x)
    vp = np.where(swap, v0, v)
    dt = tp - tc
    return np.maximum.reduce([np.sqrt(-dt), np.cbrt(np.abs(xp - xc - dt * vc)), np.abs(vp - vc)])


def euclidean_distance(t, x, v, t0, x0, v0):
    return np.maximum.reduce([np.abs(np.asarray(t) - t0), np.abs(np.asarray(x) - x0), np.abs(np.asarray(v) - v0)])


def _region_indices(axis, lo_hi):
    if lo_hi is None:
        return np.arange(len(axis))
    lo, hi = lo_hi
    return np.nonzero((axis >= lo) & (axis <= hi))[0]


def _offsets(rng, n, size):
    """Signed index offsets with log-uniform magnitude in [0, size)."""
    if size <= 1:
        return np.zeros(n, dtype=int)
    mag = np.floor(np.exp(rng.uniform(0.0, math.log(size), n))).astype(int)
    mag[rng.uniform(size=n) < 0.1] = 0
    return mag * rng.choice((-1, 1), n)


def holder_seminorm(
    fld: GriddedField,
    alpha: float,
    region: Optional[Dict[str, tuple]] = None,
    pairs: int = DEFAULT_PAIRS,
    seed: int = DEFAULT_SEED,
    metric: str = "kinetic",
):
    """max |f(z) - f(z')| / dist(z, z')^alpha over sampled pairs of grid points.

    Pairs are drawn with index offsets of log-uniform size so that every
    scale from one grid cell to the region size is sampled. ``region`` maps
    axis names (``t``, ``x``, ``v``) to closed ranges.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    region = region or {}
    ix = _region_indices(fld.x, region.get("x"))
    iv = _region_indices(fld.v, region.get("v"))
    it = np.array([0]) if fld.steady else _region_indices(fld.t, region.get("t"))
    if len(ix) * len(iv) * len(it) < 2:
        raise ValueError("region too small for pair sampling")
    rng = np.random.default_rng(seed)

    def draw(idx):
        a = rng.integers(0, len(idx), pairs)
        b = np.clip(a + _offsets(rng, pairs, len(idx)), 0, len(idx) - 1)
        return idx[a], idx[b]

    xa, xb = draw(ix)
    va, vb = draw(iv)
    if fld.steady:
        fa = fld.values[xa, va]
        fb = fld.values[xb, vb]
        ta = tb = np.zeros(pairs)
    else:
        ka, kb = draw(it)
        fa = fld.values[ka, xa, va]
        fb = fld.values[kb, xb, vb]
        ta, tb = fld.t[ka], fld.t[kb]
    dist_fn = kinetic_distance if metric == "kinetic" else euclidean_distance
    if metric not in ("kinetic", "euclidean"):
        raise ValueError(f"unknown metric {metric!r}")
    d = dist_fn(ta, fld.x[xa], fld.v[va], tb, fld.x[xb], fld.v[vb])
    ok = d > 0
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(fa[ok] - fb[ok]) / d[ok] ** alpha))


@dataclass
class ExponentFit:
    log_x: np.ndarray
    log_y: np.ndarray
    slope: float
    intercept: float
    residual: float
    half_width: float
    flagged: bool = False

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "half_width": self.half_width,
            "samples": int(len(self.log_x)),
            "flagged": self.flagged,
        }


def fit_exponent(x, y, residual_threshold=1e-2):
    """Least-squares slope of log y against log x with a 95% confidence half-width."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} positive samples for a fit")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    rms = float(np.sqrt(np.mean(resid**2)))
    n = len(lx)
    half = float(stats.t.ppf(0.975, n - 2) * res.stderr) if n > 2 else float("inf")
    return ExponentFit(lx, ly, float(res.slope), float(res.intercept), rms, half, rms > residual_threshold)


@dataclass
class DecayProfile:
    radii: np.ndarray
    oscillations: np.ndarray
    counts: np.ndarray
    fit: Optional[ExponentFit]

    @property
    def slope(self):
        return None if self.fit is None else self.fit.slope

    @property
    def decay_factors(self):
        """osc_{k+1} / osc_k, an empirical 1 - theta per ladder step."""
        o = self.oscillations
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(o[:-1] > 0, o[1:] / o[:-1], np.nan)


def _cylinder_mask(fld: GriddedField, z0, r):
    t0, x0, v0 = z0
    if fld.steady:
        # projection of Q_r(z0) onto (x, v): x - x0 + s v0 in (-r^3, r^3) for some s in [0, r^2)
        lo = -(r**3) + min(0.0, -(r**2) * v0)
        hi = r**3 + max(0.0, -(r**2) * v0)
        dx = fld.x[:, None] - x0
        mx = (dx > lo) & (dx < hi)
        mv = np.abs(fld.v[None, :] - v0) < r
        return mx & mv
    dt = fld.t[:, None, None] - t0
    mt = (dt > -(r**2)) & (dt <= 0)
    shift = fld.x[None, :, None] - x0 - dt * v0
    mx = np.abs(shift) < r**3
    mv = np.abs(fld.v[None, None, :] - v0) < r
    return mt & mx & mv


def ladder(r0=1.0, ratio=0.5, depth=8):
    if not 0.0 < ratio < 1.0:
        raise ValueError("ladder ratio must lie in (0, 1)")
    return r0 * ratio ** np.arange(depth)


def oscillation_decay(fld: GriddedField, z0, radii: Sequence[float]):
    """Oscillation of the field over nested cylinders and the log-log decay slope."""
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    osc, counts = [], []
    for r in radii:
        m = _cylinder_mask(fld, z0, r)
        vals = fld.values[m]
        counts.append(int(vals.size))
        osc.append(float(vals.max() - vals.min()) if vals.size else np.nan)
    osc = np.array(osc)
    counts = np.array(counts)
    nonempty = counts > 0
    if nonempty.sum() < 3:
        raise ValueError("fewer than 3 nonempty cylinders on the ladder")
    usable = nonempty & (osc > 0)
    fit = fit_exponent(radii[usable], osc[usable]) if usable.sum() >= MIN_FIT_SAMPLES else None
    return DecayProfile(radii, osc, counts, fit)


def fit_boundary_exponents(x_range=(1e-6, 1e-2), v_range=(1e-3, 1e-1), x_wall=1e-12, samples=25, evaluator=steady_value):
    """Power-law exponents of the steady solution along v = 0 and along the wall x -> 0+, v < 0.

    The wall values are taken at ``x_wall``, which must satisfy
    x_wall << v^3 across ``v_range`` for the limit to be resolved.
    """
    xs = np.geomspace(*x_range, samples)
    vs = np.geomspace(*v_range, samples)
    fx = fit_exponent(xs, evaluator(xs, np.zeros_like(xs)))
    fv = fit_exponent(vs, evaluator(np.full_like(vs, x_wall), -vs))
    return fx, fv


# ---------------------------------------------------------------------------


def max_principle_excess(field_values, data_bound):
    """max |f| minus the largest data value; positive means a violation."""
    return float(np.max(np.abs(field_values)) - data_bound)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: object
    tolerance: object
    details: dict = field(default_factory=dict)


@dataclass
class DiagnosticsReport:
    passed: bool
    checks: List[CheckResult]
    config_hash: str
    grid: dict
    version: str

    @property
    def failing(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "overall": "PASS" if self.passed else "FAIL",
            "failing": self.failing,
            "config_hash": self.config_hash,
            "version": self.version,
            "grid": self.grid,
            "checks": [_jsonable(asdict(c)) for c in self.checks],
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def config_hash(config) -> str:
    text = json.dumps(_jsonable(config), sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def verdict(checks: Sequence[CheckResult], config=None, grid=None) -> DiagnosticsReport:
    from . import __version__

    checks = list(checks)
    if not checks:
        raise ValueError("verdict needs at least one check")
    return DiagnosticsReport(
        passed=all(c.passed for c in checks),
        checks=checks,
        config_hash=config_hash(config or {}),
        grid=grid or {},
        version=__version__,
    )
