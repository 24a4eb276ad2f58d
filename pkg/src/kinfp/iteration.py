"""Fixed-point constructions of reflection problems from inflow solves.

Damped specular: gamma_- f_{n+1} = a R gamma_+ f_n with gamma_- f_0 = 0.
Diffuse: on consecutive time slabs of length tau, gamma_- f_{n+1} = M Y[f_n]
with Y the outgoing flux, and the converged end state of a slab seeds the next.

The defect delta_n is the squared trace norm
    sum_steps dt sum_faces sum_v |n.v| <v>^(2q) (gamma_- f_{n+1} - gamma_- f_n)^2 dv
of two consecutive incoming traces.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .boundary import Diffuse, Inflow, Specular, diffuse_profile, macroscopic_flux
from .coefficients import CoefficientField
from .solver import Grid, SolutionField, SolverConfig, initial_field, march

log = logging.getLogger(__name__)

STALL_LIMIT = 5


class DivergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class SlabFailure(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class IterationConfig:
    a: float = 0.5
    tau: float = 1.0
    max_iterations: int = 60
    tolerance: float = 1e-13
    target_contraction: float = 0.5
    max_halvings: int = 6
    q: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("slab length must lie in (0, 1]")


@dataclass
class IterationProblem:
    grid: Grid
    coeffs: CoefficientField = field(default_factory=CoefficientField)
    f0: object = None
    t_end: float = 1.0
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class IterationTrace:
    defects: List[float] = field(default_factory=list)
    volume_defects: List[float] = field(default_factory=list)
    lp_defects: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    isometry_error: float = 0.0
    boundary_residual: float = float("nan")
    note: str = ""

    @property
    def ratios(self):
        d = self.defects
        return [d[i + 1] / d[i] if d[i] > 0 else 0.0 for i in range(len(d) - 1)]

    def to_dict(self):
        return {
            "defects": self.defects,
            "ratios": self.ratios,
            "volume_defects": self.volume_defects,
            "lp_defects": self.lp_defects,
            "iterations": self.iterations,
            "converged": self.converged,
            "isometry_error": self.isometry_error,
            "boundary_residual": self.boundary_residual,
            "note": self.note,
        }


def _faces(grid):
    from .boundary import interval_faces

    return interval_faces(grid.length)


def _trace_norms(grid, incoming_a, incoming_b, q, p=6):
    """Squared weighted L2 distance and the sup-in-time L^p distance of two incoming logs."""
    v = grid.v
    w = (1.0 + v**2) ** q * grid.weights
    total = 0.0
    lp = 0.0
    for face in _faces(grid):
        speed = np.abs(face.speed(v))
        a = np.array([s[face.name] for s in incoming_a])
        b = np.array([s[face.name] for s in incoming_b])
        diff = a - b
        total += grid.dt * float(np.sum(diff**2 * speed * w))
        lp = max(lp, float(np.max(np.sum(np.abs(diff) ** p * speed * w, axis=1)) ** (1.0 / p)))
    return total, lp


def _incoming_only(grid, trace_log):
    out = []
    for traces in trace_log:
        out.append({face.name: np.where(face.incoming(grid.v), traces[face.name], 0.0) for face in _faces(grid)})
    return out


def _outgoing_only(grid, trace_log):
    out = []
    for traces in trace_log:
        out.append({face.name: np.where(face.outgoing(grid.v), traces[face.name], 0.0) for face in _faces(grid)})
    return out


def _zero_log(grid, n):
    z = np.zeros(grid.nv)
    return [{face.name: z for face in _faces(grid)} for _ in range(n)]


def _inflow_solve(start: SolutionField, problem: IterationProblem, incoming_log, n_steps):
    def hook(k, t):
        return incoming_log[k]

    return march(start, problem.coeffs, Inflow(None), problem.solver, n_steps=n_steps, incoming=hook, keep_traces=True)


def _n_steps(grid, duration):
    return max(1, int(round(duration / grid.dt)))


def specular_iterate(problem: IterationProblem, a: float, cfg: Optional[IterationConfig] = None):
    """Damped specular fixed point; returns (final field, IterationTrace)."""
    cfg = cfg or IterationConfig(a=a)
    if not 0.0 <= a <= 1.0:
        raise ValueError("damping must lie in [0, 1]")
    grid = problem.grid
    start = initial_field(grid, problem.f0, problem.solver)
    n_steps = _n_steps(grid, problem.t_end)
    trace = IterationTrace()
    if a == 1.0:
        # the undamped problem is closed directly rather than iterated
        res = march(start, problem.coeffs, Specular(), problem.solver, n_steps=n_steps)
        trace.converged = True
        trace.note = "a = 1 solved with the direct specular closure"
        return res.field, trace

    incoming = _zero_log(grid, n_steps)
    res = _inflow_solve(start, problem, incoming, n_steps)
    prev_field = res.field
    stall = 0
    first = None
    for n in range(cfg.max_iterations):
        outgoing = _outgoing_only(grid, res.trace_log)
        new_incoming = [{k: a * o[k][::-1] for k in o} for o in outgoing]
        # incoming norm of a R f_n against a^2 times the outgoing norm of f_n
        inc_norm, _ = _trace_norms(grid, new_incoming, _zero_log(grid, n_steps), cfg.q)
        out_norm, _ = _trace_norms(grid, outgoing, _zero_log(grid, n_steps), cfg.q)
        if out_norm > 0:
            trace.isometry_error = max(trace.isometry_error, abs(inc_norm - a * a * out_norm) / out_norm)
        delta, lp = _trace_norms(grid, new_incoming, incoming, cfg.q)
        trace.defects.append(delta)
        trace.lp_defects.append(lp)
        trace.iterations = n + 1
        if first is None and delta > 0:
            first = delta
        if delta <= cfg.tolerance * max(1.0, first or 0.0):
            trace.converged = True
            break
        if len(trace.defects) > 1 and delta >= trace.defects[-2]:
            stall += 1
            if stall >= STALL_LIMIT:
                raise DivergenceError(f"defect did not decrease for {STALL_LIMIT} iterations", trace)
        else:
            stall = 0
        incoming = new_incoming
        res = _inflow_solve(start, problem, incoming, n_steps)
        trace.volume_defects.append(float(np.sqrt(grid.hx * np.sum((res.field.f - prev_field.f) ** 2 @ grid.weights))))
        prev_field = res.field
    outgoing = _outgoing_only(grid, res.trace_log)
    closure = [{k: a * o[k][::-1] for k in o} for o in outgoing]
    resid, _ = _trace_norms(grid, closure, incoming, cfg.q)
    trace.boundary_residual = math.sqrt(resid)
    return res.field, trace


@dataclass
class SlabRecord:
    t_start: float
    tau: float
    halvings: int
    contraction: float
    contraction_squared: float
    contraction_lp: float
    iterations: int
    defects: List[float]
    flux_change: List[float]
    boundary_residual: float


@dataclass
class SlabTrace:
    slabs: List[SlabRecord] = field(default_factory=list)

    @property
    def max_contraction(self):
        return max((s.contraction for s in self.slabs), default=0.0)

    @property
    def boundary_residual(self):
        return max((s.boundary_residual for s in self.slabs), default=0.0)

    def to_dict(self):
        return {"slabs": [s.__dict__ for s in self.slabs], "max_contraction": self.max_contraction}


def _diffuse_incoming(grid, spec: Diffuse, outgoing_log, t0):
    logs, fluxes = [], []
    profiles = {}
    for k, out in enumerate(outgoing_log):
        t = t0 + k * grid.dt
        entry, fl = {}, {}
        for face in _faces(grid):
            if face.name not in profiles or callable(getattr(spec.weight, "theta", None)):
                profiles[face.name] = diffuse_profile(spec, face, grid.v, grid.weights, t)
            y = macroscopic_flux(face, out[face.name], grid.v, grid.weights)
            entry[face.name] = y * profiles[face.name]
            fl[face.name] = y
        logs.append(entry)
        fluxes.append(fl)
    return logs, fluxes


def _run_slab(start, problem, spec, n_steps, cfg):
    grid = problem.grid
    incoming = _zero_log(grid, n_steps)
    res = _inflow_solve(start, problem, incoming, n_steps)
    defects, lps, flux_change = [], [], []
    prev_flux = None
    converged = False
    for n in range(cfg.max_iterations):
        new_incoming, fluxes = _diffuse_incoming(grid, spec, _outgoing_only(grid, res.trace_log), start.t)
        arr = np.array([[fl[f.name] for f in _faces(grid)] for fl in fluxes])
        if prev_flux is not None:
            flux_change.append(float(np.max(np.abs(arr - prev_flux))))
        prev_flux = arr
        delta, lp = _trace_norms(grid, new_incoming, incoming, cfg.q)
        defects.append(delta)
        lps.append(lp)
        if delta <= cfg.tolerance * max(1.0, defects[0]):
            converged = True
            break
        incoming = new_incoming
        res = _inflow_solve(start, problem, incoming, n_steps)
    ratios = [defects[i + 1] / defects[i] for i in range(len(defects) - 1) if defects[i] > 0 and defects[i + 1] > 0]
    lp_ratios = [lps[i + 1] / lps[i] for i in range(len(lps) - 1) if lps[i] > 0 and lps[i + 1] > 0]
    sq = max(ratios, default=0.0)
    closure, _ = _diffuse_incoming(grid, spec, _outgoing_only(grid, res.trace_log), start.t)
    resid, _ = _trace_norms(grid, closure, incoming, cfg.q)
    return res, {
        "contraction": math.sqrt(sq),
        "contraction_squared": sq,
        "contraction_lp": max(lp_ratios, default=0.0),
        "iterations": len(defects),
        "defects": defects,
        "flux_change": flux_change,
        "boundary_residual": math.sqrt(resid),
        "converged": converged,
    }


def diffuse_slab_iterate(problem: IterationProblem, tau: float, cfg: Optional[IterationConfig] = None, spec: Optional[Diffuse] = None):
    """Slab-by-slab diffuse fixed point with automatic halving of the slab length.

    The contraction factor of a slab is the largest ratio of consecutive
    trace-defect norms (square roots of delta). When it exceeds
    ``cfg.target_contraction`` the slab is re-run with half the length.
    """
    cfg = cfg or IterationConfig(tau=tau)
    spec = spec or Diffuse()
    grid = problem.grid
    cur = initial_field(grid, problem.f0, problem.solver)
    trace = SlabTrace()
    remaining = _n_steps(grid, problem.t_end)
    slab_steps = _n_steps(grid, tau)
    while remaining > 0:
        halvings = 0
        n = min(slab_steps, remaining)
        while True:
            res, info = _run_slab(cur, problem, spec, n, cfg)
            if info["contraction"] <= cfg.target_contraction and info["converged"]:
                break
            if halvings >= cfg.max_halvings or n == 1:
                raise SlabFailure(
                    f"slab at t={cur.t:.4g} contracts by {info['contraction']:.3f} after {halvings} halvings",
                    info,
                )
            halvings += 1
            n = max(1, n // 2)
            log.info("halving slab length to %d steps", n)
        slab_steps = n
        trace.slabs.append(
            SlabRecord(
                t_start=cur.t,
                tau=n * grid.dt,
                halvings=halvings,
                contraction=info["contraction"],
                contraction_squared=info["contraction_squared"],
                contraction_lp=info["contraction_lp"],
                iterations=info["iterations"],
                defects=info["defects"],
                flux_change=info["flux_change"],
                boundary_residual=info["boundary_residual"],
            )
        )
        cur = res.field
        remaining -= n
    return cur, trace
