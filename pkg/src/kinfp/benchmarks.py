"""Reference problems shared by the acceptance suite, the CLI and the tests."""
from __future__ import annotations

import time

import numpy as np

from .analytic.steady import steady_value
from .boundary import Inflow
from .coefficients import CoefficientField
from .solver import Grid, SolverConfig, initial_field, march


def steady_problem(nx=200, nv=201, length=1.0, V=3.0, cfl=0.9):
    """Half-line steady problem v f_x = f_vv on (0, length) x (-V, V).

    Absorbing data at x = 0, analytic inflow at x = length and analytic
    values on the velocity walls. The data do not depend on time, so they are
    tabulated once.
    """
    grid = Grid.with_cfl(length, nx, V, nv, cfl)
    v = grid.v
    x = grid.x
    right = steady_value(np.full_like(v, length), v)
    lower = steady_value(x, np.full_like(x, -V))
    upper = steady_value(x, np.full_like(x, V))

    def wall(t, xs, vs):
        return lower if vs[0] < 0 else upper

    spec = Inflow({"left": lambda t, xs, vs: np.zeros_like(vs), "right": lambda t, xs, vs: right})
    cfg = SolverConfig(velocity_wall=wall)
    return grid, spec, cfg


def run_steady_benchmark(nx=200, nv=201, steady_tol=1e-5, max_steps=400000):
    """March from zero to the steady state and compare with the analytic solution."""
    grid, spec, cfg = steady_problem(nx, nv)
    start = time.perf_counter()
    res = march(initial_field(grid, None, cfg), CoefficientField(), spec, cfg, n_steps=max_steps, steady_tol=steady_tol)
    X, V = grid.mesh()
    exact = steady_value(X, V)
    err = float(np.sqrt(np.sum((res.field.f - exact) ** 2) / np.sum(exact**2)))
    return {
        "nx": nx,
        "nv": nv,
        "steps": len(res.history),
        "t_final": res.field.t,
        "relative_l2_error": err,
        "seconds": time.perf_counter() - start,
        "field": res.field,
    }
