"""Command line front end.

    kinfp run --config FILE [--out-dir DIR] [--seed N]
    kinfp verify [--suite NAME] [--threads N] [--out-dir DIR]
    kinfp tabulate-special --tau-min A --tau-max B --points N --out FILE
    kinfp holder-probe --field FILE --alpha A [--metric kinetic|euclidean]

Exit codes: 0 pass, 1 runtime or check failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, bundled_config, load_config

log = logging.getLogger("kinfp")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# run


def _checks(cfg: RunConfig, start, res):
    from . import acceptance
    from .analytic.steady import steady_value
    from .diagnostics import CheckResult, GriddedField, ladder, oscillation_decay
    from .solver import mass

    diag = cfg.diagnostics
    out = []
    fld = res.field
    g = cfg.grid
    for name in cfg.checks:
        if name == "mass":
            m0, m1 = mass(start), mass(fld)
            elapsed = fld.t - start.t
            drift = abs(m1 - m0) / (abs(m0) if m0 != 0 else 1.0) / elapsed
            tol = float(diag.get("mass_tolerance", 1e-6))
            out.append(CheckResult("mass", drift < tol, {"drift_per_time": drift}, {"drift_per_time": tol}, {"initial": m0, "final": m1}))
        elif name == "max_principle":
            bound = float(np.max(np.abs(start.f)))
            for tr in res.trace_log:
                for face in fld.faces:
                    bound = max(bound, float(np.max(np.abs(np.where(face.incoming(g.v), tr[face.name], 0.0)))))
            peak = max(h["max_abs"] for h in res.history)
            tol = float(diag.get("max_principle_tolerance", 1e-8))
            out.append(CheckResult("max_principle", peak - bound <= tol, {"excess": peak - bound}, {"excess": tol}, {"max_abs": peak, "data_bound": bound}))
        elif name == "analytic_error":
            X, V = g.mesh()
            exact = steady_value(X, V)
            err = float(np.sqrt(np.sum((fld.f - exact) ** 2) / np.sum(exact**2)))
            tol = float(diag.get("analytic_tolerance", 0.05))
            out.append(CheckResult("analytic_error", err < tol, {"relative_l2_error": err}, {"relative_l2_error": tol}, {"t_final": fld.t}))
        elif name == "steady_residual":
            res1 = acceptance.c1_steady_residual()
            # wall-clock time is left out so that reports are reproducible
            res1.measured.pop("seconds")
            res1.tolerance.pop("seconds")
            out.append(res1)
        elif name == "boundary_exponents":
            out.append(acceptance.c2_boundary_exponents())
        elif name == "energy_ledger":
            rel = max(abs(h["residual"]) / h["scale"] if h["scale"] > 0 else 0.0 for h in res.history)
            tol = float(diag.get("ledger_tolerance", 0.1))
            out.append(CheckResult("energy_ledger", rel <= tol, {"max_relative_residual": rel}, {"max_relative_residual": tol}))
        elif name == "oscillation":
            centers = diag.get("centers", [[g.length / 2, 0.0]])
            radii = ladder(1.0, float(diag.get("ladder_ratio", 0.75)), int(diag.get("ladder_depth", 6)))
            snap = GriddedField(g.x, g.v, fld.f)
            profiles = []
            nested = True
            for c in centers:
                prof = oscillation_decay(snap, (fld.t, float(c[0]), float(c[1])), radii)
                o = prof.oscillations[prof.counts > 0]
                nested &= bool(np.all(np.diff(o) <= 0))
                profiles.append({"center": list(c), "radii": prof.radii, "oscillations": prof.oscillations, "slope": prof.slope, "decay_factors": prof.decay_factors})
            out.append(CheckResult("oscillation", nested, {"nested": nested}, {"nested": True}, {"profiles": profiles}))
    return out


def run_pipeline(cfg: RunConfig):
    from .diagnostics import _jsonable, config_hash, verdict
    from .io import write_csv, write_field_csv, write_json
    from .solver import initial_field, march

    chash = config_hash(cfg.raw)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.name
    grid_info = {"length": cfg.grid.length, "nx": cfg.grid.nx, "V": cfg.grid.V, "nv": cfg.grid.nv, "dt": cfg.grid.dt, "T": cfg.t_end}
    written = []
    try:
        cfg.coeffs.check_bounds(((0.0, cfg.t_end), (0.0, cfg.grid.length), (-cfg.grid.V, cfg.grid.V)), seed=cfg.seed)
        start = initial_field(cfg.grid, cfg.f0, cfg.solver)
        n_steps = int(math.ceil(cfg.t_end / cfg.grid.dt - 1e-9))
        ledger_q = float(cfg.diagnostics.get("ledger_q", 0.0)) if "energy_ledger" in cfg.checks else None
        res = march(
            start,
            cfg.coeffs,
            cfg.boundary,
            cfg.solver,
            n_steps=n_steps,
            keep_traces="max_principle" in cfg.checks,
            ledger_q=ledger_q,
            steady_tol=cfg.steady_tol,
        )
        checks = _checks(cfg, start, res)
    except Exception as exc:
        record = {"status": "runtime failure", "error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc(), "grid": grid_info}
        written.append(write_json(out / f"{stem}_failure.json", record, chash))
        log.error("run failed: %s", exc)
        return EXIT_FAIL, written

    fld = res.field
    report = verdict(checks, cfg.raw, grid_info)
    if "csv" in cfg.formats:
        written.append(write_field_csv(out / f"{stem}_field.csv", cfg.grid.x, cfg.grid.v, fld.f, chash, t=fld.t))
        cols = sorted({k for h in res.history for k in h})
        rows = ([h.get(k, float("nan")) for k in cols] for h in res.history)
        written.append(write_csv(out / f"{stem}_history.csv", cols, rows, chash))
    if "json" in cfg.formats:
        written.append(write_json(out / f"{stem}_report.json", report.to_dict(), chash))
        ledger = {"t_final": fld.t, "steps": len(res.history), "history": _jsonable(res.history)}
        written.append(write_json(out / f"{stem}_ledger.json", ledger, chash))
    if "png" in cfg.formats:
        from .plotting import plot_field, plot_history

        written.append(plot_field(out / f"{stem}_field.png", cfg.grid.x, cfg.grid.v, fld.f, f"f at t = {fld.t:.4g}"))
        keys = ("mass", "max_abs", "residual") if "energy_ledger" in cfg.checks else ("mass", "max_abs")
        written.append(plot_history(out / f"{stem}_history.png", res.history, keys))
    for c in report.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.measured}")
    print(f"overall {'PASS' if report.passed else 'FAIL'} (config {chash})")
    return (EXIT_PASS if report.passed else EXIT_FAIL), written


def _resolve_config(value):
    path = Path(value)
    if path.is_file():
        return path
    try:
        return bundled_config(value)
    except ConfigError:
        raise ConfigError(f"config {value!r} is neither a file nor a bundled config") from None


def cmd_run(args):
    try:
        cfg = load_config(_resolve_config(args.config), out_dir=args.out_dir, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, _ = run_pipeline(cfg)
    return code


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args):
    from . import acceptance
    from .diagnostics import verdict
    from .io import write_json

    if args.suite not in acceptance.SUITES:
        print(f"unknown suite {args.suite!r}; known: {list(acceptance.SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    results = acceptance.run_suite(args.suite, threads=args.threads)
    for r in results:
        print(acceptance.summary_line(r))
    report = verdict(results, {"suite": args.suite})
    if args.out_dir:
        write_json(Path(args.out_dir) / f"verify_{args.suite}.json", report.to_dict(), report.config_hash)
    print(f"overall {'PASS' if report.passed else 'FAIL'}: {len(results) - len(report.failing)}/{len(results)} criteria")
    return EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# tabulate-special


def tabulate_tau(tau_min, tau_max, points):
    from .analytic import special

    if not (math.isfinite(tau_min) and math.isfinite(tau_max)) or points < 1 or tau_max < tau_min or (points > 1 and tau_max == tau_min):
        raise UsageError("empty or non-finite tau range")
    if tau_max > special.OVERFLOW_LIMIT:
        raise UsageError(f"tau above {special.OVERFLOW_LIMIT} overflows the Kummer functions")
    tau = np.linspace(tau_min, tau_max, points)
    psi = special.tricomi_psi(tau)
    m1 = special.kummer_m(special.PSI_A, special.PSI_B, tau)
    m2 = special.kummer_m(special.PSI_A2, special.PSI_B2, tau)
    return ("tau", "psi", "M_-1/6_2/3", "M_1/6_4/3"), np.column_stack([tau, psi, m1, m2])


def tabulate_x(x_min, x_max, points, v):
    from .analytic.steady import steady_value

    if not (0.0 < x_min < x_max and math.isfinite(x_max)) or points < 2:
        raise UsageError("x range must satisfy 0 < x_min < x_max with at least 2 points")
    x = np.geomspace(x_min, x_max, points)
    f = steady_value(x, np.full_like(x, v))
    return ("x", "v", "f"), np.column_stack([x, np.full_like(x, v), f])


def cmd_tabulate(args):
    from .diagnostics import config_hash
    from .io import write_csv

    try:
        if args.x_min is not None or args.x_max is not None:
            if args.x_min is None or args.x_max is None:
                raise UsageError("give both --x-min and --x-max")
            cols, data = tabulate_x(args.x_min, args.x_max, args.points, args.v)
        else:
            cols, data = tabulate_tau(args.tau_min, args.tau_max, args.points)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # the output path and the handler are not part of what was computed
    params = {k: v for k, v in vars(args).items() if k not in ("out", "func", "plot", "verbose")}
    chash = config_hash(params | {"command": "tabulate-special"})
    out = Path(args.out)
    write_csv(out, cols, data.tolist(), chash)
    if args.plot and cols[0] == "tau":
        from .plotting import plot_special

        plot_special(out.with_suffix(".png"), data[:, 0], data[:, 1])
    print(f"wrote {len(data)} rows to {out}")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# holder-probe


def cmd_holder(args):
    from .diagnostics import config_hash, holder_seminorm, ladder, oscillation_decay
    from .io import read_field_csv, write_json

    try:
        fld = read_field_csv(args.field)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    region = {}
    if args.x_range:
        region["x"] = tuple(args.x_range)
    if args.v_range:
        region["v"] = tuple(args.v_range)
    try:
        semi = holder_seminorm(fld, args.alpha, region, pairs=args.pairs, seed=args.seed, metric=args.metric)
        payload = {"field": str(args.field), "alpha": args.alpha, "metric": args.metric, "pairs": args.pairs, "seed": args.seed, "seminorm": semi}
        if args.center:
            prof = oscillation_decay(fld, (0.0, args.center[0], args.center[1]), ladder(args.r0, args.ratio, args.depth))
            payload["decay"] = {
                "radii": prof.radii,
                "oscillations": prof.oscillations,
                "counts": prof.counts,
                "slope": prof.slope,
                "decay_factors": prof.decay_factors,
            }
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    chash = config_hash({k: v for k, v in payload.items() if k != "decay"} | {"command": "holder-probe"})
    if args.out:
        write_json(args.out, payload, chash)
    print(f"seminorm[alpha={args.alpha}, {args.metric}] = {semi!r}")
    return EXIT_PASS


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="kinfp", description="Kinetic Fokker-Planck simulator and verification suite", allow_abbrev=False)
    p.add_argument("--version", action="version", version=f"kinfp {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configured simulation and its checks")
    r.add_argument("--config", required=True, help="TOML file or bundled config name")
    r.add_argument("--out-dir", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("--suite", default="all")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--out-dir", default=None)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tabulate-special", help="tabulate Psi and the Kummer functions, or f(x, v) on a log x grid")
    t.add_argument("--tau-min", type=float, default=-10.0)
    t.add_argument("--tau-max", type=float, default=10.0)
    t.add_argument("--points", type=int, default=101)
    t.add_argument("--x-min", type=float, default=None)
    t.add_argument("--x-max", type=float, default=None)
    t.add_argument("--v", type=float, default=0.0)
    t.add_argument("--out", required=True)
    t.add_argument("--plot", action="store_true")
    t.set_defaults(func=cmd_tabulate)

    h = sub.add_parser("holder-probe", help="Hölder seminorm and oscillation decay of a field CSV")
    h.add_argument("--field", required=True)
    h.add_argument("--alpha", type=float, required=True)
    h.add_argument("--metric", choices=("kinetic", "euclidean"), default="kinetic")
    h.add_argument("--pairs", type=int, default=100_000)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--x-range", type=float, nargs=2, default=None)
    h.add_argument("--v-range", type=float, nargs=2, default=None)
    h.add_argument("--center", type=float, nargs=2, default=None, metavar=("X0", "V0"))
    h.add_argument("--r0", type=float, default=1.0)
    h.add_argument("--ratio", type=float, default=0.75)
    h.add_argument("--depth", type=int, default=6)
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_holder)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
