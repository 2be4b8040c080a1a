"""Command line interface: ``ifsm <command> <config> [options]``.

Configs are JSON files or the names of bundled ones (``e1``, ``e2``,
``e2_beta0.5``, ``e2_beta2``, ``market``). Results go to stdout as JSON, and
to ``--out`` when given.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence,
4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import chaos, config, ingest, thermo
from .errors import (
    AbsoluteContinuityViolated,
    ExpressionDomainError,
    ExpressionSyntaxError,
    IoError,
    NonNumericCell,
    NonPositiveEigenfunction,
    NotDyadicFamily,
    NotNormalized,
    NumericalError,
    SchemaError,
    TooShort,
    ValidationError,
    ZeroPreviousValue,
)
from .grid import Grid
from .holonomy import disintegrate, empirical_holonomic, holonomy_residual
from .model import validate_system
from .operators import apriori_transfer, assemble_transfer, duality_residual, export_matrix
from .spectral import eigenmeasure, normalize_system, power_iteration, spectral_radius_gelfand

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

_VALIDATION_ERRORS = (ValidationError, SchemaError, ExpressionSyntaxError, ExpressionDomainError,
                      NotNormalized, AbsoluteContinuityViolated, NotDyadicFamily,
                      NonNumericCell, TooShort, ZeroPreviousValue)
_NUMERIC_ERRORS = (NumericalError, NonPositiveEigenfunction)


def _load(args):
    spec, grid = config.load_config_with_grid(config.resolve_config(args.config))
    if getattr(args, "grid", None):
        grid = args.grid
    return spec, Grid(spec.domain, grid)


def _emit(args, payload) -> int:
    text = ingest.report_json(payload)
    sys.stdout.write(text)
    if getattr(args, "out", None):
        ingest.write_report(payload, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    spec, grid = _load(args)
    report = validate_system(spec, grid, strict=False)
    _emit(args, {"system": spec.name, **report.to_dict()})
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_spectral(args) -> int:
    spec, grid = _load(args)
    B = assemble_transfer(spec, grid)
    s = power_iteration(B, tol=args.tol)
    steps = spectral_radius_gelfand(B, args.gelfand)
    if args.export:
        export_matrix(B, args.export, "bin" if args.export.endswith(".bin") else "csv")
    return _emit(args, {
        "system": spec.name, "nodes": grid.m, "rho": s.rho, "log_rho": s.log_rho,
        "iterations": s.iterations, "residual": s.residual,
        "eigenfunction_min": float(np.min(s.eigenfunction.values)),
        "gelfand": {"N": steps[-1].N, "estimate": steps[-1].estimate, "spread": steps[-1].spread},
    })


def _normalized(spec, grid, tol):
    B = assemble_transfer(spec, grid)
    s = power_iteration(B, tol=tol)
    return s, normalize_system(spec, s, grid, tol=max(1e-8, 100 * tol))


def cmd_invariant(args) -> int:
    spec, grid = _load(args)
    s, normed = _normalized(spec, grid, args.tol)
    e = eigenmeasure(assemble_transfer(normed, grid), tol=args.tol)
    raw = eigenmeasure(assemble_transfer(spec, grid), tol=args.tol)
    q = spec.q_mass(grid.nodes)
    payload = {
        "system": spec.name, "rho": s.rho, "normalized_rho_star": e.rho_star,
        "rho_star": raw.rho_star, "inf_q": float(np.min(q)), "sup_q": float(np.max(q)),
        "residual": e.residual, "iterations": e.iterations,
        "mean": (grid.nodes.T @ e.measure.weights).tolist(),
    }
    if args.measure_out:
        np.savetxt(args.measure_out, np.column_stack([grid.nodes, e.measure.weights]),
                   delimiter=",", fmt="%.17g")
    return _emit(args, payload)


def cmd_entropy(args) -> int:
    spec, grid = _load(args)
    lift, _ = thermo.equilibrium_state(spec, grid, tol=args.tol, run_optimizer=False)
    report = thermo.entropy_variational(lift, apriori_transfer(spec, grid))
    return _emit(args, {"system": spec.name, **report.to_dict()})


def cmd_pressure(args) -> int:
    spec, grid = _load(args)
    report = thermo.pressure(spec, grid, tol=args.tol, run_optimizer=False)
    return _emit(args, {"system": spec.name, "pressure": report.pressure, "rho": report.rho,
                        "rho_star": report.rho_star})


def cmd_equilibrium(args) -> int:
    spec, grid = _load(args)
    _, report = thermo.equilibrium_state(spec, grid, tol=args.tol)
    return _emit(args, {"system": spec.name, **report.to_dict()})


def _base_phi(spec, grid):
    if spec.potential is not None:
        return grid.function(lambda pts: np.log(spec.potential(pts))), "log potential"
    return grid.constant(0.0), "zero (a-priori weights)"


def cmd_probe_pressure(args) -> int:
    spec, grid = _load(args)
    rng = np.random.default_rng(args.seed)
    phi, base = _base_phi(spec, grid)
    functional = thermo.PressureFunctional(spec, grid)
    _, rep = thermo.equilibrium_state(functional.potential_spec(phi), grid, run_optimizer=False)
    dirs = [grid.random_smooth(rng) for _ in range(args.directions)]
    probe = thermo.pressure_functional_probe(phi, dirs, spec=spec, nu=rep.marginal,
                                             functional=functional)
    return _emit(args, {"system": spec.name, "base": base, **probe.to_dict()})


def cmd_chaos(args) -> int:
    spec, _ = _load(args)
    start = args.start if args.start is not None else (0.5 * (spec.domain.lo + spec.domain.hi)).tolist()
    t0 = time.perf_counter()
    orbit = chaos.sample_orbit(spec, start, args.steps, args.seed, args.stream)
    hist = chaos.empirical_measure(orbit, args.level, min(args.burn_in, args.steps - 1), spec=spec)
    if args.pgm:
        ingest.write_pgm(chaos.pc_plot(hist, block=args.block), args.pgm)
    if args.hist_out:
        np.savetxt(args.hist_out, hist.weights.reshape(len(hist.weights), -1), delimiter=",", fmt="%.17g")
    return _emit(args, {
        "system": spec.name, "seed": args.seed, "stream": args.stream, "steps": args.steps,
        "level": args.level, "burn_in": args.burn_in, "clamped": orbit.clamped,
        "cells": hist.weights.tolist(), "seconds": round(time.perf_counter() - t0, 3),
    })


def cmd_ingest(args) -> int:
    column = int(args.column) if args.column.lstrip("-").isdigit() else args.column
    series = ingest.ingest_timeseries(args.csv, args.threshold, column)
    if args.emit_config:
        ingest.emit_config(series, args.emit_config)
    return _emit(args, {"length": len(series), "source_length": series.source_length,
                        "frequencies": series.frequencies,
                        "symbols": series.symbols if len(series) <= args.show else series.symbols[:args.show] + "..."})


def run_checks(spec, grid, tol=1e-12, seed=0) -> list:
    """The invariant suite: ``[(name, passed, detail), ...]``."""
    rng = np.random.default_rng(seed)
    checks = []
    report = validate_system(spec, grid, strict=False)
    checks.append(("hypotheses", report.passed, f"inf q {report.inf_q:.4g}, sup q {report.sup_q:.4g}"))
    B = assemble_transfer(spec, grid)
    dual = max(duality_residual(B, grid.random_smooth(rng), grid.random_measure(rng)) for _ in range(20))
    checks.append(("duality", dual < 1e-12, f"max residual {dual:.3e}"))
    s = power_iteration(B, tol=tol)
    raw = eigenmeasure(B, tol=tol)
    ok = report.inf_q - 1e-12 <= raw.rho_star <= report.sup_q + 1e-12 and raw.rho_star <= s.rho + 1e-6
    checks.append(("eigenmeasure bounds", ok, f"rho* {raw.rho_star:.10g}, rho {s.rho:.10g}"))
    lift, rep = thermo.equilibrium_state(spec, grid, tol=tol)
    ent = thermo.entropy_variational(lift, apriori_transfer(spec, grid))
    checks.append(("entropy order", ent.h_a <= ent.h_v + 1e-6 and ent.h_v <= 1e-9,
                   f"h_a {ent.h_a:.6g}, h_v {ent.h_v:.6g}"))
    checks.append(("equilibrium defect", rep.equilibrium_defect <= 1e-3, f"{rep.equilibrium_defect:.3e}"))
    checks.append(("variational bound", rep.variational_lower_bound <= rep.log_rho + 1e-6,
                   f"{rep.variational_lower_bound:.10g} vs log rho {rep.log_rho:.10g}"))
    normed = normalize_system(spec, s, grid, tol=max(1e-8, 100 * tol))
    n_steps = 2_000
    orbit = chaos.sample_orbit(normed, (0.5 * (spec.domain.lo + spec.domain.hi)), n_steps, seed)
    emp = empirical_holonomic(orbit, grid)
    fns = [grid.random_smooth(rng) for _ in range(5)]
    res = holonomy_residual(emp, normed, fns)
    bound = max(2 * f.sup_norm / n_steps for f in fns)
    checks.append(("holonomy telescoping", res <= bound, f"residual {res:.3e} <= {bound:.3e}"))
    dis = disintegrate(lift)
    err = float(np.max(np.abs(dis.recombine() - lift.weights)))
    checks.append(("disintegration", err <= 1e-15, f"max error {err:.3e}"))
    phi, _ = _base_phi(spec, grid)
    functional = thermo.PressureFunctional(spec, grid)
    probe = thermo.pressure_functional_probe(phi, [grid.random_smooth(rng) for _ in range(3)],
                                             t_stencil=(1e-1, 1e-2), functional=functional)
    checks.append(("pressure convexity", probe.convex, f"max midpoint gap {np.max(probe.midpoint_gaps):.3e}"))
    shift = abs(functional(phi.values + 1.0) - functional(phi) - 1.0)
    checks.append(("pressure shift", shift <= 1e-9, f"{shift:.3e}"))
    return checks


def cmd_verify(args) -> int:
    spec, grid = _load(args)
    checks = run_checks(spec, grid, tol=args.tol, seed=args.seed)
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=sys.stderr)
    all_ok = all(ok for _, ok, _ in checks)
    _emit(args, {"system": spec.name, "passed": all_ok,
                 "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks]})
    return EXIT_OK if all_ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fn, help_text, config_arg=True, tol=True):
        p = sub.add_parser(name, help=help_text)
        if config_arg:
            p.add_argument("config", help="config path or bundled config name")
            p.add_argument("--grid", type=int, help="grid nodes per axis (overrides the config)")
        if tol:
            p.add_argument("--tol", type=float, default=1e-12, help="eigen-solver tolerance")
        p.add_argument("--out", help="also write the JSON result here")
        p.set_defaults(func=fn)
        return p

    command("validate", cmd_validate, "check the standing hypotheses on a grid", tol=False)
    p = command("spectral", cmd_spectral, "spectral radius and eigenfunction")
    p.add_argument("--gelfand", type=int, default=200, help="Gelfand iterations to report")
    p.add_argument("--export", help="write the transfer matrix (.csv or .bin)")
    p = command("invariant", cmd_invariant, "invariant measure of the normalised system")
    p.add_argument("--measure-out", help="CSV of node coordinates and weights")
    command("entropy", cmd_entropy, "average and variational entropy of the equilibrium lift")
    command("pressure", cmd_pressure, "topological pressure log rho")
    command("equilibrium", cmd_equilibrium, "equilibrium state and its diagnostics")
    p = command("probe-pressure", cmd_probe_pressure, "convexity and subgradients of the pressure functional")
    p.add_argument("--directions", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p = command("chaos", cmd_chaos, "chaos game histogram and PC plot", tol=False)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--start", type=float, nargs="+")
    p.add_argument("--pgm", help="write the PC plot as an ASCII PGM")
    p.add_argument("--block", type=int, default=1, help="pixels per cell side")
    p.add_argument("--hist-out", help="CSV of cell weights")
    p = command("ingest", cmd_ingest, "symbolise a CSV time series", config_arg=False, tol=False)
    p.add_argument("csv")
    p.add_argument("--threshold", type=float, default=ingest.DEFAULT_THRESHOLD)
    p.add_argument("--column", default="0", help="column index or header name")
    p.add_argument("--emit-config", help="write a constant-probability quadrant config")
    p.add_argument("--show", type=int, default=80, help="symbols to print")
    p = command("verify", cmd_verify, "run the full invariant suite")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _NUMERIC_ERRORS as exc:
        stage = getattr(exc, "stage", None)
        print(f"numerical error{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (IoError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
