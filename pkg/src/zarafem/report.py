"""CSV output, log-log rate fits, error-weighted cost and the command line."""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .driver import AdaptiveParams, RunLog, run
from .model import ScalarProductSpec, benchmark1, benchmark2

__all__ = [
    "CSV_COLUMNS",
    "RateFit",
    "fit_rate",
    "geometric_fit",
    "weighted_cost",
    "emit_csv",
    "read_csv",
    "summarize",
    "table1_sweep",
    "cli_main",
    "main",
]

CSV_COLUMNS = ["ell", "k", "abs_index", "ndofs", "zeta", "eta", "z_norm", "tildeZ",
               "h1_error", "cum_cost", "wall_time_s"]

TABLE1_LAMBDAS = (0.01, 0.05, 0.1, 0.5, 1.0)
TABLE1_DELTAS = (0.1, 0.5, 1.0, 1.5)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    window: int
    residual: float
    stderr: float = 0.0


def fit_rate(xs, ys, window: int | None = None) -> RateFit:
    """Least-squares slope of ``log10 y`` against ``log10 x`` over the trailing window.

    ``stderr`` is the standard error of the slope (0 for a 2-parameter fit of
    exactly collinear data).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys differ in length")
    window = len(xs) if window is None else int(window)
    if window < 3 or len(xs) < window:
        raise ValueError("need at least 3 points inside the window")
    x, y = xs[-window:], ys[-window:]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("rate fits need positive values")
    lx, ly = np.log10(x), np.log10(y)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.linalg.norm(A @ np.array([slope, intercept]) - ly))
    stderr = resid / math.sqrt((window - 2) * np.sum((lx - lx.mean()) ** 2))
    return RateFit(float(slope), float(intercept), window, resid, float(stderr))


def geometric_fit(values):
    """Fit ``log Z_n ~ log C + n log q`` to the upper envelope
    ``max_{j >= n} Z_j`` of a positive sequence.

    Returns ``(q, C, residual)`` where the residual is the RMS deviation in
    natural-log units.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or np.any(v <= 0):
        raise ValueError("need at least two positive values")
    env = np.maximum.accumulate(v[::-1])[::-1]
    n = np.arange(len(v))
    slope, intercept = np.polyfit(n, np.log(env), 1)
    resid = float(np.sqrt(np.mean((np.log(env) - (intercept + slope * n)) ** 2)))
    return float(np.exp(slope)), float(np.exp(intercept)), resid


def weighted_cost(runlog: RunLog) -> float:
    """``||grad(u* - u)|| * cost^(1/2)`` at the final record."""
    if not runlog.records:
        raise ValueError("empty run")
    last = runlog.records[-1]
    if last.h1_error is None:
        raise ValueError("weighted cost needs an exact solution")
    return last.h1_error * math.sqrt(last.cum_cost)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def emit_csv(runlog: RunLog, path) -> None:
    """One row per (ell, k) step, floats with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in runlog.records:
            w.writerow([_fmt(v) for v in (r.ell, r.k, r.abs_index, r.ndofs, r.zeta, r.eta,
                                          r.z_norm, r.tildeZ, r.h1_error, r.cum_cost,
                                          r.wall_time)])


def read_csv(path) -> list:
    """Rows of a run CSV as dicts of numbers (``h1_error`` None if empty)."""
    ints = {"ell", "k", "abs_index", "ndofs", "cum_cost"}
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (None if v == "" else int(v) if k in ints else float(v))
                         for k, v in row.items()})
    return rows


def summarize(runlog: RunLog, window: int = 8) -> dict:
    finals = runlog.final_records()
    out = {
        "problem": runlog.problem,
        "termination": runlog.termination,
        "levels": len(runlog.levels),
        "final_ndofs": finals[-1].ndofs,
        "steps": len(runlog.records),
        "k_underline": runlog.k_underline,
        "final_zeta": finals[-1].zeta,
    }
    w = min(window, len(finals))
    if w >= 3:
        out["zeta_rate"] = fit_rate([r.ndofs for r in finals], [r.zeta for r in finals], w).slope
        if finals[-1].h1_error is not None:
            out["error_rate_cost"] = fit_rate([r.cum_cost for r in finals],
                                              [r.h1_error for r in finals], w).slope
    if finals[-1].h1_error is not None:
        out["final_h1_error"] = finals[-1].h1_error
        out["weighted_cost"] = weighted_cost(runlog)
    return out


def _problem(name):
    return benchmark1() if name == "zshape" else benchmark2()


def table1_sweep(lambdas=TABLE1_LAMBDAS, deltas=TABLE1_DELTAS,
                 scalar_products=tuple(ScalarProductSpec), error_tol: float = 1e-2,
                 theta: float = 0.5, max_dofs: int = 10_000_000, solver_rtol: float = 1e-10):
    """Error-weighted cost for Benchmark 2 over a (lambda, delta, scalar product) grid."""
    problem = benchmark2()
    rows = []
    for lam, delta, spec in itertools.product(lambdas, deltas, scalar_products):
        params = AdaptiveParams(theta=theta, lam=lam, delta=delta, scalar_product=spec,
                                max_dofs=max_dofs, error_tol=error_tol, solver_rtol=solver_rtol)
        runlog = run(problem, params)
        ks = runlog.k_underline[-3:]
        rows.append({
            "lambda": lam, "delta": delta, "scalar_product": ScalarProductSpec(spec).value,
            "weighted_cost": weighted_cost(runlog),
            "avg_k_last3": float(np.mean(ks)),
            "final_ndofs": runlog.records[-1].ndofs,
            "h1_error": runlog.records[-1].h1_error,
            "termination": runlog.termination,
        })
    return rows


def _parser():
    p = argparse.ArgumentParser(
        prog="zarafem",
        description="Adaptive Zarantonello FEM for quasilinear elliptic benchmarks.")
    p.add_argument("--benchmark", choices=["zshape", "lshape"], required=True)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=None,
                   help="damping; default alpha/L^2 for zshape, 1.5 for lshape")
    p.add_argument("--scalar-product", choices=[s.value for s in ScalarProductSpec], default="h1")
    p.add_argument("--max-dofs", type=int, default=100_000)
    p.add_argument("--error-tol", type=float, default=None)
    p.add_argument("--solver-rtol", type=float, default=1e-10)
    p.add_argument("--output", default=None, help="CSV path (default: <benchmark>.csv)")
    p.add_argument("--sweep", action="store_true",
                   help="weighted-cost grid over lambda, delta and all scalar products (lshape)")
    p.add_argument("--sweep-lambdas", type=float, nargs="+", default=list(TABLE1_LAMBDAS))
    p.add_argument("--sweep-deltas", type=float, nargs="+", default=list(TABLE1_DELTAS))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def cli_main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.sweep:
            if args.benchmark != "lshape":
                parser.print_usage(sys.stderr)
                print("zarafem: error: --sweep needs --benchmark lshape", file=sys.stderr)
                return 2
            rows = table1_sweep(args.sweep_lambdas, args.sweep_deltas,
                                error_tol=args.error_tol or 1e-2, theta=args.theta,
                                max_dofs=args.max_dofs, solver_rtol=args.solver_rtol)
            path = args.output or "table1.csv"
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                for row in rows:
                    w.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
            for row in rows:
                print(f"lambda={row['lambda']:<5g} delta={row['delta']:<4g} "
                      f"{row['scalar_product']:<8s} weighted_cost={row['weighted_cost']:.2f} "
                      f"avg_k={row['avg_k_last3']:.2f}")
            print(f"wrote {path}")
            return 0

        problem = _problem(args.benchmark)
        delta = args.delta if args.delta is not None else problem.suggested_delta
        params = AdaptiveParams(theta=args.theta, lam=args.lam, delta=delta,
                                scalar_product=args.scalar_product, max_dofs=args.max_dofs,
                                error_tol=args.error_tol, solver_rtol=args.solver_rtol)
        runlog = run(problem, params)
        path = args.output or f"{args.benchmark}.csv"
        emit_csv(runlog, path)
        summary = summarize(runlog)
        for key, val in summary.items():
            print(f"{key}: {val}")
        print(f"wrote {path}")
        return 0
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"zarafem: error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main())
