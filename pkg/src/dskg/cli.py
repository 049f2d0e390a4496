"""Command-line front end: `dskg <subcommand> --config <path> [--out <dir>] [--self-check]`.

Every subcommand writes series.csv, summary.json and plot.gp into the
output directory. Exit status: 0 success or PASS, 2 verification FAIL,
1 error (including invalid configuration).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from typing import Optional

import numpy as np

from . import verify
from .config import SUBCOMMANDS, RunConfig, load, preset_values
from .errors import ConfigError, DskgError, ForbiddenInterval, NoContraction
from .kernels import classify_mass
from .norms import fit_decay_rate, sobolev_norms
from .semilinear import expected_gamma, picard_solve
from .transform import solve_linear_cauchy, solve_source
from .wave_base import DataKind, Field, GridKind, SpatialGrid

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
HEADER = "t,h_s_norm,weighted_norm"
FIT_START = math.log(10.0)  # phi(t) > 0.9


class Outcome:
    """Result of one run: series columns, summary fields and pass flag."""

    def __init__(self, t, hs, weighted, summary: dict, passed: Optional[bool] = None):
        self.t = np.asarray(t, dtype=float)
        self.hs = np.asarray(hs, dtype=float)
        self.weighted = np.asarray(weighted, dtype=float)
        self.summary = summary
        self.passed = passed

    @property
    def status(self) -> int:
        return EXIT_FAIL if self.passed is False else EXIT_OK


# ---------------------------------------------------------------- helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _bound(cfg: RunConfig, mp):
    try:
        b = expected_gamma(mp, cfg.alpha, cfg.problem())
    except ForbiddenInterval as exc:
        return None, {"value": None, "note": str(exc)}
    return b, {"value": b.value, "strict": b.strict, "branch": b.branch, "forbidden": b.forbidden}


def _gamma(cfg: RunConfig, bound) -> float:
    g = cfg.norm.get("gamma", "auto")
    if g != "auto":
        return float(g)
    return 0.0 if bound is None else float(bound.value)


def _fit(times, norms, mp=None, window=None):
    t = np.asarray(times)
    series = np.asarray(norms)
    if mp is not None and mp.imaginary and mp.mu > 0:
        series = verify.envelope(t, series, math.pi / mp.mu)
    lo, hi = window if window else (FIT_START, float(t[-1]))
    sel = (t >= lo) & (t <= hi)
    if np.count_nonzero(sel) < 8 or np.any(series[sel] <= 0):
        return None
    fit = fit_decay_rate(t, series, (lo, hi), log_correction=mp is not None and mp.sgnM == 0)
    return {"gamma": fit.gamma, "r2": fit.r2, "window": list(fit.window), "log_corrected": fit.log_corrected}


def _weighted(times, norms, gamma):
    return np.maximum.accumulate(np.exp(gamma * np.asarray(times)) * np.asarray(norms))


def _mass_dict(mp):
    return {"n": mp.n, "m": mp.m, "regime": mp.regime.value, "mu": mp.mu, "imaginary": mp.imaginary}


def _source_callable(cfg: RunConfig, grid):
    spec = cfg.source_spec()
    if spec is None:
        return None
    profile = preset_values(grid, spec)
    rate = float(spec.get("decay", 0.0))
    return lambda b: profile * math.exp(-rate * b)


# ---------------------------------------------------------------- subcommands


def run_solve_linear(cfg: RunConfig, self_check: bool) -> Outcome:
    mp = cfg.mass_params()
    grid, A, times, q = cfg.build_grid(), cfg.build_operator(), cfg.build_times(), cfg.build_quadrature()
    traj = solve_linear_cauchy(cfg.field_from("psi0"), cfg.field_from("psi1"), mp, A, times, q, self_check=self_check)
    hs = sobolev_norms(grid, traj.values, cfg.s)
    bound, bd = _bound(cfg, mp)
    gamma = _gamma(cfg, bound)
    data = DataKind.SINE if not np.any(cfg.field_from("psi0").values) else DataKind.COSINE
    pred, bound_only = verify.predicted_rate(mp, data)
    summary = {
        "mass": _mass_dict(mp),
        "expected_gamma": bd,
        "gamma": gamma,
        "fitted_gamma": _fit(times, hs, mp, cfg.verify.get("window")),
        "linear_rate": {"value": pred, "bound_only": bound_only},
        "empirical_constants": {"sup_weighted_norm": float(np.max(_weighted(times, hs, gamma)))},
        "self_check": self_check,
    }
    return Outcome(times, hs, _weighted(times, hs, gamma), summary)


def run_solve_source(cfg: RunConfig, self_check: bool) -> Outcome:
    mp = cfg.mass_params()
    grid, A, times, q = cfg.build_grid(), cfg.build_operator(), cfg.build_times(), cfg.build_quadrature()
    f = _source_callable(cfg, grid)
    if f is None:
        raise DskgError("solve-source needs data.source")
    traj = solve_source(f, grid, mp, A, times, q, self_check=self_check)
    hs = sobolev_norms(grid, traj.values, cfg.s)
    bound, bd = _bound(cfg, mp)
    gamma = _gamma(cfg, bound)
    fit = _fit(times, hs, mp, cfg.verify.get("window"))
    summary = {
        "mass": _mass_dict(mp),
        "expected_gamma": bd,
        "gamma": gamma,
        "fitted_gamma": fit,
        "empirical_constants": {"sup_weighted_norm": float(np.max(_weighted(times, hs, gamma)))},
        "self_check": self_check,
    }
    return Outcome(times, hs, _weighted(times, hs, gamma), summary)


def run_solve_semilinear(cfg: RunConfig, self_check: bool) -> Outcome:
    mp = cfg.mass_params()
    grid, A, times, q = cfg.build_grid(), cfg.build_operator(), cfg.build_times(), cfg.build_quadrature()
    nl = cfg.build_nonlinearity()
    psi0, psi1 = cfg.field_from("psi0"), cfg.field_from("psi1")
    bound, bd = _bound(cfg, mp)
    gamma = _gamma(cfg, bound)
    opts = cfg.verify
    tol = float(opts.get("tol", 1e-8))
    eps = float(sobolev_norms(grid, np.vstack([psi0.values, psi1.values]), cfg.s).sum())
    f = _source_callable(cfg, grid)
    summary = {"mass": _mass_dict(mp), "expected_gamma": bd, "gamma": gamma, "epsilon": eps}
    try:
        traj, log, _, _ = picard_solve(
            psi0, psi1, nl, mp, A, gamma, s=cfg.s, tol=tol, max_iter=int(opts.get("max_iter", 40)),
            times=times, q=q, source=f, grid=grid,
        )
    except NoContraction as exc:
        summary.update({"contraction": False, "note": str(exc), "pass": False})
        return Outcome(times[:1], [math.nan], [math.nan], summary, passed=False)
    hs = sobolev_norms(grid, traj.values, cfg.s)
    res_limit = float(opts.get("residual_limit", 2e-8))
    checks = {
        "converged": log.converged,
        "ratios_below_one": all(r < 1.0 for r in log.ratios),
        "residual_ok": log.final_residual <= res_limit,
        "small_solution": log.weighted_norm < 2.0 * eps if f is None else True,
    }
    passed = all(checks.values())
    summary.update({
        "contraction": True,
        "iterations": log.iterations,
        "distances": log.distances,
        "ratios": log.ratios,
        "final_residual": log.final_residual,
        "fitted_gamma": _fit(times, hs, mp, cfg.verify.get("window")),
        "checks": checks,
        "pass": passed,
        "empirical_constants": {
            "sup_weighted_norm": log.weighted_norm,
            "weighted_norm_over_epsilon": log.weighted_norm / eps if eps > 0 else None,
        },
    })
    if self_check:
        ref, _, _, _ = picard_solve(
            psi0, psi1, nl, mp, A, gamma, s=cfg.s, tol=tol, times=times, q=q.doubled(), source=f, grid=grid,
        )
        d = float(np.max(np.abs(ref.values - traj.values)) / max(np.max(np.abs(ref.values)), 1e-300))
        summary["self_check_relative_change"] = d
    return Outcome(times, hs, _weighted(times, hs, gamma), summary, passed)


def _M_list(cfg: RunConfig):
    if "M" in cfg.verify:
        out = []
        for v in cfg.verify["M"]:
            out.append(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v))
        return out
    if cfg.mass:
        return [classify_mass(int(cfg.mass["n"]), float(cfg.mass["m"])).M]
    return [0.3, 0.5, 1.118, -0.66j, -1.32j]


def run_verify_kernels(cfg: RunConfig, self_check: bool) -> Outcome:
    h = float(cfg.verify.get("h", 1e-2))
    reps = verify.parallel_map(lambda M: verify.check_kernel_pde(M, h), _M_list(cfg))
    passed = all(r.passed for r in reps)
    summary = {
        "reports": [r.to_dict() for r in reps],
        "pass": passed,
        "empirical_constants": {"orders": [r.order for r in reps]},
    }
    k = np.arange(len(reps), dtype=float)
    return Outcome(k, [r.residual_h for r in reps], [r.residual_h2 for r in reps], summary, passed)


def run_verify_estimates(cfg: RunConfig, self_check: bool) -> Outcome:
    o = cfg.verify
    z = verify.default_z_grid(int(o.get("z_points", 9)), float(o.get("z_min", 1.1)), float(o.get("z_max", 1e3)))
    tol = float(o.get("tol", 1e-10))
    a_list = np.atleast_1d(o.get("a", [-0.5, 0.0])).tolist()
    mu_list = np.atleast_1d(o.get("mu", [0.0, 1.0])).tolist()
    reps = []
    for a in a_list:
        reps.append(verify.check_lemma_92(float(a), z, tol))
        for mu in mu_list:
            reps.append(verify.check_prop_134(float(a), float(mu), z, tol))
    passed = all(r.passed for r in reps)
    ratios = np.max(np.array([r.ratios for r in reps]), axis=0)
    summary = {
        "reports": [r.to_dict() for r in reps],
        "pass": passed,
        "empirical_constants": {f"{r.name}{sorted(r.params.items())}": r.max_ratio for r in reps},
    }
    return Outcome(z, ratios, np.maximum.accumulate(ratios), summary, passed)


def run_verify_huygens(cfg: RunConfig, self_check: bool) -> Outcome:
    mp = cfg.mass_params()
    grid = cfg.build_grid() if "grid" in cfg.raw else SpatialGrid(GridKind.RADIAL_3D, 256, 2.0)
    times = cfg.build_times() if "time" in cfg.raw else None
    g, data = None, DataKind(cfg.verify.get("data", "SineData"))
    key = "psi1" if data is DataKind.SINE else "psi0"
    if key in cfg.data:
        g = preset_values(grid, cfg.data[key])
    rep = verify.check_huygens(
        mp, grid, g, float(cfg.verify.get("probe", 0.3)), times, data,
        cfg.build_operator(), cfg.build_quadrature(), s=cfg.s,
    )
    bound, bd = _bound(cfg, mp)
    gamma = _gamma(cfg, bound)
    t = np.asarray(rep.times)
    summary = {
        "mass": _mass_dict(mp),
        "expected_gamma": bd,
        "report": rep.to_dict(),
        "pass": rep.passed,
        "fitted_gamma": _fit(t, rep.norms, mp),
        "empirical_constants": {"tail_ratio": rep.ratio},
    }
    return Outcome(t, rep.norms, _weighted(t, rep.norms, gamma), summary, rep.passed)


def run_verify_asymptotics(cfg: RunConfig, self_check: bool) -> Outcome:
    grid = cfg.build_grid()
    n = int(cfg.mass.get("n", 3))
    default0 = {"preset": "gaussian-bump", "width": 1.5}
    psi0 = Field(grid, preset_values(grid, cfg.data.get("psi0", default0)))
    psi1 = Field(grid, preset_values(grid, cfg.data.get("psi1", {"preset": "zero"})))
    A = cfg.build_operator()
    reps = []
    for N in cfg.verify.get("N", [1, 2]):
        win = cfg.verify.get("window")
        times = np.linspace(win[0], win[1], int(cfg.verify.get("samples", 25))) if win else None
        reps.append(verify.check_asymptotics(psi0, psi1, int(N), times, n, A, cfg.build_quadrature()))
    k_max = int(cfg.verify.get("k_max", 3))
    remark = max(verify.remark_identity_error(psi0, k_max, A), verify.remark_identity_error(psi1, k_max, A)
                 if np.any(psi1.values) else 0.0)
    remark_ok = remark <= float(cfg.verify.get("remark_tol", 1e-10))
    passed = all(r.passed for r in reps) and remark_ok
    first = reps[0]
    t = np.asarray(first.times)
    err = np.asarray(first.errors)
    summary = {
        "reports": [r.to_dict() for r in reps],
        "remark_identity_error": remark,
        "remark_ok": remark_ok,
        "fitted_gamma": {"gamma": first.fitted_slope, "r2": first.r2, "window": list(first.window)},
        "expected_gamma": {"value": first.predicted_slope, "branch": "asymptotic remainder"},
        "pass": passed,
        "empirical_constants": {f"N={r.N}": r.fitted_slope for r in reps},
    }
    return Outcome(t, err, err * np.exp(first.predicted_slope * t), summary, passed)


def _read_series(path: str):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or ",".join(rows[0]) != HEADER:
        raise DskgError(f"{path}: expected header {HEADER!r}")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return data[:, 0], data[:, 1]


def run_fit_decay(cfg: RunConfig, self_check: bool) -> Outcome:
    mp = cfg.mass_params()
    o = cfg.verify
    data = DataKind(o.get("data", "SineData"))
    win = tuple(o["window"]) if "window" in o else None
    if "input" in o:
        t, ns = _read_series(o["input"])
        series = ns
        if mp.imaginary and mp.mu > 0:
            series = verify.envelope(t, ns, math.pi / mp.mu)
        w = win or (FIT_START, float(t[-1]))
        fit = fit_decay_rate(t, series, w, log_correction=mp.sgnM == 0)
        pred, bound_only = verify.predicted_rate(mp, data)
        ok = fit.gamma >= pred * (1 - verify.DECAY_RTOL) if bound_only else abs(fit.gamma - pred) <= verify.DECAY_RTOL * pred
        fitted = {"gamma": fit.gamma, "r2": fit.r2, "window": list(fit.window), "log_corrected": fit.log_corrected}
        rep = {"predicted": pred, "fitted": fit.gamma, "bound_only": bound_only, "passed": bool(ok)}
    else:
        grid = cfg.build_grid()
        times = cfg.build_times() if "time" in cfg.raw else None
        key = "psi1" if data is DataKind.SINE else "psi0"
        g = preset_values(grid, cfg.data[key]) if key in cfg.data else None
        r = verify.check_linear_decay(mp, data, cfg.s, times, grid, cfg.build_operator(), g, cfg.build_quadrature(), win)
        t, ns, ok = np.asarray(r.times), np.asarray(r.norms), r.passed
        fitted = {"gamma": r.fitted, "r2": r.r2, "window": list(r.window), "log_corrected": r.log_corrected}
        rep = r.to_dict()
        rep.pop("times"), rep.pop("norms")
    bound, bd = _bound(cfg, mp)
    summary = {
        "mass": _mass_dict(mp),
        "expected_gamma": bd,
        "fitted_gamma": fitted,
        "report": rep,
        "pass": bool(ok),
        "empirical_constants": {"fitted_rate": fitted["gamma"]},
    }
    return Outcome(t, ns, _weighted(t, ns, fitted["gamma"]), summary, bool(ok))


RUNNERS = {
    "solve-linear": run_solve_linear,
    "solve-source": run_solve_source,
    "solve-semilinear": run_solve_semilinear,
    "verify-kernels": run_verify_kernels,
    "verify-estimates": run_verify_estimates,
    "verify-huygens": run_verify_huygens,
    "verify-asymptotics": run_verify_asymptotics,
    "fit-decay": run_fit_decay,
}


# ---------------------------------------------------------------- output


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_csv(out: Outcome) -> str:
    order = np.argsort(out.t, kind="stable")
    t = out.t[order]
    keep = np.r_[True, np.diff(t) > 0]
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for i in order[keep]:
        buf.write(",".join(f"{v:.17g}" for v in (out.t[i], out.hs[i], out.weighted[i])) + "\n")
    return buf.getvalue()


def plot_script(subcommand: str) -> str:
    return "\n".join([
        "# gnuplot script; run with: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{subcommand}'",
        "set xlabel 't'",
        "set logscale y",
        "set format y '%.1e'",
        "plot 'series.csv' using 1:2 with linespoints title 'H_s norm', \\",
        "     '' using 1:3 with lines title 'weighted norm'",
        "",
    ])


def write_outputs(out_dir: str, cfg: RunConfig, outcome: Outcome, warnings_list):
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        "subcommand": cfg.subcommand,
        "config": cfg.raw,
        "seed": cfg.seed,
        "warnings": [str(w) for w in warnings_list],
        "status": "FAIL" if outcome.passed is False else ("PASS" if outcome.passed else "OK"),
    }
    summary.update(outcome.summary)
    summary.setdefault("pass", outcome.passed if outcome.passed is not None else True)
    summary.setdefault("fitted_gamma", None)
    summary.setdefault("expected_gamma", None)
    text = json.dumps(_clean(summary), sort_keys=True, indent=2, allow_nan=False) + "\n"
    _atomic_write(os.path.join(out_dir, "series.csv"), series_csv(outcome))
    _atomic_write(os.path.join(out_dir, "summary.json"), text)
    _atomic_write(os.path.join(out_dir, "plot.gp"), plot_script(cfg.subcommand))


def run(cfg: RunConfig, out_dir: str, self_check: bool = False, warnings_list=()) -> int:
    """Execute cfg and write the three artifacts; returns the exit status."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        outcome = RUNNERS[cfg.subcommand](cfg, self_check)
    write_outputs(out_dir, cfg, outcome, warnings_list)
    return outcome.status


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="dskg", description="de Sitter Klein-Gordon transform solver and checks")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: config 'output' or ./dskg-out)")
    p.add_argument("--self-check", action="store_true", help="repeat the solve with doubled quadrature")
    args = p.parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg, warns = load(text, args.subcommand)
        for w in warns:
            print(str(w), file=sys.stderr)
        out_dir = args.out or cfg.output or "dskg-out"
        status = run(cfg, out_dir, args.self_check, warns)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except (DskgError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{args.subcommand}: {'FAIL' if status == EXIT_FAIL else 'OK'} -> {out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
