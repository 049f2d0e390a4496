"""Numerical certification harness.

Each check returns a report dataclass with a `passed` flag and the
measured quantities; nothing here hard-codes an analytic constant.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, LateWindowUnderflow, QuadratureFailure
from .kernels import E_kernel, MassParameters, Regime, classify_mass
from .norms import fit_decay_rate, sobolev_norms
from .specfun import hyp2f1, hyp2f1_diff_quotient
from .transform import (
    QuadratureSpec,
    Trajectory,
    phi_of,
    solve_linear_cauchy,
    time_grid,
)
from .wave_base import ConstantLaplacian, DataKind, Field, GridKind, Operator, SpatialGrid, solve_wave

DRIFT_LIMIT = 0.20
DECAY_RTOL = 0.05
HUYGENS_LIMIT = 1e-6
SUPPORT_LEVEL = 1e-12
UNDERFLOW = 1e-14


def thread_count() -> int:
    try:
        n = int(os.environ.get("DSKG_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def parallel_map(fn, items):
    """Order-preserving map, threaded up to DSKG_THREADS."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- integral estimates


@dataclass
class EstimateReport:
    name: str
    params: dict
    z: list
    ratios: list
    max_ratio: float
    witness: float
    refined_max_ratio: float = float("nan")
    drift: float = float("nan")
    passed: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def default_z_grid(points: int = 9, lo: float = 1.1, hi: float = 1e3) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def refine_grid(z: Sequence[float]) -> np.ndarray:
    """Insert geometric midpoints: doubles the sweep density."""
    z = np.asarray(z, dtype=float)
    mids = np.sqrt(z[:-1] * z[1:])
    return np.sort(np.concatenate([z, mids]))


def _quad_alg(f, upper, a, tol):
    """int_0^upper y^a f(y) dy with the algebraic endpoint weight."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if a == 0:
                val, err = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=tol, limit=400)
            else:
                val, err = integrate.quad(
                    f, 0.0, upper, weight="alg", wvar=(a, 0.0), epsabs=0.0, epsrel=tol, limit=400
                )
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not math.isfinite(val) or err > 100.0 * tol * abs(val) + 1e-300:
        raise QuadratureFailure(f"quadrature error estimate {err:g} too large for value {val:g}")
    return val


def log_kernel_integral(z: float, a: float, tol: float = 1e-10) -> float:
    zp2 = (z + 1.0) ** 2
    zm = z - 1.0

    def f(y):
        d = zp2 - y * y
        arg = (zm - y) * (zm + y) / d
        return float(hyp2f1(0.5, 0.5, 1.0, min(max(arg, 0.0), 1.0 - 1e-16)).real) / math.sqrt(d)

    return _quad_alg(f, zm, a, tol)


def log_kernel_bound(z: float, a: float) -> float:
    return (z - 1.0) ** (1.0 + a) * (1.0 + math.log(z)) / z


def bracket_kernel_integral(z: float, a: float, mu: float, tol: float = 1e-10) -> float:
    zp2 = (z + 1.0) ** 2
    zm = z - 1.0
    p1 = (0.5 + 1j * mu, 0.5 + 1j * mu, 1.0)
    p2 = (-0.5 + 1j * mu, 0.5 + 1j * mu, 1.0)

    def f(y):
        d = zp2 - y * y
        zeta = min(max((zm - y) * (zm + y) / d, 0.0), 1.0 - 1e-16)
        c1 = z - z * z - 1j * mu * (1.0 - z * z - y * y)
        dq = complex(hyp2f1_diff_quotient(p1, p2, zeta))
        F2 = complex(hyp2f1(*p2, zeta))
        return abs(c1 * dq / d - 0.5 * F2) / math.sqrt(d)

    return _quad_alg(f, zm, a, tol)


def bracket_kernel_bound(z: float, a: float, mu: float) -> float:
    sgn = 0 if mu == 0 else 1
    return z**-0.5 * (z - 1.0) ** (1.0 + a) * (1.0 + math.log(z)) ** (1 - sgn)


def _sweep(name, params, integral, bound, z_grid, tol, refine):
    z_grid = np.asarray(sorted(z_grid), dtype=float)
    if z_grid.size == 0 or np.any(z_grid <= 1.0):
        raise DomainError("z grid must lie in (1, inf)")

    def run(zs, tl):
        vals = parallel_map(lambda z: integral(float(z), tl), zs)
        return [v / bound(float(z)) for v, z in zip(vals, zs)]

    ratios = run(z_grid, tol)
    if not all(r > 0 and math.isfinite(r) for r in ratios):
        raise QuadratureFailure(f"{name}: non-positive or non-finite ratio")
    k = int(np.argmax(ratios))
    rep = EstimateReport(name, params, z_grid.tolist(), ratios, float(ratios[k]), float(z_grid[k]))
    if refine:
        zr = refine_grid(z_grid)
        rr = run(zr, tol * 1e-2)
        rep.refined_max_ratio = float(max(rr))
        rep.drift = abs(rep.refined_max_ratio - rep.max_ratio) / rep.max_ratio
        rep.passed = rep.drift < DRIFT_LIMIT
    else:
        rep.passed = True
    return rep


def check_lemma_92(a: float, z_grid=None, tol: float = 1e-10, refine: bool = True) -> EstimateReport:
    if not (-1.0 < a <= 0.0):
        raise DomainError("check_lemma_92 needs a in (-1, 0]")
    z_grid = default_z_grid() if z_grid is None else z_grid
    return _sweep(
        "log_kernel_integral",
        {"a": a},
        lambda z, tl: log_kernel_integral(z, a, tl),
        lambda z: log_kernel_bound(z, a),
        z_grid,
        tol,
        refine,
    )


def check_prop_134(a: float, mu: float, z_grid=None, tol: float = 1e-10, refine: bool = True) -> EstimateReport:
    if not a > -1.0:
        raise DomainError("check_prop_134 needs a > -1")
    if mu < 0:
        raise DomainError("mu must be >= 0")
    z_grid = default_z_grid() if z_grid is None else z_grid
    return _sweep(
        "bracket_kernel_integral",
        {"a": a, "mu": mu},
        lambda z, tl: bracket_kernel_integral(z, a, mu, tl),
        lambda z: bracket_kernel_bound(z, a, mu),
        z_grid,
        tol,
        refine,
    )


# ---------------------------------------------------------------- kernel PDE residual


@dataclass
class ResidualReport:
    M: complex
    h: float
    residual_h: float
    residual_h2: float
    order: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["M"] = [self.M.real, self.M.imag]
        return d


def kernel_pde_residual(M, h: float, b: float = 0.2, points=None) -> float:
    """max |E_tt - e^{-2t} E_rr - M^2 E| by centered differences of step h."""
    M = complex(M)
    if points is None:
        points = [(f, t) for t in (0.9, 1.3, 2.0) for f in (0.2, 0.5)]
    worst = 0.0
    for frac, t in points:
        gap = math.exp(-b) - math.exp(-t)
        r = frac * gap
        rs = np.array([r - h, r, r + h, r, r])
        ts = np.array([t, t, t, t - h, t + h])
        E = E_kernel(rs, ts, b, M)
        e_rr = (E[0] - 2 * E[1] + E[2]) / h**2
        e_tt = (E[3] - 2 * E[1] + E[4]) / h**2
        res = e_tt - math.exp(-2 * t) * e_rr - (M * M).real * E[1]
        worst = max(worst, abs(res))
    return worst


def check_kernel_pde(M, h: float = 1e-2, target: float = 2.0, band: float = 0.2) -> ResidualReport:
    r1 = kernel_pde_residual(M, h)
    r2 = kernel_pde_residual(M, h / 2)
    order = math.log2(r1 / r2) if r1 > 0 and r2 > 0 else float("nan")
    return ResidualReport(complex(M), h, r1, r2, order, abs(order - target) <= band)


# ---------------------------------------------------------------- linear decay


@dataclass
class DecayReport:
    regime: str
    data: str
    predicted: float
    fitted: float
    r2: float
    window: tuple
    bound_only: bool
    log_corrected: bool
    passed: bool
    times: list = field(default_factory=list, repr=False)
    norms: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


def predicted_rate(mp: MassParameters, data: DataKind):
    """(gamma, bound_only) for the H_s decay of psi0 (cosine) or psi1 (sine) data."""
    n = mp.n
    if mp.regime in (Regime.SMALL, Regime.KNOT, Regime.CRITICAL):
        return n / 2.0 - mp.mu, False
    if data is DataKind.SINE:
        return n / 2.0, False
    return (n - 1) / 2.0, True


def envelope(times, values, period):
    """Running maximum over the trailing window of length `period`."""
    t = np.asarray(times)
    v = np.asarray(values)
    out = np.empty_like(v)
    j = 0
    for i in range(t.size):
        while t[i] - t[j] > period:
            j += 1
        out[i] = np.max(v[j : i + 1])
    return out


def bump_data(grid: SpatialGrid, width: float = 0.5, center: Optional[float] = None) -> np.ndarray:
    x = grid.x
    if grid.kind is GridKind.RADIAL_3D:
        return np.exp(-((x / width) ** 2))
    c = 0.5 * grid.L if center is None else center
    d = (x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L
    return np.exp(-((d / width) ** 2))


def check_linear_decay(
    mp: MassParameters,
    data: DataKind = DataKind.SINE,
    s: float = 1.0,
    times=None,
    grid: Optional[SpatialGrid] = None,
    A: Optional[Operator] = None,
    g: Optional[np.ndarray] = None,
    q: Optional[QuadratureSpec] = None,
    window=None,
) -> DecayReport:
    data = DataKind(data)
    grid = grid or SpatialGrid(GridKind.PERIODIC_1D, 128, 20.0)
    A = A or ConstantLaplacian()
    times = time_grid(12.0, 241) if times is None else np.asarray(times, dtype=float)
    g = bump_data(grid, 1.0) if g is None else g
    zero = Field(grid, np.zeros(grid.N))
    f = Field(grid, g)
    psi0, psi1 = (f, zero) if data is DataKind.COSINE else (zero, f)
    traj = solve_linear_cauchy(psi0, psi1, mp, A, times, q)
    ns = sobolev_norms(grid, traj.values, s)
    if window is None:
        window = (math.log(10.0), float(times[-1]))  # phi(t) > 0.9
    series = ns
    if mp.imaginary and mp.mu > 0:
        series = envelope(times, ns, math.pi / mp.mu)
    log_corr = mp.sgnM == 0
    fit = fit_decay_rate(times, series, window, log_correction=log_corr)
    pred, bound_only = predicted_rate(mp, data)
    if bound_only:
        ok = fit.gamma >= pred * (1.0 - DECAY_RTOL)
    else:
        ok = abs(fit.gamma - pred) <= DECAY_RTOL * pred
    return DecayReport(
        mp.regime.value, data.value, pred, fit.gamma, fit.r2, fit.window, bound_only, log_corr, bool(ok),
        times.tolist(), ns.tolist(),
    )


# ---------------------------------------------------------------- Huygens


@dataclass
class HuygensReport:
    m: float
    regime: str
    probe: float
    support: float
    window_start: float
    peak: float
    tail: float
    ratio: float
    passed: bool
    times: list = field(default_factory=list, repr=False)
    probe_values: list = field(default_factory=list, repr=False)
    norms: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


def _support_distance(grid: SpatialGrid, g: np.ndarray, jp: int) -> float:
    live = np.nonzero(np.abs(g) > SUPPORT_LEVEL * np.max(np.abs(g)))[0]
    x = grid.x
    if grid.kind is GridKind.RADIAL_3D:
        return float(x[jp] + x[live[-1]])
    d = np.abs(x[live] - x[jp])
    d = np.minimum(d, grid.L - d)
    return float(np.max(d))


def check_huygens(
    mp: MassParameters,
    grid: Optional[SpatialGrid] = None,
    g: Optional[np.ndarray] = None,
    probe: float = 0.3,
    times=None,
    data: DataKind = DataKind.SINE,
    A: Optional[Operator] = None,
    q: Optional[QuadratureSpec] = None,
    s: float = 1.0,
) -> HuygensReport:
    grid = grid or SpatialGrid(GridKind.RADIAL_3D, 256, 2.0)
    A = A or ConstantLaplacian()
    times = time_grid(8.0, 161) if times is None else np.asarray(times, dtype=float)
    if g is None:
        g = bump_data(grid, 0.05 * math.sqrt(2.0))
    data = DataKind(data)
    x = grid.x
    if grid.kind is GridKind.RADIAL_3D:
        jp = int(np.argmin(np.abs(x - probe)))
    else:
        c = x[int(np.argmax(np.abs(g)))]
        jp = int(np.argmin(np.abs(x - (c + probe))))
    reach = _support_distance(grid, g, jp)
    if reach >= 1.0:
        raise DomainError("data support plus probe distance must stay inside the light cone phi < 1")
    zero = Field(grid, np.zeros(grid.N))
    f = Field(grid, g)
    psi0, psi1 = (f, zero) if data is DataKind.COSINE else (zero, f)
    traj = solve_linear_cauchy(psi0, psi1, mp, A, times, q)
    v = traj.values[:, jp]
    win = phi_of(times) > reach
    if not np.any(win):
        raise DomainError("time window never passes the wave; extend T")
    peak = float(np.max(np.abs(v)))
    tail = float(np.max(np.abs(v[win])))
    ratio = tail / peak if peak > 0 else 0.0
    return HuygensReport(
        mp.m, mp.regime.value, float(x[jp]), reach, float(times[np.argmax(win)]), peak, tail, ratio,
        bool(ratio <= HUYGENS_LIMIT), times.tolist(), v.tolist(),
        sobolev_norms(grid, traj.values, s).tolist(),
    )


# ---------------------------------------------------------------- asymptotics


def asymptotic_coefficients(phi: Field, k_max: int, A: Optional[Operator] = None):
    """Lists (V^(k), v^(k)), k = 0..k_max, of Taylor coefficients at r = 1 in powers of (1 - r)."""
    A = A or ConstantLaplacian()
    if not isinstance(A, ConstantLaplacian):
        raise DomainError("asymptotic coefficients need the spectral (constant Laplacian) path")
    Vs = solve_wave(phi, DataKind.SINE, A)
    vs = solve_wave(phi, DataKind.COSINE, A)
    one = np.array([1.0])
    V, v = [], []
    for k in range(k_max + 1):
        sgn = (-1.0) ** k / math.factorial(k)
        if k == 0:
            V.append(Vs.evaluate_many(one)[0])
            v.append(vs.evaluate_many(one)[0])
        else:
            V.append(sgn * Vs.derivative_many(one, k)[0])
            v.append(sgn * vs.derivative_many(one, k)[0])
    grid = phi.grid
    return [Field(grid, a) for a in V], [Field(grid, a) for a in v]


def asymptotic_profile(psi0: Field, psi1: Field, N: int, n: int, z, A=None) -> np.ndarray:
    """psi_asympt^(N)(., z) for each z, shape (len(z), grid.N)."""
    V0, v0 = asymptotic_coefficients(psi0, N - 1, A)
    V1, _ = asymptotic_coefficients(psi1, N - 1, A)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros((z.size, psi0.grid.N))
    half = 0.5 * (n - 1)
    for k in range(N):
        coef = v0[k].values + half * V0[k].values + V1[k].values
        out += np.outer(z**k, coef)
    return out * (z ** half)[:, None]


@dataclass
class AsymptoticsReport:
    N: int
    n: int
    predicted_slope: float
    fitted_slope: float
    r2: float
    window: tuple
    min_error: float
    passed: bool
    times: list = field(default_factory=list, repr=False)
    errors: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_ASYMPT_WINDOW = {1: (3.0, 9.0), 2: (2.5, 7.0)}


def check_asymptotics(
    psi0: Field,
    psi1: Field,
    N: int,
    times_late=None,
    n: int = 3,
    A: Optional[Operator] = None,
    q: Optional[QuadratureSpec] = None,
) -> AsymptoticsReport:
    if N < 1:
        raise DomainError("N must be >= 1")
    mp = classify_mass(n, math.sqrt(n * n - 1.0) / 2.0)
    if times_late is None:
        lo, hi = DEFAULT_ASYMPT_WINDOW.get(N, (2.5, 6.0))
        times_late = np.linspace(lo, hi, 25)
    times_late = np.asarray(times_late, dtype=float)
    if np.any(np.exp(-times_late) > 0.1 + 1e-12):
        raise DomainError("asymptotic window needs e^{-t} <= 0.1")
    traj = solve_linear_cauchy(psi0, psi1, mp, A or ConstantLaplacian(), times_late, q)
    prof = asymptotic_profile(psi0, psi1, N, n, np.exp(-times_late), A)
    err = np.max(np.abs(traj.values - prof), axis=1)
    scale = max(float(np.max(np.abs(psi0.values))), float(np.max(np.abs(psi1.values))), 1e-300)
    floor = UNDERFLOW * scale
    if float(np.min(err)) < floor:
        raise LateWindowUnderflow(
            f"error reached {float(np.min(err)):.3g}, below the rounding floor {floor:.3g}; reduce N or the window"
        )
    fit = fit_decay_rate(times_late, err, (float(times_late[0]), float(times_late[-1])))
    pred = N + 0.5 * (n - 1)
    ok = abs(fit.gamma - pred) <= DECAY_RTOL * pred
    return AsymptoticsReport(
        N, n, pred, fit.gamma, fit.r2, fit.window, float(np.min(err)), bool(ok),
        times_late.tolist(), err.tolist(),
    )


def remark_identity_error(phi: Field, k_max: int, A=None) -> float:
    """max_k ||v^(k) + (k+1) V^(k+1)||_inf / scale for k < k_max."""
    V, v = asymptotic_coefficients(phi, k_max + 1, A)
    scale = max(max(float(np.max(np.abs(a.values))) for a in V + v), 1e-300)
    worst = 0.0
    for k in range(k_max + 1):
        worst = max(worst, float(np.max(np.abs(v[k].values + (k + 1) * V[k + 1].values))))
    return worst / scale
