"""Integral-transform solvers for psi_tt + n psi_t - e^{-2t} A psi + m^2 psi = f.

Solutions are assembled from base wave solves (see wave_base) weighted by
the kernels E, K0, K1.  With the constant-coefficient Laplacian all work
happens coefficient-wise in spectral space: the r-integrals of kernel times
wave multiplier are precomputed once per (output time, emission node).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

from . import quadrature as quad
from .errors import DomainError, InsufficientSamples, QuadratureUnderResolved
from .kernels import E_array, K_arrays, MassParameters
from .wave_base import (
    ConstantLaplacian,
    DataKind,
    Field,
    Operator,
    SpatialGrid,
    VarCoeff1D,
    apply_operator,
    solve_wave,
    trig_multiplier,
)

SELF_CHECK_RTOL = 1e-6
PANEL_CAP = 0.25  # widest r-panel when the data are smooth
BAND_PANEL = 8.0  # r-panel width is at most BAND_PANEL / bandwidth
B_PANEL = 1.0  # widest emission-time panel
BAND_FLOOR = 1e-16


@dataclass(frozen=True)
class QuadratureSpec:
    n_s: int = 64
    n_b: int = 48
    n_r: int = 48
    rule: str = "gauss-legendre"
    endpoint_pad: float = 0.0

    def __post_init__(self):
        for name in ("n_s", "n_b", "n_r"):
            v = getattr(self, name)
            if int(v) != v or v < 8:
                raise DomainError(f"{name} must be an integer >= 8, got {v!r}")
        if self.rule != "gauss-legendre":
            raise DomainError(f"unknown quadrature rule {self.rule!r}")
        if not (0.0 <= self.endpoint_pad < 1.0):
            raise DomainError("endpoint_pad must lie in [0, 1)")

    def doubled(self) -> "QuadratureSpec":
        return replace(self, n_s=2 * self.n_s, n_b=2 * self.n_b, n_r=2 * self.n_r)

    @property
    def s_order(self) -> int:
        return self.n_s // 4

    @property
    def r_order(self) -> int:
        return self.n_r // 4

    def b_order(self, width: float) -> int:
        return max(quad.MIN_ORDER, int(round(self.n_b / 4 * math.sqrt(min(width, B_PANEL)))))


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: SpatialGrid
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    mass: MassParameters

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise DomainError("trajectory needs a nonempty 1D time array")
        if np.any(np.diff(t) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        if v.shape != (t.size, self.grid.N):
            raise DomainError("trajectory values must have shape (times, N)")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def fields(self) -> list:
        return [Field(self.grid, row) for row in self.values]

    def __getitem__(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def __len__(self) -> int:
        return self.times.size

    def with_values(self, values) -> "Trajectory":
        return Trajectory(self.grid, self.times, values, self.mass)


def time_grid(T: float, samples: int, spacing: str = "uniform") -> np.ndarray:
    """Output times in [0, T]; 'uniform' in t or 'phi' (uniform in 1 - e^{-t})."""
    if not (T > 0) or samples < 2:
        raise DomainError("time grid needs T > 0 and at least 2 samples")
    if spacing == "uniform":
        return np.linspace(0.0, T, samples)
    if spacing == "phi":
        phi = np.linspace(0.0, -math.expm1(-T), samples)
        out = -np.log1p(-phi)
        out[-1] = T
        return out
    raise DomainError(f"unknown time spacing {spacing!r}")


def phi_of(t):
    return -np.expm1(-np.asarray(t, dtype=float))


def data_bandwidth(grid: SpatialGrid, A: Operator, *coeff_sets) -> float:
    """Largest propagation frequency c|xi| carrying non-negligible data."""
    if isinstance(A, ConstantLaplacian):
        omega = A.c * grid.wavenumbers
    else:
        cmax = math.sqrt(float(np.max(A.half_point_coefficients(grid))))
        omega = cmax * np.pi / grid.h * np.ones(1)
        return float(omega[0])
    best = 0.0
    for c in coeff_sets:
        mag = np.abs(c)
        top = float(np.max(mag, initial=0.0))
        if top == 0.0:
            continue
        live = np.nonzero(mag > BAND_FLOOR * top)[0]
        best = max(best, float(omega[live[-1]]))
    return best


def _max_width(bandwidth: float) -> float:
    if bandwidth <= 0:
        return PANEL_CAP
    return min(PANEL_CAP, BAND_PANEL / bandwidth)


def s_rule(t: float, q: QuadratureSpec, bandwidth: float):
    """Quadrature over z in [0, phi(t)] for the Cauchy kernels."""
    phi = float(phi_of(t))
    length = phi * (1.0 - q.endpoint_pad)
    return quad.cone_rule(length, math.exp(-t), _max_width(bandwidth), q.s_order)


def r_rule(t: float, b: float, q: QuadratureSpec, bandwidth: float):
    """Quadrature over r in [0, e^{-b} - e^{-t}] for the source kernel E."""
    gap = -math.exp(-b) * math.expm1(b - t)
    if gap <= 0:
        return np.empty(0), np.empty(0)
    scale = 2.0 * math.exp(-b - t) / gap
    length = gap * (1.0 - q.endpoint_pad)
    return quad.cone_rule(length, scale, _max_width(bandwidth), q.r_order)


def b_nodes(times: np.ndarray, q: QuadratureSpec):
    """Global emission-time nodes; panels never straddle an output time.

    Returns (nodes, weights, counts) with counts[k] = number of nodes in
    [0, times[k]], so the nodes for output k are a prefix of the list.
    """
    nodes, weights, counts = [], [], [0]
    for lo, hi in zip(times[:-1], times[1:]):
        npan = max(1, int(math.ceil((hi - lo) / B_PANEL - 1e-12)))
        edges = np.linspace(lo, hi, npan + 1)
        order = q.b_order((hi - lo) / npan)
        x, w = quad.composite_rule(edges, order)
        nodes.append(x)
        weights.append(w)
        counts.append(counts[-1] + x.size)
    if nodes:
        return np.concatenate(nodes), np.concatenate(weights), np.asarray(counts)
    return np.empty(0), np.empty(0), np.asarray(counts)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise DomainError("times must be a nonempty increasing array in [0, T]")
    return t


# ---------------------------------------------------------------- Cauchy problem


def solve_linear_cauchy(
    psi0: Field,
    psi1: Field,
    mp: MassParameters,
    A: Operator,
    times,
    q: Optional[QuadratureSpec] = None,
    self_check: bool = False,
) -> Trajectory:
    q = q or QuadratureSpec()
    times = _check_times(times)
    if psi0.grid != psi1.grid:
        raise DomainError("initial data must share one grid")
    out = _cauchy(psi0, psi1, mp, A, times, q)
    traj = Trajectory(psi0.grid, times, out, mp)
    if self_check:
        ref = _cauchy(psi0, psi1, mp, A, times, q.doubled())
        _compare(out, ref, "n_s")
    return traj


def _compare(out, ref, what):
    diff = np.sqrt(np.sum((out - ref) ** 2, axis=1))
    size = np.sqrt(np.sum(ref**2, axis=1))
    floor = 1e-300 + 1e-14 * float(np.max(size, initial=0.0))
    rel = diff / np.maximum(size, floor)
    worst = float(np.max(rel, initial=0.0))
    if worst > SELF_CHECK_RTOL:
        raise QuadratureUnderResolved(
            f"doubling {what} changed the solution by {worst:.3g} relative (limit {SELF_CHECK_RTOL:g})"
        )


def _cauchy(psi0: Field, psi1: Field, mp, A, times, q) -> np.ndarray:
    grid = psi0.grid
    n = mp.n
    zero0 = not np.any(psi0.values)
    zero1 = not np.any(psi1.values)
    out = np.zeros((times.size, grid.N))
    if zero0 and zero1:
        return out
    sol0 = solve_wave(psi0, DataKind.COSINE, A)
    sol1 = solve_wave(psi1, DataKind.COSINE, A)
    spectral = isinstance(A, ConstantLaplacian)
    if spectral:
        band = data_bandwidth(grid, A, sol0.coeffs, sol1.coeffs)
    else:
        band = data_bandwidth(grid, A)
    for k, t in enumerate(times):
        if t == 0.0:
            out[k] = psi0.values
            continue
        phi = float(phi_of(t))
        z, w = s_rule(t, q, band)
        K0, K1 = K_arrays(z, t, mp)
        e_n = math.exp(-0.5 * n * t)
        e_n1 = math.exp(-0.5 * (n - 1) * t)
        w0 = e_n * w * (2.0 * K0 + n * K1)
        w1 = 2.0 * e_n * w * K1
        if spectral:
            om = sol0.omega
            acc = np.zeros(om.shape, dtype=np.result_type(sol0.coeffs, float))
            if not zero0:
                m0 = e_n1 * trig_multiplier(DataKind.COSINE, om, phi)
                m0 = m0 + w0 @ trig_multiplier(DataKind.COSINE, om, z)
                acc = acc + m0 * sol0.coeffs
            if not zero1:
                acc = acc + (w1 @ trig_multiplier(DataKind.COSINE, om, z)) * sol1.coeffs
            out[k] = grid.inverse(acc)
        else:
            val = np.zeros(grid.N)
            if not zero0:
                val += e_n1 * sol0.evaluate_many(np.array([phi]))[0]
                val += w0 @ sol0.evaluate_many(z)
            if not zero1:
                val += w1 @ sol1.evaluate_many(z)
            out[k] = val
    return out


# ---------------------------------------------------------------- source problem


class SampledSource:
    """f(., b) from samples at increasing times, cubic in phi(b)."""

    def __init__(self, grid: SpatialGrid, times, values):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.times.size, grid.N):
            raise DomainError("sampled source must have shape (times, N)")
        if self.times.size >= 2:
            self._spline = CubicSpline(phi_of(self.times), self.values, axis=0)
        else:
            self._spline = None

    def sample(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self._spline is None:
            return np.broadcast_to(self.values[0], b.shape + (self.grid.N,)).copy()
        return self._spline(phi_of(b))


SourceLike = Union[SampledSource, Callable[[float], object]]


def _sample_source(f: SourceLike, grid: SpatialGrid, b: np.ndarray) -> np.ndarray:
    if isinstance(f, SampledSource):
        return f.sample(b)
    rows = []
    for bj in b:
        v = f(float(bj))
        v = v.values if isinstance(v, Field) else np.broadcast_to(np.asarray(v, float), (grid.N,))
        rows.append(v)
    return np.asarray(rows, dtype=float).reshape(b.size, grid.N)


class SourceIntegrator:
    """Precomputed quadrature for G[f](t) = 2 e^{-nt/2} int db int dr e^{nb/2} v_f(r; b) E.

    Construction evaluates the kernel once; `apply` is linear in f and is
    reused across Picard iterations.
    """

    def __init__(self, grid: SpatialGrid, mp: MassParameters, A: Operator, times, q=None, bandwidth=None):
        self.grid = grid
        self.mp = mp
        self.A = A
        self.q = q or QuadratureSpec()
        self.times = _check_times(times)
        self.spectral = isinstance(A, ConstantLaplacian)
        if bandwidth is None:
            if self.spectral:
                bandwidth = float(A.c * grid.wavenumbers[-1])
            else:
                bandwidth = data_bandwidth(grid, A)
        self.bandwidth = bandwidth
        self.b, self.wb, self.counts = b_nodes(self.times, self.q)
        self._plans = [self._plan(k) for k in range(self.times.size)]

    def _plan(self, k):
        """(rows, r_nodes, coef) for output k; coef folds all scalar factors."""
        t = float(self.times[k])
        n = self.mp.n
        J = int(self.counts[k])
        rows, rs, cs = [], [], []
        for j in range(J):
            bj = float(self.b[j])
            r, w = r_rule(t, bj, self.q, self.bandwidth)
            if r.size == 0:
                continue
            rows.append(np.full(r.size, j))
            rs.append(r)
            cs.append(2.0 * math.exp(0.5 * n * (bj - t)) * self.wb[j] * w)
        if not rs:
            return None
        rows = np.concatenate(rows)
        r = np.concatenate(rs)
        c = np.concatenate(cs) * E_array(r, t, self.b[rows], self.mp)
        if self.spectral:
            om = self.A.c * self.grid.wavenumbers
            mult = c[:, None] * trig_multiplier(DataKind.COSINE, om, r)
            starts = np.r_[0, np.nonzero(np.diff(rows))[0] + 1]
            Q = np.add.reduceat(mult, starts, axis=0)
            return rows[starts], Q
        return rows, r, c

    def apply(self, f: SourceLike) -> np.ndarray:
        """Values of G[f] at the output times, shape (times, N)."""
        fb = _sample_source(f, self.grid, self.b)
        out = np.zeros((self.times.size, self.grid.N))
        if self.spectral:
            fhat = self.grid.forward(fb) if fb.size else fb
            for k, plan in enumerate(self._plans):
                if plan is None:
                    continue
                idx, Q = plan
                out[k] = self.grid.inverse(np.sum(Q * fhat[idx], axis=0))
            return out
        sols = [solve_wave(Field(self.grid, fb[j]), DataKind.COSINE, self.A) for j in range(self.b.size)]
        for k, plan in enumerate(self._plans):
            if plan is None:
                continue
            rows, r, c = plan
            for j in np.unique(rows):
                sel = rows == j
                out[k] += c[sel] @ sols[j].evaluate_many(r[sel])
        return out


def solve_source(
    f: SourceLike,
    grid: SpatialGrid,
    mp: MassParameters,
    A: Operator,
    times,
    q: Optional[QuadratureSpec] = None,
    self_check: bool = False,
    integrator: Optional[SourceIntegrator] = None,
) -> Trajectory:
    q = q or QuadratureSpec()
    times = _check_times(times)
    G = integrator or SourceIntegrator(grid, mp, A, times, q)
    out = G.apply(f)
    if self_check:
        ref = SourceIntegrator(grid, mp, A, times, q.doubled()).apply(f)
        _compare(out, ref, "(n_b, n_r)")
    return Trajectory(grid, times, out, mp)


def solve_u_form(psi0, psi1, f, grid, mp, A, times, q=None) -> Trajectory:
    """Solution of u_tt - e^{-2t} A u - M^2 u = e^{nt/2} f through u = e^{nt/2} psi."""
    times = _check_times(times)
    total = np.zeros((times.size, grid.N))
    if psi0 is not None or psi1 is not None:
        zero = Field(grid, np.zeros(grid.N))
        total += solve_linear_cauchy(psi0 or zero, psi1 or zero, mp, A, times, q).values
    if f is not None:
        total += solve_source(f, grid, mp, A, times, q).values
    return Trajectory(grid, times, total * np.exp(0.5 * mp.n * times)[:, None], mp)


def critical_closed_form(psi0: Field, psi1: Field, n: int, A: Operator, times) -> np.ndarray:
    """e^{-(n-1)t/2} [dV_0 + (n-1)/2 V_0 + V_1](phi(t)) with V sine-data solutions."""
    times = _check_times(times)
    V0 = solve_wave(psi0, DataKind.SINE, A)
    V1 = solve_wave(psi1, DataKind.SINE, A)
    phi = phi_of(times)
    body = V0.derivative_many(phi) + 0.5 * (n - 1) * V0.evaluate_many(phi) + V1.evaluate_many(phi)
    body[times == 0.0] = psi0.values
    return np.exp(-0.5 * (n - 1) * times)[:, None] * body


def critical_source_closed_form(f: SourceLike, grid, n: int, A: Operator, times, q=None) -> np.ndarray:
    """e^{-(n-1)t/2} int_0^t e^{(n+1)b/2} V_f(e^{-b} - e^{-t}; b) db."""
    q = q or QuadratureSpec()
    times = _check_times(times)
    b, wb, counts = b_nodes(times, q)
    fb = _sample_source(f, grid, b)
    sols = [solve_wave(Field(grid, fb[j]), DataKind.SINE, A) for j in range(b.size)]
    out = np.zeros((times.size, grid.N))
    for k, t in enumerate(times):
        for j in range(int(counts[k])):
            gap = -math.exp(-b[j]) * math.expm1(b[j] - t)
            out[k] += wb[j] * math.exp(0.5 * (n + 1) * b[j]) * sols[j].evaluate_many(np.array([gap]))[0]
        out[k] *= math.exp(-0.5 * (n - 1) * t)
    return out


# ---------------------------------------------------------------- residual


def pde_residual(
    traj: Trajectory,
    f: Optional[SourceLike],
    mp: MassParameters,
    A: Operator,
    nonlinear: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Max-norm residual of psi_tt + n psi_t - e^{-2t} A psi + m^2 psi - F(psi) - f.

    Centered differences in time; one value per interior sample.
    """
    t = traj.times
    if t.size < 5:
        raise InsufficientSamples("pde_residual needs at least 5 time samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(1.0, t[-1]):
        raise DomainError("pde_residual needs uniformly spaced times")
    h = float(dt[0])
    psi = traj.values
    ptt = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / (h * h)
    pt = (psi[2:] - psi[:-2]) / (2.0 * h)
    mid = psi[1:-1]
    Apsi = np.array([apply_operator(A, Field(traj.grid, row)) for row in mid])
    res = ptt + mp.n * pt - np.exp(-2.0 * t[1:-1])[:, None] * Apsi + mp.m**2 * mid
    if nonlinear is not None:
        res -= nonlinear(mid)
    if f is not None:
        res -= _sample_source(f, traj.grid, t[1:-1])
    return np.max(np.abs(res), axis=1)
