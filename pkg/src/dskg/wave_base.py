"""Base wave equation v_rr = A v on the compactified interval r in [0, 1].

Two grids are supported: a periodic 1D grid (Fourier multipliers) and the
radial 3D grid, where w = rho u solves the half-line 1D wave equation with
an odd reflection at rho = 0 (sine transform).  A 1D variable-coefficient
operator d/dx(a(x) d/dx) is handled by leapfrog time stepping.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicHermiteSpline

from .errors import CFLViolation, DomainError

R_MAX = 1.0
CFL_MAX = 0.9


class GridKind(str, enum.Enum):
    PERIODIC_1D = "Periodic1D"
    RADIAL_3D = "Radial3D"


class DataKind(str, enum.Enum):
    COSINE = "CosineData"  # v(0) = g, v_r(0) = 0
    SINE = "SineData"  # V(0) = 0, V_r(0) = g


@dataclass(frozen=True)
class SpatialGrid:
    kind: GridKind
    N: int
    L: float

    def __post_init__(self):
        object.__setattr__(self, "kind", GridKind(self.kind))
        if int(self.N) != self.N or self.N < 16:
            raise DomainError(f"grid needs N >= 16 points, got {self.N!r}")
        if not (self.L > 0) or not math.isfinite(self.L):
            raise DomainError(f"grid length must be positive, got {self.L!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        """Sample points: x_j = j h (j = 0..N-1) or rho_j = j h (j = 1..N)."""
        j = np.arange(self.N, dtype=float)
        if self.kind is GridKind.RADIAL_3D:
            j = j + 1.0
        return j * self.h

    @property
    def dim(self) -> int:
        return 3 if self.kind is GridKind.RADIAL_3D else 1

    @property
    def wavenumbers(self) -> np.ndarray:
        """|xi| for each spectral coefficient of the grid transform."""
        if self.kind is GridKind.PERIODIC_1D:
            return 2.0 * np.pi * np.arange(self.N // 2 + 1) / self.L
        k = np.arange(1, self.N + 1, dtype=float)
        return np.pi * k / ((self.N + 1) * self.h)

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Grid transform along the last axis (rfft or DST-I of rho u)."""
        values = np.asarray(values, dtype=float)
        if self.kind is GridKind.PERIODIC_1D:
            return np.fft.rfft(values, axis=-1)
        return sfft.dst(values * self.x, type=1, norm="ortho", axis=-1)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        if self.kind is GridKind.PERIODIC_1D:
            return np.fft.irfft(coeffs, n=self.N, axis=-1)
        return sfft.idst(np.real(coeffs), type=1, norm="ortho", axis=-1) / self.x

    def sobolev_weights(self, s: float) -> np.ndarray:
        """Weights c_k with ||u||_{H_s}^2 = sum_k c_k |forward(u)_k|^2."""
        xi = self.wavenumbers
        mult = (1.0 + xi * xi) ** s
        if self.kind is GridKind.PERIODIC_1D:
            # continuum normalization: u_hat = h fft(u), ||u||^2 = (1/L) sum |u_hat|^2
            dup = np.full(xi.shape, 2.0)
            dup[0] = 1.0
            if self.N % 2 == 0:
                dup[-1] = 1.0
            return mult * dup * self.h * self.h / self.L
        return mult * 4.0 * np.pi * self.h


@dataclass(frozen=True)
class Field:
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise DomainError(f"field needs {self.grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: SpatialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(fn(grid.x), (grid.N,)))

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ConstantLaplacian:
    """A = c^2 Laplacian."""

    c2: float = 1.0

    def __post_init__(self):
        if not (self.c2 > 0):
            raise DomainError("ConstantLaplacian needs c^2 > 0")

    @property
    def c(self) -> float:
        return math.sqrt(self.c2)


@dataclass(frozen=True)
class VarCoeff1D:
    """A v = d/dx (a(x) dv/dx) on a periodic 1D grid."""

    a: Union[Callable[[np.ndarray], np.ndarray], np.ndarray]
    cfl: float = 0.9

    def half_point_coefficients(self, grid: SpatialGrid) -> np.ndarray:
        if grid.kind is not GridKind.PERIODIC_1D:
            raise DomainError("VarCoeff1D needs a Periodic1D grid")
        if callable(self.a):
            ah = np.asarray(self.a(grid.x + 0.5 * grid.h), dtype=float)
            ah = np.broadcast_to(ah, (grid.N,)).astype(float)
        else:
            a = np.asarray(self.a, dtype=float)
            if a.shape != (grid.N,):
                raise DomainError("coefficient table must match the grid")
            ah = 0.5 * (a + np.roll(a, -1))
        if not np.all(np.isfinite(ah)) or np.min(ah) <= 0:
            raise DomainError("VarCoeff1D coefficient must satisfy a(x) >= a_min > 0")
        return ah


Operator = Union[ConstantLaplacian, VarCoeff1D]


def apply_operator(A: Operator, u: Field) -> np.ndarray:
    """Grid values of A u."""
    grid = u.grid
    if isinstance(A, ConstantLaplacian):
        xi = grid.wavenumbers
        return grid.inverse(-A.c2 * xi * xi * grid.forward(u.values))
    ah = A.half_point_coefficients(grid)
    return _fd_apply(ah, u.values, grid.h)


def _fd_apply(ah, v, h):
    flux = ah * (np.roll(v, -1, axis=-1) - v)
    return (flux - np.roll(flux, 1, axis=-1)) / (h * h)


def trig_multiplier(kind: DataKind, omega: np.ndarray, r, deriv: int = 0) -> np.ndarray:
    """d^k/dr^k of cos(omega r) or sin(omega r)/omega, shape r.shape + omega.shape."""
    r = np.asarray(r, dtype=float)[..., None]
    om = np.asarray(omega, dtype=float)
    ph = om * r + 0.5 * np.pi * deriv
    if kind is DataKind.COSINE:
        if deriv == 0:
            return np.cos(om * r)
        return om**deriv * np.cos(ph)
    if deriv == 0:
        return r * np.sinc(om * r / np.pi)
    return om ** (deriv - 1) * np.sin(ph)


class WaveSolution:
    """Evaluator r -> v(., r) of a base wave solve; immutable after construction."""

    grid: SpatialGrid
    kind: DataKind

    def evaluate(self, r: float) -> Field:
        return Field(self.grid, self.evaluate_many(np.array([r]))[0])

    def evaluate_many(self, r) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def derivative_many(self, r, order: int = 1) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    @staticmethod
    def _check_r(r):
        r = np.asarray(r, dtype=float)
        if np.any(r < -1e-12) or np.any(r > R_MAX + 1e-12):
            raise DomainError("wave evaluation time must lie in [0, 1]")
        return np.clip(r, 0.0, R_MAX)


@dataclass(frozen=True, eq=False)
class SpectralWave(WaveSolution):
    grid: SpatialGrid
    kind: DataKind
    c: float
    coeffs: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)

    @property
    def omega(self) -> np.ndarray:
        return self.c * self.grid.wavenumbers

    def multipliers(self, r, deriv: int = 0) -> np.ndarray:
        return trig_multiplier(self.kind, self.omega, r, deriv)

    def evaluate_many(self, r) -> np.ndarray:
        r = self._check_r(r)
        out = self.grid.inverse(self.multipliers(r) * self.coeffs)
        if self.kind is DataKind.COSINE:
            out[r == 0.0] = self.data
        else:
            out[r == 0.0] = 0.0
        return out

    def derivative_many(self, r, order: int = 1) -> np.ndarray:
        r = self._check_r(r)
        return self.grid.inverse(self.multipliers(r, order) * self.coeffs)


@dataclass(frozen=True, eq=False)
class LeapfrogWave(WaveSolution):
    grid: SpatialGrid
    kind: DataKind
    dr: float
    spline: CubicHermiteSpline = field(repr=False)
    data: np.ndarray = field(repr=False)

    def evaluate_many(self, r) -> np.ndarray:
        r = self._check_r(r)
        out = self.spline(r)
        if self.kind is DataKind.COSINE:
            out[r == 0.0] = self.data
        else:
            out[r == 0.0] = 0.0
        return out

    def derivative_many(self, r, order: int = 1) -> np.ndarray:
        r = self._check_r(r)
        return self.spline(r, order)


def solve_wave(g: Field, kind: DataKind, A: Operator) -> WaveSolution:
    kind = DataKind(kind)
    grid = g.grid
    if isinstance(A, ConstantLaplacian):
        coeffs = grid.forward(g.values)
        return SpectralWave(grid, kind, A.c, coeffs, g.values)
    if isinstance(A, VarCoeff1D):
        return _leapfrog(g, kind, A)
    raise DomainError(f"unsupported operator {A!r}")


def _leapfrog(g: Field, kind: DataKind, A: VarCoeff1D) -> LeapfrogWave:
    grid = g.grid
    if not (0 < A.cfl <= CFL_MAX):
        raise CFLViolation(f"CFL number {A.cfl} outside (0, {CFL_MAX}]")
    ah = A.half_point_coefficients(grid)
    h = grid.h
    dr_max = A.cfl * h / math.sqrt(float(np.max(ah)))
    steps = max(2, int(math.ceil(R_MAX / dr_max)))
    dr = R_MAX / steps
    if dr * math.sqrt(float(np.max(ah))) / h > 1.0:
        raise CFLViolation("time step violates the CFL condition")
    snaps = np.empty((steps + 1, grid.N))
    if kind is DataKind.COSINE:
        v0, vt = g.values.astype(float), np.zeros(grid.N)
    else:
        v0, vt = np.zeros(grid.N), g.values.astype(float)
    snaps[0] = v0
    snaps[1] = v0 + dr * vt + 0.5 * dr * dr * _fd_apply(ah, v0, h)
    if kind is DataKind.SINE:
        # third-order start: v''' = A v_t at r = 0
        snaps[1] += dr**3 / 6.0 * _fd_apply(ah, vt, h)
    lam = dr * dr
    for k in range(1, steps):
        snaps[k + 1] = 2.0 * snaps[k] - snaps[k - 1] + lam * _fd_apply(ah, snaps[k], h)
    rs = np.linspace(0.0, R_MAX, steps + 1)
    # local cubic: slopes are centered differences of neighbouring snapshots
    slopes = np.gradient(snaps, dr, axis=0, edge_order=2)
    spline = CubicHermiteSpline(rs, snaps, slopes, axis=0)
    return LeapfrogWave(grid, kind, dr, spline, g.values)


def wave_time_derivative(sol: WaveSolution, r: float) -> Field:
    return Field(sol.grid, sol.derivative_many(np.array([r]))[0])
