"""Semilinear problem psi = psi_lin + G[F(psi)] solved by Picard iteration.

G is the source solution operator of the transform module; the nonlinear
term is sampled on the output times and interpolated in emission time.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, ForbiddenInterval, NoContraction
from .kernels import MassParameters
from .norms import sobolev_norms
from .transform import (
    QuadratureSpec,
    SampledSource,
    SourceIntegrator,
    Trajectory,
    solve_linear_cauchy,
    time_grid,
)
from .wave_base import Field, Operator

EQ_TOL = 1e-12
NO_CONTRACTION_RUN = 3


class ForbiddenIntervalWarning(UserWarning):
    pass


# ---------------------------------------------------------------- decay bounds


@dataclass(frozen=True)
class CauchyData:
    gamma0: Optional[float] = None
    psi0_zero: bool = False


@dataclass(frozen=True)
class SourceDriven:
    gamma_rhs: float


Problem = Union[CauchyData, SourceDriven]


@dataclass(frozen=True)
class GammaBound:
    """Admissible exponents: gamma <= value, or gamma < value when strict."""

    value: float
    strict: bool
    branch: str
    forbidden: bool = False

    def admits(self, gamma: float) -> bool:
        if self.strict:
            return gamma < self.value - EQ_TOL * max(1.0, abs(self.value)) or gamma <= 0 < self.value
        return gamma <= self.value + EQ_TOL * max(1.0, abs(self.value))


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= EQ_TOL * max(1.0, abs(a), abs(b))


def expected_gamma(mp: MassParameters, alpha: float, problem: Problem) -> GammaBound:
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    n, m = mp.n, mp.m
    half = n / 2.0
    small_rate = half - math.sqrt(max(half * half - m * m, 0.0))
    cap = n / (2.0 * (alpha + 1.0))
    m_c = math.sqrt(n * n - 1.0) / 2.0
    zero = _eq(m, half)
    if isinstance(problem, CauchyData):
        g0 = problem.gamma0
        if g0 is not None and g0 < 0:
            raise DomainError("gamma0 must be >= 0")
        if zero:
            g0 = 0.5 * (n - 1) if g0 is None else g0
            if not g0 < 0.5 * (n - 1) or _eq(g0, 0.5 * (n - 1)):
                # gamma0 must stay strictly below (n-1)/2; approach from below
                return GammaBound(min(0.5 * (n - 1), cap), True, "cauchy:m=n/2")
            return GammaBound(min(g0, cap), False, "cauchy:m=n/2")
        if m > half:
            g0 = 0.5 * (n - 1) if g0 is None else g0
            if g0 > 0.5 * (n - 1) and not _eq(g0, 0.5 * (n - 1)):
                raise DomainError("gamma0 must not exceed (n-1)/2 for m > n/2")
            return GammaBound(min(g0, cap), False, "cauchy:m>n/2")
        value = small_rate / (alpha + 1.0)
        if m <= m_c or _eq(m, m_c):
            return GammaBound(value, False, "cauchy:m<=m_c")
        # forbidden interval (m_c, n/2)
        if not problem.psi0_zero:
            raise ForbiddenInterval(
                f"m = {m:g} lies in ({m_c:g}, {half:g}); global existence is only covered for psi0 = 0"
            )
        warnings.warn(
            f"m = {m:g} lies in the forbidden interval; bound holds for psi0 = 0 only",
            ForbiddenIntervalWarning,
            stacklevel=2,
        )
        return GammaBound(value, True, "cauchy:forbidden,psi0=0", forbidden=True)

    g = problem.gamma_rhs
    if g < 0:
        raise DomainError("gamma_rhs must be >= 0")
    if m < half and not zero:
        if g <= small_rate or _eq(g, small_rate):
            return GammaBound(g / (alpha + 1.0), True, "source:m<n/2,rhs<=rate")
        return GammaBound(small_rate / (alpha + 1.0), True, "source:m<n/2,rhs>rate")
    if g < half and not _eq(g, half):
        return GammaBound(min(g, cap), False, "source:m>=n/2,rhs<n/2")
    if _eq(g, half):
        if zero:
            # gamma <= min{gamma0, cap} for every gamma0 < gamma_rhs
            strict = g <= cap
            return GammaBound(min(g, cap), strict, "source:m=n/2,rhs=n/2")
        return GammaBound(cap, False, "source:m>n/2,rhs=n/2")
    if zero:
        return GammaBound(cap, True, "source:m=n/2,rhs>n/2")
    return GammaBound(cap, False, "source:m>n/2,rhs>n/2")


# ---------------------------------------------------------------- nonlinearity


class NonlinearityKind(str, enum.Enum):
    POWER_ABS = "PowerAbs"
    ODD_CUBIC = "OddCubic"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Nonlinearity:
    kind: NonlinearityKind
    alpha: float = 2.0
    c: float = 1.0
    table: Optional[tuple] = None  # (x, y) for Custom, piecewise linear

    def __post_init__(self):
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        if self.kind is NonlinearityKind.ODD_CUBIC:
            object.__setattr__(self, "alpha", 2.0)
        if not self.alpha > 0:
            raise DomainError("nonlinearity exponent alpha must be positive")
        if self.kind is NonlinearityKind.CUSTOM:
            if self.table is None:
                raise DomainError("Custom nonlinearity needs a table")
            x, y = (np.asarray(v, dtype=float) for v in self.table)
            if x.ndim != 1 or x.shape != y.shape or x.size < 2 or np.any(np.diff(x) <= 0):
                raise DomainError("Custom table needs increasing x and matching y")
            if not (x[0] <= 0.0 <= x[-1]) or abs(np.interp(0.0, x, y)) > 1e-14:
                raise DomainError("Custom nonlinearity must satisfy F(0) = 0")
            object.__setattr__(self, "table", (x, y))

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=float)
        if self.kind is NonlinearityKind.ODD_CUBIC:
            return self.c * psi**3
        if self.kind is NonlinearityKind.POWER_ABS:
            return self.c * np.abs(psi) ** self.alpha * psi
        x, y = self.table
        return self.c * np.interp(psi, x, y)


# ---------------------------------------------------------------- Picard


@dataclass
class IterationLog:
    distances: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    final_residual: float = float("nan")
    weighted_norm: float = float("nan")
    converged: bool = False

    def append(self, d: float):
        if self.distances and self.distances[-1] > 0:
            self.ratios.append(d / self.distances[-1])
        self.distances.append(d)

    @property
    def iterations(self) -> int:
        return len(self.distances)


def _weighted_dist(traj_or_grid, times, diff, gamma, s):
    grid = traj_or_grid
    ns = sobolev_norms(grid, diff, s)
    return float(np.max(np.exp(gamma * times) * ns))


def picard_solve(
    psi0: Optional[Field],
    psi1: Optional[Field],
    nl: Nonlinearity,
    mp: MassParameters,
    A: Operator,
    gamma: float,
    s: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 40,
    times=None,
    q: Optional[QuadratureSpec] = None,
    source=None,
    integrator: Optional[SourceIntegrator] = None,
    grid=None,
):
    """Iterate psi_{k+1} = psi_lin + G[F(psi_k)] from psi_0 = psi_lin.

    Returns (trajectory, log, psi_lin, integrator).
    """
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    q = q or QuadratureSpec()
    grid = grid or (psi0.grid if psi0 is not None else psi1.grid if psi1 is not None else None)
    if grid is None:
        raise DomainError("picard_solve needs a grid when no initial data are given")
    times = time_grid(8.0, 81) if times is None else np.asarray(times, dtype=float)
    G = integrator or SourceIntegrator(grid, mp, A, times, q)
    psi_lin = linear_part(psi0, psi1, source, grid, mp, A, times, q, G)
    log = IterationLog()
    psi = psi_lin.copy()
    run = 0
    for _ in range(max_iter):
        nxt = psi_lin + G.apply(SampledSource(grid, times, nl(psi)))
        d = _weighted_dist(grid, times, nxt - psi, gamma, s)
        log.append(d)
        psi = nxt
        if log.ratios:
            run = run + 1 if log.ratios[-1] >= 1.0 else 0
            if run >= NO_CONTRACTION_RUN:
                raise NoContraction(
                    f"distance grew for {run} consecutive iterations (last ratio {log.ratios[-1]:.3g})"
                )
        if d < tol:
            log.converged = True
            break
    traj = Trajectory(grid, times, psi, mp)
    log.final_residual = fixed_point_residual(traj, psi_lin, nl, mp, A, gamma, s, integrator=G)
    log.weighted_norm = _weighted_dist(grid, times, psi, gamma, s)
    return traj, log, psi_lin, G


def linear_part(psi0, psi1, source, grid, mp, A, times, q, G) -> np.ndarray:
    out = np.zeros((len(times), grid.N))
    if psi0 is not None or psi1 is not None:
        zero = Field(grid, np.zeros(grid.N))
        out += solve_linear_cauchy(psi0 or zero, psi1 or zero, mp, A, times, q).values
    if source is not None:
        out += G.apply(source)
    return out


def fixed_point_residual(traj, psi_lin, nl, mp, A, gamma, s, integrator=None, q=None) -> float:
    """sup_t e^{gamma t} ||psi - psi_lin - G[F(psi)]||_{H_s}."""
    G = integrator or SourceIntegrator(traj.grid, mp, A, traj.times, q)
    psi = traj.values
    lin = psi_lin.values if isinstance(psi_lin, Trajectory) else np.asarray(psi_lin)
    image = lin + G.apply(SampledSource(traj.grid, traj.times, nl(psi)))
    return _weighted_dist(traj.grid, traj.times, psi - image, gamma, s)
