"""Sobolev and Besov norms of grid fields, weighted trajectory norms, decay fits."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientSamples
from .wave_base import Field, GridKind, SpatialGrid

MIN_FIT_SAMPLES = 8


class Space(str, enum.Enum):
    SOBOLEV = "Sobolev"
    BESOV = "Besov"


@dataclass(frozen=True)
class NormSpec:
    space: Space = Space.SOBOLEV
    s: float = 1.0
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "space", Space(self.space))
        if self.s < 0:
            raise DomainError("norm index s must be >= 0")
        if not (1.0 <= self.p <= math.inf) or not (1.0 <= self.q <= math.inf):
            raise DomainError("Besov exponents p, q must lie in [1, inf]")


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    gamma: float
    r2: float
    log_corrected: bool = False
    beta: float = 0.0
    samples: int = 0


def sobolev_norm(u: Field, s: float) -> float:
    """||(1 + |xi|^2)^{s/2} u_hat||_2 with continuum (Parseval) normalization."""
    if s < 0:
        raise DomainError("sobolev_norm needs s >= 0")
    c = u.grid.forward(u.values)
    return float(math.sqrt(float(np.sum(u.grid.sobolev_weights(s) * np.abs(c) ** 2))))


def sobolev_norms(grid: SpatialGrid, values: np.ndarray, s: float) -> np.ndarray:
    """Row-wise sobolev_norm for a (K, N) array."""
    c = grid.forward(np.atleast_2d(values))
    return np.sqrt(np.sum(grid.sobolev_weights(s) * np.abs(c) ** 2, axis=-1))


def l2_norm(u: Field) -> float:
    """Direct grid L2 norm (radial weight 4 pi rho^2 on Radial3D)."""
    g = u.grid
    if g.kind is GridKind.PERIODIC_1D:
        return float(math.sqrt(g.h * float(np.sum(u.values**2))))
    return float(math.sqrt(4.0 * math.pi * g.h * float(np.sum((g.x * u.values) ** 2))))


# dyadic partition of unity

def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)

    def bump(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a = bump(x)
    b = bump(1.0 - x)
    return a / (a + b)


def _chi(xi):
    """1 on |xi| <= 1, 0 on |xi| >= 2, smooth in between."""
    return 1.0 - _smooth_step(np.abs(xi) - 1.0)


def dyadic_blocks(xi: np.ndarray, jmax: Optional[int] = None) -> np.ndarray:
    """phi_j(xi) for j = 0..jmax; phi_0 = chi, phi_j = chi(2^-j xi) - chi(2^-(j-1) xi)."""
    xi = np.abs(np.asarray(xi, dtype=float))
    top = float(np.max(xi, initial=0.0))
    if jmax is None:
        jmax = max(1, int(math.ceil(math.log2(max(top, 1.0)))) + 1)
    rows = [_chi(xi)]
    prev = rows[0]
    for j in range(1, jmax + 1):
        cur = _chi(xi / 2.0**j)
        rows.append(cur - prev)
        prev = cur
    return np.asarray(rows)


def besov_blocks(u: Field) -> np.ndarray:
    """Inverse transforms of phi_j u_hat, shape (J, N)."""
    g = u.grid
    if g.kind is not GridKind.PERIODIC_1D:
        raise DomainError("Besov norms are provided on Periodic1D grids only")
    xi = g.wavenumbers
    c = g.forward(u.values)
    phis = dyadic_blocks(xi)
    return g.inverse(phis * c[None, :])


def besov_norm(u: Field, spec: NormSpec) -> float:
    if spec.s < 0:
        raise DomainError("besov_norm needs s >= 0")
    blocks = besov_blocks(u)
    h = u.grid.h
    if math.isinf(spec.p):
        lp = np.max(np.abs(blocks), axis=1)
    else:
        lp = (h * np.sum(np.abs(blocks) ** spec.p, axis=1)) ** (1.0 / spec.p)
    terms = 2.0 ** (spec.s * np.arange(blocks.shape[0])) * lp
    if math.isinf(spec.q):
        return float(np.max(terms))
    return float(np.sum(terms**spec.q) ** (1.0 / spec.q))


def norm(u: Field, spec: NormSpec) -> float:
    if spec.space is Space.SOBOLEV:
        return sobolev_norm(u, spec.s)
    return besov_norm(u, spec)


def weighted_sup_norm(traj, gamma: float, s: float) -> float:
    """max_t e^{gamma t} ||psi(., t)||_{H_s}."""
    if len(traj.times) == 0:
        raise DomainError("empty trajectory")
    ns = sobolev_norms(traj.grid, traj.values, s)
    return float(np.max(np.exp(gamma * traj.times) * ns))


def weighted_series(traj, gamma: float, s: float):
    """(H_s norms, running weighted sup) per sample."""
    ns = sobolev_norms(traj.grid, traj.values, s)
    return ns, np.maximum.accumulate(np.exp(gamma * traj.times) * ns)


def fit_decay_rate(times: Sequence[float], norms: Sequence[float], window=None, log_correction: bool = False) -> DecayFit:
    """Least squares of -log(norm) = gamma t [+ beta log(1 + t)] + c on the window."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.shape != y.shape:
        raise DomainError("times and norms must have equal length")
    if window is None:
        window = (float(t[0]), float(t[-1])) if t.size else (0.0, 0.0)
    ta, tb = window
    if not tb > ta:
        raise DomainError("fit window needs t_b > t_a")
    sel = (t >= ta) & (t <= tb)
    t, y = t[sel], y[sel]
    if t.size < MIN_FIT_SAMPLES:
        raise InsufficientSamples(f"decay fit needs >= {MIN_FIT_SAMPLES} samples, got {t.size}")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DomainError("norms must be positive and finite on the fit window")
    target = -np.log(y)
    cols = [t, np.ones_like(t)]
    if log_correction:
        cols.insert(1, np.log1p(t))
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    pred = X @ coef
    ss_res = float(np.sum((target - pred) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    beta = float(coef[1]) if log_correction else 0.0
    return DecayFit((float(ta), float(tb)), float(coef[0]), r2, log_correction, beta, int(t.size))
