"""De Sitter kernels E, K0, K1 and mass classification.

Notation: A = e^{-b}, B = e^{-t}, r the spatial offset.  The kernel is
supported on r <= |A - B|; with rho = |A - B| - r (distance to the cone)

    (A - B)^2 - r^2 = rho (|A - B| + r),   D = (A + B)^2 - r^2 = 4AB + rho(|A - B| + r)
    w = rho (|A - B| + r) / D,             1 - w = 4AB / D

and E = D^{-1/2} (1 - w)^{-M} F(1/2 - M, 1/2 - M; 1; w).  Everything is built
from rho so no digits are lost close to the light cone.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergence
from .specfun import DEFAULT_TOL, hyp2f1, hyp2f1_diff_quotient

ADMISSIBILITY_SLACK = 1e-12
CLASSIFY_TOL = 1e-12
REAL_CHECK = 1e3


class Regime(str, enum.Enum):
    SMALL = "SmallMass"
    ZERO = "ZeroCurved"
    LARGE = "LargeMass"
    CRITICAL = "Critical"
    KNOT = "KnotPoint"


@dataclass(frozen=True)
class MassParameters:
    n: int
    m: float
    regime: Regime
    mu: float
    imaginary: bool
    sgnM: int

    @property
    def M(self) -> complex:
        """Kernel argument: +mu in the real regime, -i mu for large mass."""
        return complex(0.0, -self.mu) if self.imaginary else complex(self.mu, 0.0)

    @property
    def critical_mass(self) -> float:
        return math.sqrt(self.n * self.n - 1.0) / 2.0


@dataclass(frozen=True)
class KernelPoint:
    r: float
    t: float
    b: float


def classify_mass(n: int, m: float) -> MassParameters:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension n must be a positive integer, got {n!r}")
    if not (m > 0) or not math.isfinite(m):
        raise DomainError(f"mass m must be positive and finite, got {m!r}")
    n = int(n)
    half = n / 2.0
    if abs(m - half) <= CLASSIFY_TOL * max(1.0, half):
        return MassParameters(n, float(m), Regime.ZERO, 0.0, False, 0)
    if m > half:
        mu = math.sqrt((m - half) * (m + half))
        return MassParameters(n, float(m), Regime.LARGE, mu, True, 1)
    mu = math.sqrt((half - m) * (half + m))
    k = round(mu - 0.5)
    if abs(mu - 0.5) <= CLASSIFY_TOL:
        regime = Regime.CRITICAL
        mu = 0.5
    elif k >= 0 and abs(mu - (k + 0.5)) <= CLASSIFY_TOL:
        regime = Regime.KNOT
        mu = k + 0.5
    else:
        regime = Regime.SMALL
    return MassParameters(n, float(m), regime, mu, False, 1)


def _cone_geometry(r, t, b):
    """Return (rho, s, four_ab, D) with s = |A - B| + r; checks admissibility."""
    r = np.abs(np.asarray(r, dtype=float))
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.minimum(t, b)
    hi = np.maximum(t, b)
    a_big = np.exp(-lo)
    gap = -a_big * np.expm1(lo - hi)  # |A - B| without cancellation
    rho = gap - r
    if np.any(rho < -ADMISSIBILITY_SLACK * (1.0 + gap)):
        raise DomainError("point outside the chronological region r <= |e^-b - e^-t|")
    rho = np.maximum(rho, 0.0)
    s = gap + r
    four_ab = 4.0 * np.exp(-(t + b))
    D = four_ab + rho * s
    return rho, s, four_ab, D


def _realify(v, tol, what):
    v = np.asarray(v)
    bad = np.abs(v.imag) > REAL_CHECK * tol * (1.0 + np.abs(v.real))
    if np.any(bad):
        raise NonConvergence(f"{what}: imaginary residue above {REAL_CHECK * tol:g}")
    return v.real


def E_kernel(r, t, b, M, tol: float = DEFAULT_TOL):
    """E(r, t; 0, b; M) on arrays (broadcast).  M may be real or complex."""
    M = complex(M)
    rho, s, four_ab, D = _cone_geometry(r, t, b)
    w = rho * s / D
    log1mw = np.log(four_ab) - np.log(D)
    shape = w.shape
    F = hyp2f1(0.5 - M, 0.5 - M, 1.0, w.ravel(), tol).reshape(shape)
    val = np.exp(-M * log1mw - 0.5 * np.log(D)) * F
    out = _realify(val, tol, "E kernel")
    return out if out.ndim else float(out)


def K1_kernel(z, t, M, tol: float = DEFAULT_TOL):
    return E_kernel(z, t, 0.0, M, tol)


def K0_kernel(z, t, M, tol: float = DEFAULT_TOL):
    """K0(z, t; M) = -dE/db at b = 0, regrouped so z -> 1 - e^{-t} is regular."""
    M = complex(M)
    z = np.abs(np.asarray(z, dtype=float))
    t = np.asarray(t, dtype=float)
    z, t = np.broadcast_arrays(z, t)
    rho, s, four_ab, D = _cone_geometry(z, t, 0.0)
    w = (rho * s / D).ravel()
    shape = z.shape
    p1 = (0.5 - M, 0.5 - M, 1.0)
    p2 = (-0.5 - M, 0.5 - M, 1.0)
    dq = hyp2f1_diff_quotient(p1, p2, w, tol).reshape(shape)
    F2 = hyp2f1(*p2, w, tol).reshape(shape)
    B = np.exp(-t)
    c1 = B - 1.0 + M * (B * B - 1.0 - z * z)
    log1mw = np.log(four_ab) - np.log(D)
    pref = np.exp(-M * log1mw - 0.5 * np.log(D))
    val = pref * (c1 * dq / D - 0.5 * F2)
    out = _realify(val, tol, "K0 kernel")
    return out if out.ndim else float(out)


def bracket_coefficients(z, t, M):
    """(coef1, coef2) of the K0 bracket; coef1 + coef2 = (z^2 - (1 - e^{-t})^2) / 2."""
    B = math.exp(-t)
    c1 = B - 1.0 + M * (B * B - 1.0 - z * z)
    c2 = (1.0 - B * B + z * z) * (0.5 + M)
    return c1, c2


# closed forms at M = 1/2

def critical_E(r, t, b):
    r, t, b = np.broadcast_arrays(np.asarray(r, float), np.asarray(t, float), np.asarray(b, float))
    _cone_geometry(r, t, b)
    out = 0.5 * np.exp(0.5 * (b + t))
    return out if out.ndim else float(out)


def critical_K1(z, t):
    return critical_E(z, t, 0.0)


def critical_K0(z, t):
    z, t = np.broadcast_arrays(np.asarray(z, float), np.asarray(t, float))
    _cone_geometry(z, t, 0.0)
    out = -0.25 * np.exp(0.5 * t)
    return out if out.ndim else float(out)


# scalar front ends

def kernel_E(p: KernelPoint, mp: MassParameters, tol: float = DEFAULT_TOL, fast: bool = True) -> float:
    if fast and mp.regime is Regime.CRITICAL:
        return float(critical_E(p.r, p.t, p.b))
    return float(E_kernel(p.r, p.t, p.b, mp.M, tol))


def kernel_K1(z: float, t: float, mp: MassParameters, tol: float = DEFAULT_TOL, fast: bool = True) -> float:
    _check_k_args(z, t)
    if fast and mp.regime is Regime.CRITICAL:
        return float(critical_K1(z, t))
    return float(K1_kernel(z, t, mp.M, tol))


def kernel_K0(z: float, t: float, mp: MassParameters, tol: float = DEFAULT_TOL, fast: bool = True) -> float:
    _check_k_args(z, t)
    if fast and mp.regime is Regime.CRITICAL:
        return float(critical_K0(z, t))
    return float(K0_kernel(z, t, mp.M, tol))


def _check_k_args(z, t):
    if t < 0 or z < 0:
        raise DomainError("kernel K needs z >= 0 and t >= 0")


def K_arrays(z, t, mp: MassParameters, tol: float = DEFAULT_TOL):
    """(K0, K1) on arrays, using the closed forms at the critical mass."""
    if mp.regime is Regime.CRITICAL:
        return critical_K0(z, t), critical_K1(z, t)
    return K0_kernel(z, t, mp.M, tol), K1_kernel(z, t, mp.M, tol)


def E_array(r, t, b, mp: MassParameters, tol: float = DEFAULT_TOL):
    if mp.regime is Regime.CRITICAL:
        return critical_E(r, t, b)
    return E_kernel(r, t, b, mp.M, tol)
