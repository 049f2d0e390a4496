"""Gauss hypergeometric function 2F1(a, b; c; z) on 0 <= z < 1.

The kernels only ever need c = 1 and real z in [0, 1), but the parameters
a, b may be complex (imaginary curved mass).  Evaluation strategy:

* terminating polynomial when a or b is a non-positive integer;
* the Gauss series for z <= Z_SWITCH;
* the z -> 1 - z connection formula above it, with the logarithmic
  form when c - a - b is an integer (M = 0 and the half-integer masses).

All array routines broadcast over z with scalar parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NonConvergence

Z_SWITCH = 0.7
MAX_TERMS = 1_000_000
INT_TOL = 1e-12
DEFAULT_TOL = 1e-14
NEAR_INT = 1e-3
CAUCHY_RADIUS = 2e-2
CAUCHY_NODES = 24


@dataclass(frozen=True)
class HypParams:
    a: complex
    b: complex
    c: complex
    z: float

    def __post_init__(self):
        if not (0.0 <= self.z < 1.0):
            raise DomainError(f"z must lie in [0, 1), got {self.z!r}")
        if _nonpositive_int(self.c):
            raise DomainError(f"c must not be a non-positive integer, got {self.c!r}")


def _nearest_int(x: complex) -> int | None:
    x = complex(x)
    if abs(x.imag) > INT_TOL:
        return None
    k = round(x.real)
    return int(k) if abs(x.real - k) <= INT_TOL else None


def _nonpositive_int(x: complex) -> bool:
    k = _nearest_int(x)
    return k is not None and k <= 0


def _as_z(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0.0) or np.any(z >= 1.0):
        raise DomainError("z must lie in [0, 1)")
    return z


def _gauss_series(a, b, c, z, tol, start=0):
    """Sum_{k>=start} (a)_k (b)_k / ((c)_k k!) z^k, vectorized over z."""
    z = np.asarray(z, dtype=float)
    term = np.ones(z.shape, dtype=complex)
    total = np.zeros(z.shape, dtype=complex)
    tail_factor = 1.0 / max(1.0 - float(np.max(z, initial=0.0)), 1e-300)
    for k in range(MAX_TERMS):
        if k >= start:
            total = total + term
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0))
        term = term * ratio * z
        if k >= start and np.all(np.abs(term) * tail_factor <= tol * (1.0 + np.abs(total))):
            return total
        if ratio == 0:
            return total
    raise NonConvergence(f"2F1 series did not converge in {MAX_TERMS} terms")


def _terminating(a, b, c, z):
    """Exact polynomial for a or b a non-positive integer."""
    z = np.asarray(z, dtype=float)
    degs = [-k for k in (_nearest_int(a), _nearest_int(b)) if k is not None and k <= 0]
    deg = min(degs)
    # Horner on the coefficient list keeps rounding at machine level.
    coef = [1.0 + 0j]
    for k in range(deg):
        coef.append(coef[-1] * (a + k) * (b + k) / ((c + k) * (k + 1.0)))
    out = np.full(z.shape, coef[-1], dtype=complex)
    for ck in reversed(coef[:-1]):
        out = out * z + ck
    return out


def _connection(a, b, c, z, tol):
    """Non-degenerate z -> 1-z connection formula."""
    w = 1.0 - z
    d = c - a - b
    g1 = special.gamma(c) * special.gamma(d) * special.rgamma(c - a) * special.rgamma(c - b)
    g2 = special.gamma(c) * special.gamma(-d) * special.rgamma(a) * special.rgamma(b)
    s1 = _gauss_series(a, b, 1.0 - d, w, tol)
    s2 = _gauss_series(c - a, c - b, 1.0 + d, w, tol)
    return g1 * s1 + g2 * np.exp(d * np.log(w)) * s2


def _log_connection(a, b, m, z, tol):
    """Connection formula for c = a + b + m, m a non-negative integer."""
    c = a + b + m
    w = 1.0 - z
    logw = np.log(w)
    gc = special.gamma(c)
    finite = np.zeros(z.shape, dtype=complex)
    if m > 0:
        pre = special.gamma(m) * gc * special.rgamma(a + m) * special.rgamma(b + m)
        term = 1.0 + 0j
        for k in range(m):
            finite = finite + term * w**k
            if k + 1 < m:
                term = term * (a + k) * (b + k) / ((k + 1.0) * (1.0 - m + k))
        finite = pre * finite
    pre2 = -((-1.0) ** m) * gc * special.rgamma(a) * special.rgamma(b)
    if pre2 == 0:
        return finite
    # k = 0 term of the logarithmic series
    coef = 1.0 / special.factorial(m, exact=False)
    dig = -special.psi(1.0) - special.psi(m + 1.0) + special.psi(a + m) + special.psi(b + m)
    total = np.zeros(z.shape, dtype=complex)
    wk = np.ones(z.shape)
    tail_factor = 1.0 / max(1.0 - float(np.max(w, initial=0.0)), 1e-300)
    for k in range(MAX_TERMS):
        term = coef * wk * (logw + dig)
        total = total + term
        # advance to k+1
        coef = coef * (a + m + k) * (b + m + k) / ((k + 1.0) * (k + m + 1.0))
        dig = dig - 1.0 / (k + 1.0) - 1.0 / (k + m + 1.0) + 1.0 / (a + m + k) + 1.0 / (b + m + k)
        wk = wk * w
        nxt = np.abs(coef * wk) * (np.abs(logw) + abs(dig))
        if np.all(nxt * tail_factor <= tol * (1.0 + np.abs(total))):
            break
    else:
        raise NonConvergence("logarithmic connection series did not converge")
    return finite + pre2 * w**m * total


def hyp2f1(a, b, c, z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorized 2F1(a, b; c; z) for real z in [0, 1); returns complex."""
    a, b, c = complex(a), complex(b), complex(c)
    if _nonpositive_int(c):
        raise DomainError("c must not be a non-positive integer")
    if not tol > 0:
        raise DomainError("tol must be positive")
    z = _as_z(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if _nonpositive_int(a) or _nonpositive_int(b):
        out = _terminating(a, b, c, z)
    else:
        out = np.empty(z.shape, dtype=complex)
        lo = z <= Z_SWITCH
        if np.any(lo):
            out[lo] = _gauss_series(a, b, c, z[lo], tol)
        hi = ~lo
        if np.any(hi):
            out[hi] = _upper(a, b, c, z[hi], tol)
    if a.imag == 0 and b.imag == 0 and c.imag == 0:
        out = out.real + 0j  # real parameters: drop Gamma-phase rounding
    return out[0] if scalar else out


def _upper(a, b, c, z, tol):
    d = c - a - b
    m = int(round(d.real))
    delta = d - m
    if abs(delta) >= NEAR_INT:
        return _connection(a, b, c, z, tol)
    if m < 0:
        # Euler: F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z)
        inner = _upper(c - a, c - b, c, z, tol)
        return np.exp(d * np.log1p(-z)) * inner
    if abs(delta) <= INT_TOL:
        return _log_connection(a + delta / 2, b + delta / 2, m, z, tol)
    return _near_degenerate(a + delta / 2, b + delta / 2, m, delta, z, tol)


def _near_degenerate(a0, b0, m, delta, z, tol):
    """F(a0 - delta/2, b0 - delta/2; a0 + b0 + m; z) for small delta != 0.

    The connection formula cancels catastrophically as c - a - b approaches
    an integer.  F is analytic in delta, so evaluate it on a circle of radius
    CAUCHY_RADIUS (where cancellation is mild) and apply Cauchy's formula.
    """
    c = a0 + b0 + m
    n = CAUCHY_NODES
    nodes = CAUCHY_RADIUS * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    acc = np.zeros(z.shape, dtype=complex)
    for e in nodes:
        f = _connection(a0 - e / 2, b0 - e / 2, c, z, tol)
        acc = acc + f * e / (e - delta)
    return acc / n


def gauss_2f1(p: HypParams, tol: float = DEFAULT_TOL) -> complex:
    """2F1(a, b; c; z) with |S - F| <= tol (1 + |S|)."""
    return complex(hyp2f1(p.a, p.b, p.c, p.z, tol))


def gauss_2f1_at_one(a, b, c) -> complex:
    """Gauss summation: F(a, b; c; 1) = G(c) G(c-a-b) / (G(c-a) G(c-b))."""
    a, b, c = complex(a), complex(b), complex(c)
    if (c - a - b).real <= 0:
        raise DomainError("Gauss summation needs Re(c - a - b) > 0")
    return complex(
        special.gamma(c) * special.gamma(c - a - b) * special.rgamma(c - a) * special.rgamma(c - b)
    )


def _diff_coefficients(p1, p2):
    """Yield (coef1_k, delta_k) with delta_k = coef1_k - coef2_k, cancellation free.

    coef_k = (a)_k (b)_k / ((c)_k k!).  The recurrence only ever multiplies
    by parameter differences, never subtracts two nearly equal terms.
    """
    a1, b1, c1 = p1
    a2, b2, c2 = p2
    da, db, dc = a1 - a2, b1 - b2, c1 - c2
    t1 = 1.0 + 0j
    t2 = 1.0 + 0j
    delta = 0j
    k = 0
    while True:
        yield t1, delta
        x1, y1, z2 = a1 + k, b1 + k, c2 + k
        r1 = (a1 + k) * (b1 + k) / ((c1 + k) * (k + 1.0))
        r2 = (a2 + k) * (b2 + k) / ((c2 + k) * (k + 1.0))
        num = -x1 * y1 * dc + (x1 * db + da * y1 - da * db) * (z2 + dc)
        dr = num / ((c1 + k) * (c2 + k) * (k + 1.0))
        delta = delta * r1 + t2 * dr
        t1 = t1 * r1
        t2 = t2 * r2
        k += 1


def hyp2f1_diff_quotient(p1, p2, z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """(F(p1; z) - F(p2; z)) / z for parameter triples p1, p2, vectorized over z.

    Below Z_SWITCH the differenced series is summed with Kahan compensation;
    the value at z = 0 is the exact limit a1 b1 / c1 - a2 b2 / c2.
    """
    p1 = tuple(complex(v) for v in p1)
    p2 = tuple(complex(v) for v in p2)
    z = _as_z(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=complex)
    lo = z <= Z_SWITCH
    if np.any(lo):
        out[lo] = _diff_series(p1, p2, z[lo], tol, start=1)
    hi = ~lo
    if np.any(hi):
        zh = z[hi]
        out[hi] = (hyp2f1(*p1, zh, tol) - hyp2f1(*p2, zh, tol)) / zh
    return out[0] if scalar else out


def _diff_series(p1, p2, z, tol, start):
    """Sum_k delta_k z^(k - start), compensated."""
    total = np.zeros(z.shape, dtype=complex)
    comp = np.zeros(z.shape, dtype=complex)
    zk = np.ones(z.shape)
    zmax = float(np.max(z, initial=0.0))
    tail_factor = 1.0 / max(1.0 - zmax, 1e-300)
    gen = _diff_coefficients(p1, p2)
    for k, (_, delta) in enumerate(gen):
        if k >= start:
            y = delta * zk - comp
            s = total + y
            comp = (s - total) - y
            total = s
            zk = zk * z
            if k > start + 2 and np.all(
                np.abs(delta) * zk * tail_factor <= tol * (1e-300 + np.abs(total))
            ):
                return total
            if delta == 0 and k > start and _terminated(p1, p2, k):
                return total
        if k > MAX_TERMS:
            raise NonConvergence("differenced 2F1 series did not converge")


def _terminated(p1, p2, k):
    def done(p):
        return any(_nonpositive_int(v) and -_nearest_int(v) < k for v in p[:2])

    return done(p1) and done(p2)


def gauss_2f1_diff(p1: HypParams, p2: HypParams, tol: float = DEFAULT_TOL) -> complex:
    """2F1(p1) - 2F1(p2) at a common z, without subtracting the two sums."""
    if p1.z != p2.z:
        raise DomainError("gauss_2f1_diff needs a common argument z")
    t1 = (p1.a, p1.b, p1.c)
    t2 = (p2.a, p2.b, p2.c)
    if t1 == t2:
        return 0j
    z = p1.z
    if z <= Z_SWITCH:
        return complex(_diff_series(t1, t2, np.atleast_1d(np.float64(z)), tol, start=0)[0])
    return gauss_2f1(p1, tol) - gauss_2f1(p2, tol)
