"""Composite Gauss-Legendre rules graded toward a light-cone endpoint.

The kernels develop a boundary layer of width ~ e^{-t} next to the cone,
and the base wave data oscillate at the grid bandwidth, so a single
Gauss-Legendre panel over the whole interval does not resolve the
integrands at late times.  Panels are laid out in the distance to the
cone, doubling geometrically from the layer scale and capped at a width
set by the data bandwidth.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

MIN_ORDER = 3


@lru_cache(maxsize=64)
def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int):
    """Nodes and weights of the order-point rule on [a, b]."""
    x, w = _gl(int(order))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_edges(length: float, scale: float, max_width: float) -> np.ndarray:
    """Panel edges in the distance rho to the endpoint, 0 = rho_0 < ... = length.

    Widths start at `scale` and double, never exceeding `max_width`.
    """
    if length <= 0:
        return np.array([0.0, 0.0])
    scale = min(max(scale, 1e-300), length)
    max_width = max(max_width, scale)
    edges = [0.0]
    width = scale
    while edges[-1] < length:
        nxt = edges[-1] + width
        if nxt >= length * (1.0 - 1e-12):
            nxt = length
        edges.append(nxt)
        width = min(2.0 * width, max_width)
    return np.asarray(edges)


def composite_rule(edges: np.ndarray, order: int):
    """Concatenate per-panel rules over consecutive edges."""
    order = max(int(order), MIN_ORDER)
    x, w = _gl(order)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def cone_rule(length: float, scale: float, max_width: float, order: int):
    """Rule for integrals over z in [0, length] with the cone at z = length.

    Returns (z_nodes, weights); the grading is in rho = length - z.
    """
    edges = graded_edges(length, scale, max_width)
    rho, w = composite_rule(edges, order)
    return length - rho, w


def interval_rule(a: float, b: float, max_width: float, order: int):
    """Uniform composite rule on [a, b] with panels no wider than max_width."""
    if b <= a:
        return np.empty(0), np.empty(0)
    npan = max(1, int(np.ceil((b - a) / max_width - 1e-12)))
    edges = np.linspace(a, b, npan + 1)
    return composite_rule(edges, order)
