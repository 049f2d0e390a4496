import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from dskg.errors import DomainError, InsufficientSamples
from dskg.kernels import classify_mass
from dskg.norms import (
    NormSpec,
    Space,
    besov_blocks,
    besov_norm,
    dyadic_blocks,
    fit_decay_rate,
    l2_norm,
    norm,
    sobolev_norm,
    weighted_series,
    weighted_sup_norm,
)
from dskg.transform import Trajectory, time_grid
from dskg.wave_base import Field, GridKind, SpatialGrid

P = SpatialGrid(GridKind.PERIODIC_1D, 256, 20.0)
R = SpatialGrid(GridKind.RADIAL_3D, 256, 6.0)


def gauss(grid, width, center=10.0):
    return Field.from_function(grid, lambda x: np.exp(-(((x - center) / width) ** 2)))


# ---------------------------------------------------------------- Sobolev


def test_sine_l2_norm():
    u = Field.from_function(P, lambda x: np.sin(2 * np.pi * x / P.L))
    assert sobolev_norm(u, 0) == pytest.approx(math.sqrt(P.L / 2), rel=1e-13)
    assert l2_norm(u) == pytest.approx(math.sqrt(P.L / 2), rel=1e-13)


def test_single_mode_weight():
    k = 2 * np.pi * 3 / P.L
    u = Field.from_function(P, lambda x: np.cos(k * x))
    assert sobolev_norm(u, 2) == pytest.approx((1 + k * k) * math.sqrt(P.L / 2), rel=1e-12)


def test_gaussian_h1_matches_quadrature():
    w = 1.3
    u = gauss(P, w)
    f2 = quad(lambda x: math.exp(-2 * (x / w) ** 2), -30, 30)[0]
    df2 = quad(lambda x: (2 * x / w**2) ** 2 * math.exp(-2 * (x / w) ** 2), -30, 30)[0]
    assert sobolev_norm(u, 1) == pytest.approx(math.sqrt(f2 + df2), rel=1e-10)


def test_radial_l2_matches_quadrature():
    w = 0.8
    u = Field.from_function(R, lambda x: np.exp(-((x / w) ** 2)))
    want = math.sqrt(quad(lambda r: 4 * math.pi * r * r * math.exp(-2 * (r / w) ** 2), 0, 20)[0])
    assert sobolev_norm(u, 0) == pytest.approx(want, rel=1e-10)
    assert l2_norm(u) == pytest.approx(want, rel=1e-10)


def test_negative_s_rejected():
    with pytest.raises(DomainError):
        sobolev_norm(gauss(P, 1.0), -1)
    with pytest.raises(DomainError):
        NormSpec(s=-0.5)
    with pytest.raises(DomainError):
        NormSpec(Space.BESOV, 1.0, 0.5, 2.0)


rand_field = st.integers(0, 10_000).map(lambda s: np.random.default_rng(s))


def _field(rng, modes=20):
    c = np.zeros(P.N // 2 + 1, dtype=complex)
    c[:modes] = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    c[0] = c[0].real
    return Field(P, np.fft.irfft(c, n=P.N))


@given(rng=rand_field)
def test_parseval(rng):
    u = _field(rng)
    assert sobolev_norm(u, 0) == pytest.approx(l2_norm(u), rel=1e-12)


@given(rng=rand_field, lam=st.floats(-5, 5).filter(lambda x: x == 0 or abs(x) > 1e-100), s=st.floats(0, 3))
def test_homogeneity(rng, lam, s):
    u = _field(rng)
    assert sobolev_norm(lam * u, s) == pytest.approx(abs(lam) * sobolev_norm(u, s), rel=1e-12, abs=1e-300)


@given(r1=rand_field, r2=rand_field, s=st.floats(0, 3))
def test_triangle_inequality(r1, r2, s):
    u, v = _field(r1), _field(r2)
    assert sobolev_norm(u + v, s) <= (sobolev_norm(u, s) + sobolev_norm(v, s)) * (1 + 1e-12)


@given(rng=rand_field, s1=st.floats(0, 2), ds=st.floats(0, 2))
def test_monotone_in_s(rng, s1, ds):
    u = _field(rng)
    assert sobolev_norm(u, s1) <= sobolev_norm(u, s1 + ds) * (1 + 1e-12)


# ---------------------------------------------------------------- Besov


@given(xi=st.lists(st.floats(0, 1e4), min_size=1, max_size=50))
def test_partition_of_unity(xi):
    phis = dyadic_blocks(np.array(xi))
    assert np.allclose(phis.sum(axis=0), 1.0, atol=1e-14)
    assert np.all(phis >= -1e-15)


def test_blocks_reconstruct_field():
    u = gauss(P, 0.7)
    assert np.allclose(besov_blocks(u).sum(axis=0), u.values, atol=1e-13)


def test_single_shell_mode():
    # xi = 2 pi k / L = 0.942 < 1: the whole mode sits in block 0
    k = 2 * np.pi * 3 / P.L
    u = Field.from_function(P, lambda x: np.cos(k * x))
    assert besov_norm(u, NormSpec(Space.BESOV, 1.0, 2.0, 2.0)) == pytest.approx(math.sqrt(P.L / 2), rel=1e-12)
    assert besov_norm(u, NormSpec(Space.BESOV, 1.0, math.inf, math.inf)) == pytest.approx(1.0, rel=1e-12)


def test_besov_22_equivalent_to_sobolev_on_broad_field():
    u = gauss(P, 3.0)
    b = norm(u, NormSpec(Space.BESOV, 0.0, 2.0, 2.0))
    assert b == pytest.approx(sobolev_norm(u, 0), rel=0.05)


def test_besov_radial_rejected():
    with pytest.raises(DomainError):
        besov_norm(Field(R, np.ones(R.N)), NormSpec(Space.BESOV))


# ---------------------------------------------------------------- weighted norms and fits

CRIT = classify_mass(3, math.sqrt(2))


def test_weighted_sup_norm_zero():
    traj = Trajectory(P, time_grid(4.0, 5), np.zeros((5, P.N)), CRIT)
    assert weighted_sup_norm(traj, 1.0, 1.0) == 0.0


def test_weighted_sup_norm_of_decaying_profile():
    times = time_grid(6.0, 13)
    g = gauss(P, 2.0)
    vals = np.exp(-0.7 * times)[:, None] * g.values[None, :]
    traj = Trajectory(P, times, vals, CRIT)
    hs = sobolev_norm(g, 1.0)
    assert weighted_sup_norm(traj, 0.7, 1.0) == pytest.approx(hs, rel=1e-12)
    assert weighted_sup_norm(traj, 0.5, 1.0) == pytest.approx(hs, rel=1e-12)
    assert weighted_sup_norm(traj, 0.9, 1.0) == pytest.approx(hs * math.exp(0.2 * 6), rel=1e-12)
    _, running = weighted_series(traj, 0.9, 1.0)
    assert np.all(np.diff(running) >= 0)


def test_fit_pure_exponential():
    t = np.linspace(0, 10, 41)
    fit = fit_decay_rate(t, 3.0 * np.exp(-0.5 * t))
    assert fit.gamma == pytest.approx(0.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_log_correction():
    t = np.linspace(0, 12, 61)
    plain = fit_decay_rate(t, np.exp(-t) * (1 + t), window=(4, 12))
    corr = fit_decay_rate(t, np.exp(-t) * (1 + t), window=(4, 12), log_correction=True)
    assert corr.gamma == pytest.approx(1.0, abs=0.02)
    assert corr.beta == pytest.approx(-1.0, abs=0.05)
    assert plain.gamma < 0.95


def test_fit_constant_gives_zero():
    t = np.linspace(0, 5, 20)
    fit = fit_decay_rate(t, np.full(20, 2.0))
    assert fit.gamma == pytest.approx(0.0, abs=1e-14)


def test_fit_errors():
    t = np.linspace(0, 5, 20)
    with pytest.raises(InsufficientSamples):
        fit_decay_rate(t, np.exp(-t), window=(0, 1))
    with pytest.raises(DomainError):
        fit_decay_rate(t, np.zeros(20))
    with pytest.raises(DomainError):
        fit_decay_rate(t, np.ones(19))
    with pytest.raises(DomainError):
        fit_decay_rate(t, np.ones(20), window=(3, 1))
