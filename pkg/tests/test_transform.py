import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from dskg.errors import DomainError, InsufficientSamples, QuadratureUnderResolved
from dskg.kernels import classify_mass
from dskg.transform import (
    QuadratureSpec,
    SampledSource,
    SourceIntegrator,
    Trajectory,
    critical_closed_form,
    critical_source_closed_form,
    pde_residual,
    phi_of,
    solve_linear_cauchy,
    solve_source,
    solve_u_form,
    time_grid,
)
from dskg.wave_base import ConstantLaplacian, Field, GridKind, SpatialGrid, VarCoeff1D

from oracles import SQRT2

G = SpatialGrid(GridKind.PERIODIC_1D, 64, 20.0)
LAP = ConstantLaplacian()
ZERO = Field(G, np.zeros(G.N))
CRIT = classify_mass(3, SQRT2)


def bump(grid=G, width=1.5, center=10.0, amp=1.0):
    return Field.from_function(grid, lambda x: amp * np.exp(-(((x - center) / width) ** 2)))


def ode_linear(n, m, y0, y1, times):
    sol = solve_ivp(
        lambda t, y: [y[1], -n * y[1] - m * m * y[0]], (0, times[-1]), [y0, y1],
        t_eval=times, method="DOP853", rtol=1e-13, atol=1e-15,
    )
    return sol.y[0]


def ode_source(n, m, g, times):
    sol = solve_ivp(
        lambda t, y: [y[1], -n * y[1] - m * m * y[0] + g(t)], (0, times[-1]), [0.0, 0.0],
        t_eval=times, method="DOP853", rtol=1e-13, atol=1e-15,
    )
    return sol.y[0]


# ---------------------------------------------------------------- time grids and trajectories


def test_time_grids():
    t = time_grid(8.0, 5)
    assert np.allclose(t, [0, 2, 4, 6, 8])
    tp = time_grid(8.0, 5, "phi")
    assert tp[0] == 0.0 and tp[-1] == 8.0
    assert np.allclose(np.diff(phi_of(tp)), phi_of(8.0) / 4)
    with pytest.raises(DomainError):
        time_grid(-1.0, 5)
    with pytest.raises(DomainError):
        time_grid(1.0, 5, "log")


def test_trajectory_validation():
    with pytest.raises(DomainError):
        Trajectory(G, np.array([0.0, 0.0]), np.zeros((2, G.N)), CRIT)
    with pytest.raises(DomainError):
        Trajectory(G, np.array([0.0, 1.0]), np.zeros((3, G.N)), CRIT)


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(n_s=4)
    with pytest.raises(DomainError):
        QuadratureSpec(rule="trapezoid")
    assert QuadratureSpec().doubled() == QuadratureSpec(128, 96, 96)


# ---------------------------------------------------------------- linear Cauchy problem


def test_zero_data_gives_zero():
    traj = solve_linear_cauchy(ZERO, ZERO, classify_mass(3, 1.0), LAP, time_grid(4, 9))
    assert np.all(traj.values == 0.0)


def test_constant_data_closed_form_m1():
    mp = classify_mass(3, 1.0)
    M = math.sqrt(1.25)
    times = time_grid(8.0, 33)
    traj = solve_linear_cauchy(Field(G, np.ones(G.N)), ZERO, mp, LAP, times)
    want = np.exp(-1.5 * times) * (np.cosh(M * times) + 1.5 / M * np.sinh(M * times))
    assert np.allclose(traj.values, want[:, None], rtol=1e-10, atol=0)


@pytest.mark.parametrize("m", [1.0, 1.5, 2.0, SQRT2, 0.5, 3.0])
@pytest.mark.parametrize("y0,y1", [(1.0, 0.0), (0.0, 1.0), (0.7, -0.4)])
def test_constant_data_matches_ode(m, y0, y1):
    mp = classify_mass(3, m)
    times = time_grid(8.0, 17)
    traj = solve_linear_cauchy(Field(G, np.full(G.N, y0)), Field(G, np.full(G.N, y1)), mp, LAP, times)
    want = ode_linear(3, m, y0, y1, times)
    scale = np.maximum(np.abs(want), np.exp(-1.5 * times) * 1e-3)
    assert np.max(np.abs(traj.values[:, 0] - want) / scale) <= 1e-7
    assert np.ptp(traj.values, axis=1).max() <= 1e-12


def test_critical_matches_closed_form():
    times = time_grid(8.0, 33)
    p0, p1 = bump(), bump(width=2.0, center=8.0, amp=0.5)
    traj = solve_linear_cauchy(p0, p1, CRIT, LAP, times)
    ref = critical_closed_form(p0, p1, 3, LAP, times)
    assert np.max(np.abs(traj.values - ref)) <= 1e-8


def test_regime_continuity_across_zero_curved_mass():
    times = time_grid(6.0, 13)
    p0, p1 = bump(), bump(width=2.0, amp=0.5)
    out = [solve_linear_cauchy(p0, p1, classify_mass(3, m), LAP, times).values for m in (1.5 - 1e-6, 1.5, 1.5 + 1e-6)]
    scale = np.max(np.abs(out[1]), axis=1, keepdims=True)
    for o in (out[0], out[2]):
        assert np.max(np.abs(o - out[1]) / scale) <= 1e-4


def test_self_check_passes_and_detects_underresolution():
    times = time_grid(6.0, 7)
    solve_linear_cauchy(bump(), bump(amp=0.3), classify_mass(3, 1.0), LAP, times, self_check=True)
    g = SpatialGrid(GridKind.PERIODIC_1D, 256, 20.0)
    rough = Field.from_function(g, lambda x: np.exp(-(((x - 10) / 0.12) ** 2)))
    with pytest.raises(QuadratureUnderResolved):
        solve_linear_cauchy(rough, rough, classify_mass(3, 1.0), LAP, times, QuadratureSpec(8, 8, 8), self_check=True)


def test_initial_data_recovery():
    p0, p1 = bump(), bump(width=2.0, amp=0.5)
    mp = classify_mass(3, 1.0)
    errs0, errs1 = [], []
    for dt in (1e-2, 5e-3):
        traj = solve_linear_cauchy(p0, p1, mp, LAP, np.array([0.0, dt, 2 * dt]))
        extrap = 2 * traj.values[1] - traj.values[2]  # linear extrapolation to t = 0
        errs0.append(np.max(np.abs(extrap - p0.values)))
        errs1.append(np.max(np.abs((traj.values[1] - p0.values) / dt - p1.values)))
    assert errs0[0] / errs0[1] == pytest.approx(4.0, rel=0.15)  # O(dt^2)
    assert errs1[0] / errs1[1] == pytest.approx(2.0, rel=0.15)  # O(dt)


@settings(max_examples=10)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), m=st.sampled_from([0.8, SQRT2, 1.5, 2.2]))
def test_linearity(a, b, m):
    mp = classify_mass(3, m)
    times = time_grid(4.0, 5)
    p, q = bump(), bump(width=2.5, center=6.0)
    u = solve_linear_cauchy(p, q, mp, LAP, times).values
    v = solve_linear_cauchy(q, p, mp, LAP, times).values
    w = solve_linear_cauchy(a * p + b * q, a * q + b * p, mp, LAP, times).values
    scale = max(np.max(np.abs(u)), np.max(np.abs(v))) * (abs(a) + abs(b) + 1e-300)
    assert np.max(np.abs(w - (a * u + b * v))) <= 1e-10 * max(scale, 1e-300)


def test_varcoeff_path_agrees_with_spectral():
    g = SpatialGrid(GridKind.PERIODIC_1D, 256, 20.0)
    p0, p1 = bump(g, 2.0), bump(g, 2.0, amp=0.5)
    mp = classify_mass(3, 1.0)
    times = time_grid(4.0, 5)
    a = solve_linear_cauchy(p0, p1, mp, LAP, times).values
    b = solve_linear_cauchy(p0, p1, mp, VarCoeff1D(lambda x: np.ones_like(x)), times).values
    assert np.max(np.abs(a - b)) <= 1e-3 * np.max(np.abs(a))


def test_radial_grid_solve_runs():
    g = SpatialGrid(GridKind.RADIAL_3D, 64, 2.0)
    p = Field.from_function(g, lambda x: np.exp(-((x / 0.3) ** 2)))
    traj = solve_linear_cauchy(p, Field(g, np.zeros(64)), CRIT, LAP, time_grid(3.0, 4))
    ref = critical_closed_form(p, Field(g, np.zeros(64)), 3, LAP, time_grid(3.0, 4))
    assert np.max(np.abs(traj.values - ref)) <= 1e-8


# ---------------------------------------------------------------- source problem


def test_zero_source_gives_zero():
    traj = solve_source(lambda b: np.zeros(G.N), G, classify_mass(3, 1.0), LAP, time_grid(4, 5))
    assert np.all(traj.values == 0.0)


@pytest.mark.parametrize("m", [1.0, 1.5, 2.0])
def test_constant_source_matches_ode(m):
    mp = classify_mass(3, m)
    times = time_grid(8.0, 17)
    g = lambda b: math.exp(-0.3 * b) * (1 + 0.5 * math.sin(b))
    traj = solve_source(lambda b: np.full(G.N, g(b)), G, mp, LAP, times)
    want = ode_source(3, m, g, times)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(traj.values[:, 0] - want)) <= 1e-6 * scale


def test_critical_source_closed_form():
    times = time_grid(5.0, 11)
    prof = bump().values

    def f(b):
        return prof * math.exp(-0.5 * b)

    out = solve_source(f, G, CRIT, LAP, times).values
    ref = critical_source_closed_form(f, G, 3, LAP, times)
    assert np.max(np.abs(out - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_sampled_source_interpolates_in_phi():
    times = time_grid(6.0, 61)
    vals = np.outer(np.exp(-times), np.ones(G.N))
    s = SampledSource(G, times, vals)
    b = np.array([0.05, 1.234, 5.99])
    assert np.allclose(s.sample(b)[:, 0], np.exp(-b), rtol=1e-5)
    with pytest.raises(DomainError):
        SampledSource(G, times, vals[:, :3])


def test_integrator_is_reusable_and_linear():
    mp = classify_mass(3, 1.0)
    times = time_grid(4.0, 9)
    Gop = SourceIntegrator(G, mp, LAP, times)
    f1 = lambda b: bump().values * math.exp(-b)
    f2 = lambda b: bump(width=3.0).values
    a = Gop.apply(f1)
    b = Gop.apply(f2)
    c = Gop.apply(lambda t: 2 * f1(t) - f2(t))
    assert np.allclose(c, 2 * a - b, atol=1e-13)


def test_source_self_check():
    times = time_grid(4.0, 5)
    solve_source(lambda b: bump().values * math.exp(-0.3 * b), G, classify_mass(3, 1.0), LAP, times, self_check=True)


def test_u_form_wrapper():
    mp = classify_mass(3, 1.0)
    times = time_grid(3.0, 4)
    p0 = bump()
    u = solve_u_form(p0, None, None, G, mp, LAP, times).values
    psi = solve_linear_cauchy(p0, ZERO, mp, LAP, times).values
    assert np.allclose(u, psi * np.exp(1.5 * times)[:, None], rtol=1e-14)


# ---------------------------------------------------------------- residual


def test_pde_residual_zero():
    traj = Trajectory(G, time_grid(1.0, 6), np.zeros((6, G.N)), CRIT)
    assert np.all(pde_residual(traj, None, CRIT, LAP) == 0.0)


def test_pde_residual_errors():
    with pytest.raises(InsufficientSamples):
        pde_residual(Trajectory(G, time_grid(1.0, 4), np.zeros((4, G.N)), CRIT), None, CRIT, LAP)
    with pytest.raises(DomainError):
        pde_residual(Trajectory(G, time_grid(1.0, 6, "phi"), np.zeros((6, G.N)), CRIT), None, CRIT, LAP)


def _residual(mp, p0, p1, dt, grid=G):
    times = 1.0 + dt * np.arange(7)
    traj = solve_linear_cauchy(p0, p1, mp, LAP, times)
    return float(np.max(pde_residual(traj, None, mp, LAP)))


def test_pde_residual_second_order_constant_data():
    mp = classify_mass(3, 1.0)
    one = Field(G, np.ones(G.N))
    r1, r2 = _residual(mp, one, ZERO, 2e-2), _residual(mp, one, ZERO, 1e-2)
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("m", [SQRT2, 1.0, 2.0])
def test_pde_residual_small_and_second_order(m):
    g = SpatialGrid(GridKind.PERIODIC_1D, 256, 20.0)
    p0, p1 = bump(g, 1.0), bump(g, 1.0, amp=0.5)
    mp = classify_mass(3, m)
    r1, r2 = _residual(mp, p0, p1, 1e-3, g), _residual(mp, p0, p1, 5e-4, g)
    if m == SQRT2:
        assert r1 <= 1e-6
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.2)
