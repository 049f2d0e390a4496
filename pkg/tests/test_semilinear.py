import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dskg.errors import DomainError, ForbiddenInterval, NoContraction
from dskg.kernels import classify_mass
from dskg.semilinear import (
    CauchyData,
    ForbiddenIntervalWarning,
    Nonlinearity,
    SourceDriven,
    expected_gamma,
    fixed_point_residual,
    picard_solve,
)
from dskg.transform import SampledSource, time_grid
from dskg.wave_base import ConstantLaplacian, Field, GridKind, SpatialGrid

from oracles import SQRT2

G = SpatialGrid(GridKind.PERIODIC_1D, 64, 20.0)
LAP = ConstantLaplacian()
CRIT = classify_mass(3, SQRT2)
TIMES = time_grid(4.0, 21)
CUBIC = Nonlinearity("OddCubic")


def bump(eps, center=10.0, width=2.0):
    return Field.from_function(G, lambda x: eps * np.exp(-(((x - center) / width) ** 2)))


# ---------------------------------------------------------------- decay bounds


def test_expected_gamma_critical_cubic():
    b = expected_gamma(CRIT, 2.0, CauchyData())
    assert b.value == pytest.approx(1 / 3, rel=1e-14) and not b.strict


def test_expected_gamma_large_mass():
    b = expected_gamma(classify_mass(3, 2.0), 1.0, CauchyData(gamma0=1.0))
    assert b.value == pytest.approx(0.75, rel=1e-14) and not b.strict


def test_expected_gamma_source_small_mass():
    b = expected_gamma(classify_mass(3, 1.0), 1.0, SourceDriven(0.3))
    assert b.value == pytest.approx(0.15, rel=1e-14) and b.strict
    assert b.admits(0.14) and not b.admits(0.15)


def test_expected_gamma_source_above_rate():
    mp = classify_mass(3, 1.0)
    rate = 1.5 - math.sqrt(1.25)
    b = expected_gamma(mp, 1.0, SourceDriven(0.9))
    assert b.value == pytest.approx(rate / 2, rel=1e-14) and b.strict


def test_expected_gamma_zero_curved_mass():
    mp = classify_mass(3, 1.5)
    b = expected_gamma(mp, 2.0, CauchyData(gamma0=0.5))
    assert b.value == pytest.approx(0.5) and not b.strict
    b = expected_gamma(mp, 2.0, CauchyData())
    assert b.strict and b.value == pytest.approx(0.5)


def test_forbidden_interval():
    mp = classify_mass(3, 1.45)
    with pytest.raises(ForbiddenInterval):
        expected_gamma(mp, 2.0, CauchyData())
    with pytest.warns(ForbiddenIntervalWarning):
        b = expected_gamma(mp, 2.0, CauchyData(psi0_zero=True))
    assert b.forbidden and b.strict


def test_expected_gamma_rejects_bad_inputs():
    with pytest.raises(DomainError):
        expected_gamma(CRIT, 0.0, CauchyData())
    with pytest.raises(DomainError):
        expected_gamma(CRIT, 1.0, CauchyData(gamma0=-1))
    with pytest.raises(DomainError):
        expected_gamma(CRIT, 1.0, SourceDriven(-0.1))
    with pytest.raises(DomainError):
        expected_gamma(classify_mass(3, 2.0), 1.0, CauchyData(gamma0=1.5))


@given(m=st.floats(0.05, 4.0), alpha=st.floats(0.1, 4.0), g=st.floats(0.0, 3.0))
def test_source_bound_never_exceeds_cap_or_rhs(m, alpha, g):
    mp = classify_mass(3, m)
    b = expected_gamma(mp, alpha, SourceDriven(g))
    assert b.value <= 3 / (2 * (alpha + 1)) + 1e-12 or b.value <= g + 1e-12
    assert b.value <= max(g, 0.0) + 1e-12


# ---------------------------------------------------------------- nonlinearities


def test_nonlinearity_values():
    x = np.array([-2.0, -0.5, 0.0, 1.5])
    assert np.allclose(Nonlinearity("OddCubic", c=2.0)(x), 2 * x**3)
    assert np.allclose(Nonlinearity("PowerAbs", alpha=1.5)(x), np.abs(x) ** 1.5 * x)
    tab = Nonlinearity("Custom", table=([-1, 0, 1], [-2, 0, 3]))
    assert np.allclose(tab(np.array([-0.5, 0.5])), [-1.0, 1.5])


def test_custom_nonlinearity_validation():
    with pytest.raises(DomainError):
        Nonlinearity("Custom")
    with pytest.raises(DomainError):
        Nonlinearity("Custom", table=([0, 1, 0.5], [0, 1, 2]))
    with pytest.raises(DomainError):
        Nonlinearity("Custom", table=([-1, 1], [1, 2]))
    with pytest.raises(DomainError):
        Nonlinearity("PowerAbs", alpha=0.0)


# ---------------------------------------------------------------- Picard iteration


def test_zero_coupling_converges_in_one_step():
    p = bump(0.5)
    traj, log, lin, _ = picard_solve(p, None, Nonlinearity("OddCubic", c=0.0), CRIT, LAP, 1 / 3, times=TIMES)
    assert log.converged and log.iterations == 1
    assert np.array_equal(traj.values, lin)


def test_small_data_converges_with_small_residual():
    tol = 1e-10
    traj, log, lin, G2 = picard_solve(bump(0.3), bump(0.1), CUBIC, CRIT, LAP, 1 / 3, tol=tol, times=TIMES)
    assert log.converged
    assert all(r < 1 for r in log.ratios)
    assert log.final_residual <= 2 * tol


def test_perturbed_solution_has_large_residual():
    traj, log, lin, G2 = picard_solve(bump(0.3), None, CUBIC, CRIT, LAP, 1 / 3, tol=1e-12, times=TIMES)
    noise = 1e-3 * np.random.default_rng(1).normal(size=traj.values.shape)
    bad = type(traj)(G, TIMES, traj.values + noise, CRIT)
    assert fixed_point_residual(bad, lin, CUBIC, CRIT, LAP, 1 / 3, 1.0, integrator=G2) >= 1e-4


def test_contraction_ratio_scales_like_eps_to_alpha():
    r = []
    for eps in (0.4, 0.2):
        _, log, _, _ = picard_solve(bump(eps), None, CUBIC, CRIT, LAP, 1 / 3, tol=1e-13, times=TIMES)
        r.append(log.ratios[0])
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.1)


def test_large_data_reports_no_contraction():
    with pytest.raises(NoContraction):
        picard_solve(bump(40.0), None, CUBIC, CRIT, LAP, 1 / 3, times=TIMES)


def test_source_only_problem():
    prof = bump(1.0).values
    src = lambda b: 0.05 * prof * np.exp(-0.3 * b)
    traj, log, lin, _ = picard_solve(None, None, CUBIC, classify_mass(3, 1.0), LAP, 0.14, source=src, grid=G, times=TIMES)
    assert log.converged and np.max(np.abs(lin)) > 0


def test_picard_needs_grid():
    with pytest.raises(DomainError):
        picard_solve(None, None, CUBIC, CRIT, LAP, 0.1, times=TIMES)
    with pytest.raises(DomainError):
        picard_solve(bump(0.1), None, CUBIC, CRIT, LAP, 0.1, max_iter=0, times=TIMES)


@settings(max_examples=6)
@given(shift=st.integers(1, 63))
def test_translation_equivariance(shift):
    p = bump(0.3)
    q = Field(G, np.roll(p.values, shift))
    a, *_ = picard_solve(p, None, CUBIC, CRIT, LAP, 1 / 3, tol=1e-12, times=TIMES)
    b, *_ = picard_solve(q, None, CUBIC, CRIT, LAP, 1 / 3, tol=1e-12, times=TIMES)
    assert np.max(np.abs(np.roll(a.values, shift, axis=1) - b.values)) <= 1e-12
