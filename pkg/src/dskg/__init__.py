"""Integral-transform solver for the Klein-Gordon equation in de Sitter spacetime.

psi_tt + n psi_t - e^{-2t} A psi + m^2 psi = F, solved by superposing
solutions of the constant-coefficient wave equation against hypergeometric
kernels.
"""
from .errors import (
    CFLViolation,
    ConfigError,
    DomainError,
    DskgError,
    ForbiddenInterval,
    InsufficientSamples,
    LateWindowUnderflow,
    NoContraction,
    NonConvergence,
    QuadratureFailure,
    QuadratureUnderResolved,
)
from .kernels import KernelPoint, MassParameters, Regime, classify_mass, kernel_E, kernel_K0, kernel_K1
from .norms import DecayFit, NormSpec, Space, besov_norm, fit_decay_rate, norm, sobolev_norm, weighted_sup_norm
from .semilinear import CauchyData, GammaBound, Nonlinearity, SourceDriven, expected_gamma, picard_solve
from .specfun import HypParams, gauss_2f1, hyp2f1
from .transform import (
    QuadratureSpec,
    SampledSource,
    SourceIntegrator,
    Trajectory,
    critical_closed_form,
    pde_residual,
    solve_linear_cauchy,
    solve_source,
    time_grid,
)
from .wave_base import ConstantLaplacian, DataKind, Field, GridKind, SpatialGrid, VarCoeff1D, solve_wave

__version__ = "0.1.0"
