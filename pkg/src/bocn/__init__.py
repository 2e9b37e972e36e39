"""Crank-Nicolson Galerkin finite element solver for the Benjamin-Ono equation.

The equation u_t + (u^2/2)_x - H u_xx = 0 is discretized on a truncated
domain [-X, X] with periodic boundary identification, a C^1 cubic Hermite
Galerkin space, Crank-Nicolson time stepping solved by fixed-point
iteration, and a subtracted Gauss-Legendre quadrature for the singular
integrals of the nonlocal dispersion term.
"""

from .assembly import (
    WeightFn,
    affine_weight,
    dispersion_matrix,
    l2_project,
    nonlinear_vector,
    unit_weight,
    weighted_mass,
)
from .diagnostics import (
    DiagnosticsRow,
    TwoSolitonParams,
    conserved,
    conv_rate,
    local_smoothing_sum,
    relative_error,
    single_soliton,
    two_soliton,
    weighted_norm,
)
from .errors import ConfigurationError, NonconvergenceError
from .hilbert import (
    SpectralGrid,
    fft_hilbert,
    frac_deriv,
    pv_hilbert_dbasis,
    spectral_derivative,
    spectral_grid,
)
from .mesh import (
    QuadratureRule,
    UniformMesh,
    eval_f,
    eval_fem,
    eval_fem_deriv,
    eval_g,
    gauss_legendre,
    make_mesh,
)
from .stepper import (
    SchemeConfig,
    SolverHandle,
    StepDiagnostics,
    Trajectory,
    cfl_max_dt,
    eval_interpolant,
    interpolant_coeffs,
    make_stepper,
    run,
    step,
)

__all__ = [
    "ConfigurationError",
    "DiagnosticsRow",
    "NonconvergenceError",
    "QuadratureRule",
    "SchemeConfig",
    "SolverHandle",
    "SpectralGrid",
    "StepDiagnostics",
    "Trajectory",
    "TwoSolitonParams",
    "UniformMesh",
    "WeightFn",
    "affine_weight",
    "cfl_max_dt",
    "conserved",
    "conv_rate",
    "dispersion_matrix",
    "eval_f",
    "eval_fem",
    "eval_fem_deriv",
    "eval_g",
    "eval_interpolant",
    "fft_hilbert",
    "frac_deriv",
    "gauss_legendre",
    "interpolant_coeffs",
    "l2_project",
    "local_smoothing_sum",
    "make_mesh",
    "make_stepper",
    "nonlinear_vector",
    "pv_hilbert_dbasis",
    "relative_error",
    "run",
    "single_soliton",
    "spectral_derivative",
    "spectral_grid",
    "step",
    "two_soliton",
    "unit_weight",
    "weighted_mass",
    "weighted_norm",
]

__version__ = "0.1.0"
