"""Reference solutions and run diagnostics.

Closed-form one- and two-soliton solutions of u_t + (u^2/2)_x - H u_xx = 0,
the first three conserved functionals Q1 (mass), Q2 (momentum), Q3 (energy),
relative L^2 errors against an exact solution on a fine trapezoid grid, and
the time-integrated local H^{1/2} diagnostic of the half states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assembly
from .hilbert import fft_hilbert, frac_deriv, spectral_grid
from .mesh import UniformMesh, _check_coeffs, eval_fem, eval_fem_deriv
from .stepper import Trajectory


@dataclass(frozen=True)
class DiagnosticsRow:
    """Conserved quantities and errors of one snapshot.

    ``i1``/``i2``/``i3`` are relative changes against the t = 0 snapshot,
    ``error`` the relative L^2 error against the exact solution (None when
    no exact solution is available) and ``mean_iterations`` the average
    fixed-point iteration count over all steps completed by time t.
    """

    t: float
    q1: float
    q2: float
    q3: float
    i1: float
    i2: float
    i3: float
    error: float | None
    mean_iterations: float


@dataclass(frozen=True)
class TwoSolitonParams:
    """Speeds and phase offsets; the closed form needs c1 != c2."""

    c1: float
    c2: float
    d1: float
    d2: float

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError(f"speeds must be positive, got {self.c1}, {self.c2}")
        if self.c1 == self.c2:
            raise ValueError("two-soliton speeds must differ")


def two_soliton(x, t: float, params: TwoSolitonParams):
    """Exact two-soliton profile; the faster wave overtakes the slower one.

    The interaction constant in the numerator is (c1+c2)^3 / (c1 c2 (c1-c2)^2);
    with this choice the profile solves the equation exactly (checked against
    independent time integration) and splits into two algebraic solitons
    without phase shift as |t| grows.
    """
    x = np.asarray(x, dtype=float)
    c1, c2 = params.c1, params.c2
    l1 = x - c1 * t - params.d1
    l2 = x - c2 * t - params.d2
    cross = (c1 + c2) ** 2 / (c1 - c2) ** 2
    num = 4.0 * c1 * c2 * (c1 * l1**2 + c2 * l2**2 + cross * (c1 + c2) / (c1 * c2))
    den = (c1 * c2 * l1 * l2 - cross) ** 2 + (c1 * l1 + c2 * l2) ** 2
    out = num / den
    return out if out.ndim else float(out)


def single_soliton(x, t: float, c: float):
    """Algebraic soliton 4c / (1 + c^2 (x - c t)^2), c > 0."""
    if c <= 0:
        raise ValueError(f"soliton speed must be positive, got {c}")
    x = np.asarray(x, dtype=float)
    out = 4.0 * c / (1.0 + c**2 * (x - c * t) ** 2)
    return out if out.ndim else float(out)


def _oversampled_grid(mesh: UniformMesh, oversample: int = 1):
    """Power-of-two periodic sample points, at least 4N of them."""
    n = 1 << int(np.ceil(np.log2(max(4 * mesh.num_elements, 16) * oversample)))
    xs = -mesh.half_width + (2.0 * mesh.half_width / n) * np.arange(n)
    return xs, 2.0 * mesh.half_width


def conserved(mesh: UniformMesh, coeffs, oversample: int = 1):
    """(Q1, Q2, Q3) of the FEM function.

    Q1 and Q2 use the elementwise Gauss-Legendre rule (exact for the cubic
    space); the Hilbert term of Q3 is evaluated spectrally on an oversampled
    periodic grid and integrated by the trapezoid rule there.
    """
    c = _check_coeffs(mesh, coeffs)
    tab = assembly.ElementTables(mesh)
    vals = tab.fem_values(c)
    q1 = float(np.sum(vals * tab.wq[None, :]))
    q2 = float(np.sum(0.5 * vals**2 * tab.wq[None, :]))
    xs, period = _oversampled_grid(mesh, oversample)
    u = eval_fem(mesh, c, xs)
    ux = eval_fem_deriv(mesh, c, xs)
    hux = fft_hilbert(spectral_grid(ux, period))
    h = period / xs.size
    q3 = float(np.sum(u**3 / 3.0 - u * hux) * h)
    return q1, q2, q3


def relative_error(mesh: UniformMesh, coeffs, exact, finest_dx: float) -> float:
    """E = ||u_fem - exact|| / ||exact||, trapezoid on the finest-grid points."""
    c = _check_coeffs(mesh, coeffs)
    span = 2.0 * mesh.half_width
    n = round(span / finest_dx)
    if n < 1 or abs(n * finest_dx - span) > 1e-9 * span:
        raise ValueError(f"finest_dx = {finest_dx} does not evenly divide [{-mesh.half_width}, {mesh.half_width}]")
    xs = -mesh.half_width + finest_dx * np.arange(n + 1)
    diff = eval_fem(mesh, c, xs) - np.asarray(exact(xs), dtype=float)
    ref = np.asarray(exact(xs), dtype=float)
    norm_ref = np.sqrt(np.trapezoid(ref**2, dx=finest_dx))
    if norm_ref == 0.0:
        raise ValueError("exact solution has zero L^2 norm on the grid")
    return float(np.sqrt(np.trapezoid(diff**2, dx=finest_dx)) / norm_ref)


def conv_rate(e1: float, n1: int, e2: float, n2: int) -> float:
    """Observed convergence rate (ln e1 - ln e2) / (ln n2 - ln n1)."""
    if min(e1, e2) <= 0 or min(n1, n2) <= 0:
        raise ValueError("errors and element counts must be positive")
    if n1 == n2:
        raise ValueError("element counts must differ")
    return float((np.log(e1) - np.log(e2)) / (np.log(n2) - np.log(n1)))


def weighted_norm(mesh: UniformMesh, weight, coeffs, mass: np.ndarray | None = None) -> float:
    """sqrt(u^T M_phi u); pass a cached mass matrix to skip reassembly."""
    c = _check_coeffs(mesh, coeffs)
    if mass is None:
        mass = assembly.weighted_mass(mesh, weight)
    return float(np.sqrt(abs(c @ (mass @ c))))


def local_smoothing_sum(traj: Trajectory, window: float, oversample: int = 1) -> float:
    """dt-weighted sum of ||D^{1/2} u^{n+1/2}||^2 over |x| <= window.

    Half states are sampled on the oversampled periodic grid, the half
    derivative is applied spectrally, and the restricted square integral is
    accumulated by the trapezoid rule.
    """
    mesh = traj.mesh
    if not 0 < window < mesh.half_width:
        raise ValueError(f"window must lie in (0, {mesh.half_width}), got {window}")
    xs, period = _oversampled_grid(mesh, oversample)
    inside = np.abs(xs) <= window
    h = period / xs.size
    total = 0.0
    for half in traj.half_states:
        samples = eval_fem(mesh, half, xs)
        rooted = frac_deriv(spectral_grid(samples, period), 0.5)
        total += np.trapezoid(rooted[inside] ** 2, dx=h)
    return float(traj.dt * total)
