"""Hilbert transform machinery.

Two independent realizations live here:

* ``pv_hilbert_dbasis`` evaluates H[(v_j)_x](x) for a single Hermite basis
  function by direct quadrature of the principal-value integral.  The
  integration range is exactly the support of v_j inside the truncated
  domain (contributions from outside are dropped, matching the truncation
  policy of the scheme).  On the support piece containing x the integrand is
  regularized by subtracting (v_j)_x(x), leaving a smooth part handled by
  per-panel Gauss-Legendre and a logarithmic term integrated in closed form.

* ``fft_hilbert`` / ``frac_deriv`` apply periodic Fourier multipliers
  (-i sign(k), |k|^beta) to sampled data.  These serve as oracles and
  diagnostics; they are never used inside the time stepper.

Because the mesh is uniform, H[(v_j)_x](x) = T((x - x_j)/dx) / dx for a
reference profile T that depends only on the shape (value or slope) and on
whether the support wraps through the identified boundary nodes.
``HermiteHilbertTables`` tabulates the reference profiles at the offsets
needed by matrix assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .mesh import UniformMesh, gauss_legendre

# Piecewise-quadratic coefficients (c0, c1, c2) of the shape-function
# derivatives f'(s) and g'(s) on [-1, 0] and [0, 1].
_F_PIECES = ((-1.0, 0.0, (0.0, -6.0, -6.0)), (0.0, 1.0, (0.0, -6.0, 6.0)))
_G_PIECES = ((-1.0, 0.0, (1.0, 4.0, 3.0)), (0.0, 1.0, (1.0, -4.0, 3.0)))


def _poly(c, s):
    return c[0] + s * (c[1] + s * c[2])


def _profile_value(pieces, xi):
    for a, b, c in pieces:
        if a <= xi <= b:
            return _poly(c, xi)
    return 0.0


# Panels closer to the evaluation point than this (in panel widths) use the
# subtracted form; plain quadrature of w(s)/(xi - s) loses accuracy to the
# nearby pole and its error is coherent enough to destabilize long runs.
_NEAR_PANEL_DIST = 1.0


def _pv_profile(pieces, xi, rule) -> float:
    """p.v. integral of w(s)/(xi - s) over a contiguous run of pieces.

    When xi lies strictly inside the run, w(xi) is subtracted on every
    panel (the panel containing xi is split there) and the singular part
    contributes w(xi) * log((xi - A)/(B - xi)) exactly.  Panels whose
    distance to an exterior xi is below one panel width get the same
    subtraction with the exact log term; only well-separated panels use
    plain Gauss-Legendre.
    """
    lo, hi = pieces[0][0], pieces[-1][1]
    total = 0.0
    if lo < xi < hi:
        wxi = _profile_value(pieces, xi)
        for a, b, c in pieces:
            panels = ((a, xi), (xi, b)) if a < xi < b else ((a, b),)
            for pa, pb in panels:
                if pb - pa <= 0.0:
                    continue
                mid, half = 0.5 * (pa + pb), 0.5 * (pb - pa)
                s = mid + half * rule.nodes
                total += half * np.sum(
                    rule.weights * (_poly(c, s) - wxi) / (xi - s)
                )
        total += wxi * np.log((xi - lo) / (hi - xi))
    else:
        for a, b, c in pieces:
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            s = mid + half * rule.nodes
            if min(abs(xi - a), abs(xi - b)) < _NEAR_PANEL_DIST:
                wxi = _poly(c, xi)
                total += half * np.sum(rule.weights * (_poly(c, s) - wxi) / (xi - s))
                total += wxi * np.log(abs((xi - a) / (xi - b)))
            else:
                total += half * np.sum(rule.weights * _poly(c, s) / (xi - s))
    return float(total)


def _pv_profile_exterior(pieces, xi, rule) -> np.ndarray:
    """Vectorized variant of the exterior branch of ``_pv_profile``."""
    xi = np.asarray(xi, dtype=float)
    total = np.zeros_like(xi)
    for a, b, c in pieces:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        s = mid + half * rule.nodes
        near = np.minimum(np.abs(xi - a), np.abs(xi - b)) < _NEAR_PANEL_DIST
        plain = half * ((rule.weights * _poly(c, s)) / (xi[..., None] - s)).sum(-1)
        wxi = _poly(c, xi)
        subtracted = half * (
            (rule.weights * (_poly(c, s) - wxi[..., None])) / (xi[..., None] - s)
        ).sum(-1) + wxi * np.log(np.abs((xi - a) / (xi - b)))
        total += np.where(near, subtracted, plain)
    return total


def pv_hilbert_dbasis(mesh: UniformMesh, basis_index: int, x, pv_points: int = 7):
    """H[(v_j)_x](x) for basis DOF j, by subtracted Gauss-Legendre quadrature.

    The basis of node 0 is supported on [-X, -X + dx] and [X - dx, X]; each
    physical piece is integrated separately with the true 1/(x - s) kernel.
    Accepts scalar or array x.
    """
    if not 0 <= basis_index < mesh.ndof:
        raise ConfigurationError(f"basis_index out of range: {basis_index}")
    node, kind = divmod(basis_index, 2)
    pieces = _F_PIECES if kind == 0 else _G_PIECES
    rule = gauss_legendre(pv_points)
    dx = mesh.dx

    def _eval(xs: float) -> float:
        if node != 0:
            xi = (xs - mesh.nodes[node]) / dx
            val = _pv_profile(pieces, xi, rule)
        else:
            val = _pv_profile(pieces[1:], (xs + mesh.half_width) / dx, rule)
            val += _pv_profile(pieces[:1], (xs - mesh.half_width) / dx, rule)
        return val / (np.pi * dx)

    if np.ndim(x) == 0:
        return _eval(float(x))
    return np.array([_eval(float(v)) for v in np.asarray(x, dtype=float).ravel()]).reshape(
        np.shape(x)
    )


class HermiteHilbertTables:
    """Reference Hilbert profiles tabulated at the assembly offsets.

    For outer quadrature points x = x_k + dx * tau the needed arguments are
    xi = (k - a) + tau.  ``full`` tables cover interior nodes (support
    [-1, 1]); ``right``/``left`` tables cover the two physical pieces of the
    wrapped node-0 basis.  Entries already include the 1/pi factor, so
    H-values are table / dx.
    """

    def __init__(self, mesh: UniformMesh, taus, pv_points: int = 7):
        self.mesh = mesh
        taus = np.asarray(taus, dtype=float)
        if np.any(taus <= 0.0) or np.any(taus >= 1.0):
            raise ConfigurationError("outer quadrature offsets must lie in (0, 1)")
        self.taus = taus
        rule = gauss_legendre(pv_points)
        n = mesh.num_elements
        self.offsets = np.arange(-(n - 1), n)

        def build(pieces, offs):
            xi = offs[:, None] + taus[None, :]
            lo, hi = pieces[0][0], pieces[-1][1]
            flat = xi.ravel()
            out = np.empty_like(flat)
            inside = (flat > lo) & (flat < hi)
            out[~inside] = _pv_profile_exterior(pieces, flat[~inside], rule)
            for idx in np.nonzero(inside)[0]:
                out[idx] = _pv_profile(pieces, flat[idx], rule)
            return (out / np.pi).reshape(xi.shape)

        self.f_full = build(_F_PIECES, self.offsets)
        self.g_full = build(_G_PIECES, self.offsets)
        k = np.arange(n)
        self.f_right = build(_F_PIECES[1:], k)
        self.g_right = build(_G_PIECES[1:], k)
        self.f_left = build(_F_PIECES[:1], k - n)
        self.g_left = build(_G_PIECES[:1], k - n)

    def h_block(self, node_indices) -> np.ndarray:
        """H-values (points x interleaved f/g columns) for the given nodes.

        Rows run over all outer points, ordered element-major then
        quadrature-point; columns pair up as (value DOF, slope DOF) per node.
        """
        n, q = self.mesh.num_elements, self.taus.size
        nodes = np.asarray(node_indices, dtype=int)
        k_point = np.repeat(np.arange(n), q)
        q_point = np.tile(np.arange(q), n)
        row_f = self.f_full[(k_point[:, None] - nodes[None, :]) + (n - 1), q_point[:, None]]
        row_g = self.g_full[(k_point[:, None] - nodes[None, :]) + (n - 1), q_point[:, None]]
        wrapped = np.nonzero(nodes == 0)[0]
        for w in wrapped:
            row_f[:, w] = self.f_right[k_point, q_point] + self.f_left[k_point, q_point]
            row_g[:, w] = self.g_right[k_point, q_point] + self.g_left[k_point, q_point]
        block = np.empty((n * q, 2 * nodes.size))
        block[:, 0::2] = row_f
        block[:, 1::2] = row_g
        return block / self.mesh.dx


@dataclass(frozen=True)
class SpectralGrid:
    """Equispaced periodic samples; length must be a power of two."""

    samples: np.ndarray
    period: float

    @property
    def num_points(self) -> int:
        return self.samples.shape[0]


def spectral_grid(samples, period: float) -> SpectralGrid:
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if samples.ndim != 1 or n < 2 or n & (n - 1) != 0:
        raise ConfigurationError(
            f"sample count must be a power of two >= 2, got {samples.shape}"
        )
    if period <= 0:
        raise ConfigurationError(f"period must be positive, got {period}")
    return SpectralGrid(samples, float(period))


def _wavenumbers(grid: SpectralGrid) -> np.ndarray:
    n = grid.num_points
    return 2.0 * np.pi * np.fft.fftfreq(n, d=grid.period / n)


def fft_hilbert(grid: SpectralGrid) -> np.ndarray:
    """Periodic Hilbert transform via the multiplier -i sign(k).

    The mean mode maps to zero; the Nyquist mode (even lengths) is zeroed to
    keep the output real and the multiplier odd.
    """
    n = grid.num_points
    spec = np.fft.fft(grid.samples)
    mult = -1j * np.sign(_wavenumbers(grid))
    mult[n // 2] = 0.0
    return np.fft.ifft(mult * spec).real


def frac_deriv(grid: SpectralGrid, beta: float) -> np.ndarray:
    """Homogeneous fractional derivative: multiplier |k|^beta, beta >= 0."""
    if beta < 0:
        raise ConfigurationError(f"beta must be nonnegative, got {beta}")
    spec = np.fft.fft(grid.samples)
    mult = np.abs(_wavenumbers(grid)) ** beta
    return np.fft.ifft(mult * spec).real


def spectral_derivative(grid: SpectralGrid) -> np.ndarray:
    """Periodic spectral derivative (multiplier i k)."""
    spec = np.fft.fft(grid.samples)
    return np.fft.ifft(1j * _wavenumbers(grid) * spec).real
