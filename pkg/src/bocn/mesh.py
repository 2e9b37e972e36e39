"""Uniform periodic mesh and the C^1 cubic Hermite finite element space.

The two scalar shape functions on the reference interval are

    f(y) = 1 + y^2 (2|y| - 3),    g(y) = y (1 - |y|)^2     for |y| <= 1,

both zero outside.  Node j carries one value degree of freedom with basis
f((x - x_j)/dx) and one slope degree of freedom with basis g((x - x_j)/dx),
so a slope coefficient equals dx * u'(x_j) for an interpolant.  The nodes at
-X and +X are identified (value and slope alike), which closes the periodic
domain and leaves exactly 2N degrees of freedom on N elements.

Coefficient vectors use the interleaved layout
``coeffs[2*a]`` = value DOF and ``coeffs[2*a + 1]`` = slope DOF of node a,
for a = 0 .. N-1 with node 0 sitting at x = -X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class UniformMesh:
    """Equispaced nodes on [-X, X] with the endpoints identified."""

    half_width: float
    num_elements: int
    dx: float
    nodes: np.ndarray

    @property
    def ndof(self) -> int:
        return 2 * self.num_elements


def make_mesh(half_width: float, num_elements: int) -> UniformMesh:
    """Build a uniform mesh of ``num_elements`` (even, >= 2) on [-X, X]."""
    if half_width <= 0:
        raise ConfigurationError(f"half_width must be positive, got {half_width}")
    if num_elements % 2 != 0 or num_elements < 2:
        raise ConfigurationError(
            f"num_elements must be even and >= 2, got {num_elements}"
        )
    dx = 2.0 * half_width / num_elements
    nodes = -half_width + dx * np.arange(num_elements + 1)
    return UniformMesh(float(half_width), int(num_elements), float(dx), nodes)


def eval_f(y):
    """Value shape function: f(0) = 1, f(+-1) = 0, f'(0) = f'(+-1) = 0."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, 1.0 + y * y * (2.0 * a - 3.0), 0.0)
    return out if out.ndim else float(out)


def eval_g(y):
    """Slope shape function: g(0) = 0, g'(0) = 1, g(+-1) = g'(+-1) = 0."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, y * (1.0 - a) ** 2, 0.0)
    return out if out.ndim else float(out)


def deriv_f(y):
    """df/dy = 6 y (|y| - 1) inside the support."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, 6.0 * y * (a - 1.0), 0.0)
    return out if out.ndim else float(out)


def deriv_g(y):
    """dg/dy = (1 - |y|)(1 - 3|y|) inside the support."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    out = np.where(a <= 1.0, (1.0 - a) * (1.0 - 3.0 * a), 0.0)
    return out if out.ndim else float(out)


def _locate(mesh: UniformMesh, x):
    """Map positions to (element index, local coordinate in [0, 1])."""
    x = np.asarray(x, dtype=float)
    period = 2.0 * mesh.half_width
    s = np.mod(x + mesh.half_width, period)
    k = np.floor(s / mesh.dx).astype(int)
    k = np.clip(k, 0, mesh.num_elements - 1)
    y = s / mesh.dx - k
    return k, y


def _check_coeffs(mesh: UniformMesh, coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (mesh.ndof,):
        raise ConfigurationError(
            f"coefficient vector must have length {mesh.ndof}, got shape {c.shape}"
        )
    return c


def eval_fem(mesh: UniformMesh, coeffs, x):
    """Evaluate the FEM function at x (scalar or array), wrapping periodically."""
    c = _check_coeffs(mesh, coeffs)
    k, y = _locate(mesh, x)
    right = (k + 1) % mesh.num_elements
    out = (
        c[2 * k] * eval_f(y)
        + c[2 * k + 1] * eval_g(y)
        + c[2 * right] * eval_f(y - 1.0)
        + c[2 * right + 1] * eval_g(y - 1.0)
    )
    return out if np.ndim(out) else float(out)


def eval_fem_deriv(mesh: UniformMesh, coeffs, x):
    """Evaluate the spatial derivative of the FEM function at x."""
    c = _check_coeffs(mesh, coeffs)
    k, y = _locate(mesh, x)
    right = (k + 1) % mesh.num_elements
    out = (
        c[2 * k] * deriv_f(y)
        + c[2 * k + 1] * deriv_g(y)
        + c[2 * right] * deriv_f(y - 1.0)
        + c[2 * right + 1] * deriv_g(y - 1.0)
    ) / mesh.dx
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray


_MAX_GL_POINTS = 16


def gauss_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre rule with n points, computed by Newton iteration.

    Supports 1 <= n <= 16; nodes are ascending and weights sum to 2.
    """
    if not 1 <= n <= _MAX_GL_POINTS:
        raise ConfigurationError(f"Gauss-Legendre rule needs 1 <= n <= 16, got {n}")
    i = np.arange(n)
    x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
    for _ in range(100):
        p_prev, p = np.zeros_like(x), np.ones_like(x)
        for k in range(n):
            p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    p_prev, p = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule(x[order], w[order])
