"""Galerkin assembly of the weighted bilinear forms.

All inner products use a per-element Gauss-Legendre rule (8 points unless
overridden).  The dispersion matrix couples every pair of degrees of freedom
because the Hilbert transform is nonlocal, so matrices are stored dense; at
the problem sizes of interest (2N <= 8192) this is cheap and keeps a single
storage scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ConfigurationError
from .hilbert import HermiteHilbertTables
from .mesh import (
    UniformMesh,
    _check_coeffs,
    deriv_f,
    deriv_g,
    eval_f,
    eval_g,
    gauss_legendre,
)


@dataclass(frozen=True)
class WeightFn:
    """Weight phi and its derivative; phi must stay >= 1 on the domain."""

    phi: Callable
    phi_x: Callable
    kind: str
    offset: float | None = None


def unit_weight() -> WeightFn:
    return WeightFn(
        phi=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        phi_x=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kind="unit",
    )


def affine_weight(offset: float) -> WeightFn:
    """phi(x) = offset + x, phi_x = 1."""
    return WeightFn(
        phi=lambda x, a=float(offset): a + np.asarray(x, dtype=float),
        phi_x=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        kind="affine",
        offset=float(offset),
    )


def check_weight(mesh: UniformMesh, weight: WeightFn) -> None:
    """Reject weights that drop below 1 somewhere on [-X, X]."""
    if weight.kind == "affine" and weight.offset - mesh.half_width < 1.0:
        raise ConfigurationError(
            f"affine weight offset {weight.offset} gives phi(-X) = "
            f"{weight.offset - mesh.half_width} < 1 on half-width {mesh.half_width}"
        )


class ElementTables:
    """Per-element quadrature data shared by the assembly routines.

    ``points`` are the physical quadrature points (element-major), ``wq``
    the matching integration weights, ``gdof`` the 4 global DOFs of each
    element and ``val``/``dval`` the local basis (and derivative) values at
    the local coordinates ``taus``.
    """

    def __init__(self, mesh: UniformMesh, n_points: int = 8):
        rule = gauss_legendre(n_points)
        n, dx = mesh.num_elements, mesh.dx
        self.mesh = mesh
        self.n_points = n_points
        self.taus = 0.5 * (rule.nodes + 1.0)
        self.wq = 0.5 * dx * rule.weights
        self.points = mesh.nodes[:n, None] + dx * self.taus[None, :]
        left = np.arange(n)
        right = (left + 1) % n
        self.gdof = np.column_stack([2 * left, 2 * left + 1, 2 * right, 2 * right + 1])
        t = self.taus
        self.val = np.vstack([eval_f(t), eval_g(t), eval_f(t - 1.0), eval_g(t - 1.0)])
        self.dval = (
            np.vstack([deriv_f(t), deriv_g(t), deriv_f(t - 1.0), deriv_g(t - 1.0)]) / dx
        )

    def test_factors(self, weight: WeightFn) -> np.ndarray:
        """(phi v_i)_x = phi_x v_i + phi (v_i)_x at the quadrature points."""
        phi = weight.phi(self.points)
        phi_x = weight.phi_x(self.points)
        return phi_x[:, None, :] * self.val[None, :, :] + phi[:, None, :] * self.dval[None, :, :]

    def fem_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate the FEM function at every quadrature point, shape (N, q)."""
        return np.einsum("ka,aq->kq", coeffs[self.gdof], self.val)

    def test_operator(self, weight: WeightFn) -> scipy.sparse.csr_matrix:
        """Sparse map from point samples to integrals against (phi v_i)_x."""
        n, q = self.mesh.num_elements, self.taus.size
        tf = self.test_factors(weight) * self.wq[None, None, :]
        rows = np.repeat(self.gdof, q).ravel()
        cols = np.tile(
            (np.arange(n) * q)[:, None, None] + np.arange(q)[None, None, :], (1, 4, 1)
        ).ravel()
        mat = scipy.sparse.coo_matrix(
            (tf.ravel(), (rows, cols)), shape=(self.mesh.ndof, n * q)
        )
        return mat.tocsr()


def weighted_mass(mesh: UniformMesh, weight: WeightFn, n_points: int = 8) -> np.ndarray:
    """M_ij = <v_j, phi v_i>, symmetric positive definite for phi >= 1."""
    tab = ElementTables(mesh, n_points)
    phi = weight.phi(tab.points)
    local = np.einsum("kq,aq,bq->kab", tab.wq[None, :] * phi, tab.val, tab.val)
    mat = np.zeros((mesh.ndof, mesh.ndof))
    np.add.at(mat, (tab.gdof[:, :, None], tab.gdof[:, None, :]), local)
    return mat


def dispersion_matrix(
    mesh: UniformMesh,
    weight: WeightFn,
    n_points: int = 8,
    pv_points: int = 7,
    h_values: np.ndarray | None = None,
    block: int = 256,
) -> np.ndarray:
    """B_ij = <H[(v_j)_x], (phi v_i)_x>.

    The outer integral is elementwise Gauss-Legendre over the support of the
    test function; the trial-side transform comes from the subtracted
    principal-value quadrature unless precomputed samples are supplied via
    ``h_values`` (rows = outer points element-major, columns = DOFs), which
    is how the FFT-based oracle build replaces the singular quadrature.
    """
    tab = ElementTables(mesh, n_points)
    test_op = tab.test_operator(weight)
    n = mesh.num_elements
    if h_values is not None:
        if h_values.shape != (n * n_points, mesh.ndof):
            raise ConfigurationError(
                f"h_values must have shape {(n * n_points, mesh.ndof)}, got {h_values.shape}"
            )
        return test_op @ h_values
    tables = HermiteHilbertTables(mesh, tab.taus, pv_points)
    out = np.empty((mesh.ndof, mesh.ndof))
    for start in range(0, n, block):
        nodes = np.arange(start, min(start + block, n))
        out[:, 2 * nodes[0] : 2 * nodes[-1] + 2] = test_op @ tables.h_block(nodes)
    return out


def nonlinear_vector(
    mesh: UniformMesh, weight: WeightFn, coeffs, n_points: int = 8
) -> np.ndarray:
    """n_i(a) = <a^2 / 2, (phi v_i)_x> for a FEM function a."""
    c = _check_coeffs(mesh, coeffs)
    tab = ElementTables(mesh, n_points)
    return quadratic_load(tab, tab.test_factors(weight), c)


def quadratic_load(tab: ElementTables, test_factors: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Assembly core for the nonlinear term, reusable with cached tables."""
    integrand = 0.5 * tab.fem_values(coeffs) ** 2 * tab.wq[None, :]
    local = np.einsum("kq,kaq->ka", integrand, test_factors)
    vec = np.zeros(tab.mesh.ndof)
    np.add.at(vec, tab.gdof, local)
    return vec


def l2_project(mesh: UniformMesh, fn, n_points: int = 8) -> np.ndarray:
    """Coefficients of the L^2-orthogonal projection of ``fn`` onto the space."""
    tab = ElementTables(mesh, n_points)
    samples = np.asarray(fn(tab.points), dtype=float)
    local = np.einsum("kq,aq->ka", samples * tab.wq[None, :], tab.val)
    rhs = np.zeros(mesh.ndof)
    np.add.at(rhs, tab.gdof, local)
    mass = weighted_mass(mesh, unit_weight(), n_points)
    try:
        return scipy.linalg.solve(mass, rhs, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - valid meshes are SPD
        raise RuntimeError("unit mass matrix is numerically singular") from exc
