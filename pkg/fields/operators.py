"""
Differential Operators and Quadrature
=====================================

Second-order finite differences (central inside, one-sided at the faces) and
trapezoidal quadrature on node-sampled fields.
"""

import logging
from typing import List

import numpy as np
from scipy import integrate as sp_integrate

from fields.field import ScalarField, VectorField, sample_array
from fields.grid import Grid

logger = logging.getLogger(__name__)


def partial(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    """d/dx_axis of a node array."""
    return np.gradient(values, grid.spacing[axis], axis=axis, edge_order=2)


def gradient(field: ScalarField) -> VectorField:
    """Finite-difference gradient; exact for affine fields."""
    grid = field.grid
    return VectorField(grid, tuple(partial(grid, field.values, axis) for axis in range(grid.n_dim)))


def divergence(field: VectorField) -> ScalarField:
    """Sum of per-axis derivatives of the matching components."""
    grid = field.grid
    return ScalarField(grid, divergence_array(grid, field.components))


def divergence_array(grid: Grid, components) -> np.ndarray:
    total = np.zeros(grid.shape)
    for axis, comp in enumerate(components):
        total = total + partial(grid, comp, axis)
    return total


def integrate_array(grid: Grid, values: np.ndarray) -> float:
    """Trapezoidal rule applied axis by axis."""
    result = np.asarray(values, dtype=float)
    for axis in reversed(range(grid.n_dim)):
        result = sp_integrate.trapezoid(result, dx=grid.spacing[axis], axis=axis)
    return float(result)


def integrate(field: ScalarField) -> float:
    """Trapezoidal quadrature over the grid box; exact for multilinear integrands."""
    return integrate_array(field.grid, field.values)


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Node weights of the tensor trapezoid rule (sum equals the box measure)."""
    weights = np.ones(grid.shape)
    for axis, (n, h) in enumerate(zip(grid.shape, grid.spacing)):
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
        shape = [1] * grid.n_dim
        shape[axis] = n
        weights = weights * w.reshape(shape)
    return weights


def displacement_gradient(grid: Grid, components) -> List[List[np.ndarray]]:
    """du_i/dx_j for every component i and axis j."""
    return [[partial(grid, comp, j) for j in range(grid.n_dim)] for comp in components]


def determinant_of_identity_plus(grid: Grid, components) -> np.ndarray:
    """Node-wise det(I + grad u)."""
    du = displacement_gradient(grid, components)
    if grid.n_dim == 2:
        a, b = 1.0 + du[0][0], du[0][1]
        c, d = du[1][0], 1.0 + du[1][1]
        return a * d - b * c
    mat = np.empty(grid.shape + (grid.n_dim, grid.n_dim))
    for i in range(grid.n_dim):
        for j in range(grid.n_dim):
            mat[..., i, j] = du[i][j] + (1.0 if i == j else 0.0)
    return np.linalg.det(mat)


def jacobian_determinant(phi) -> ScalarField:
    """
    det of the finite-difference Jacobian of phi = id + u at every node.

    A map produced by inversion (`phi.inverse_of` set) is evaluated as
    1 / (det grad(forward) at phi(x)) instead of differencing the inverse's
    displacement. Negative values are returned as-is; callers decide.
    """
    grid = phi.grid
    forward = getattr(phi, 'inverse_of', None)
    if forward is not None:
        det_forward = determinant_of_identity_plus(grid, forward.displacement.components)
        images = grid.node_coordinates() + phi.displacement.stacked
        return ScalarField(grid, 1.0 / sample_array(grid, det_forward, images))
    return ScalarField(grid, determinant_of_identity_plus(grid, phi.displacement.components))
