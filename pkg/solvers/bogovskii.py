"""
Bogovskii Oracle
================

Direct quadrature of the Bogovskii integral

    w(x) = ∫ ρ(y) (x − y) ∫₁^∞ θ(y + s(x − y)) s^{n−1} ds dy

for a unit-mass bump θ supported in the inner box. The result vanishes
outside the convex hull of supp ρ and supp θ. Cost grows like N^{2n}, so this
is a slow independent check for small grids only.
"""

import logging
from typing import Optional

import numpy as np

from errors import PreconditionError
from fields.field import ScalarField, VectorField, sample_array
from fields.grid import Box, Grid
from fields.operators import integrate
from geometry.cutoff import make_cutoff
from solvers.divergence import DivProblem

logger = logging.getLogger(__name__)

MAX_NODES = 33
QUADRATURE_POINTS = 24
REFINE = 4
CHUNK = 16


def default_kernel_density(grid: Grid, inner_box: Box) -> ScalarField:
    """Normalized cutoff bump inside the inner box."""
    plateau = inner_box.inset(inner_box.inradius / 2.0)
    bump = make_cutoff(plateau, inner_box, grid)
    return ScalarField(grid, bump.values / integrate(bump))


def _ray_exit(y: np.ndarray, d: np.ndarray, box: Box) -> np.ndarray:
    """Largest s with y + s·d still in the box (y inside), per pair."""
    lower = np.asarray(box.lower)
    upper = np.asarray(box.upper)
    with np.errstate(divide='ignore', invalid='ignore'):
        to_upper = np.where(d > 0, (upper - y) / d, np.inf)
        to_lower = np.where(d < 0, (lower - y) / d, np.inf)
    return np.min(np.minimum(to_upper, to_lower), axis=-1)


def bogovskii_oracle(problem: DivProblem, kernel_density: Optional[ScalarField] = None,
                     quadrature_points: int = QUADRATURE_POINTS,
                     refine: int = REFINE) -> VectorField:
    """
    Evaluate the Bogovskii solution of div w = ρ at every grid node.

    Args:
        problem: Zero-mean source with its boxes
        kernel_density: Unit-mass bump θ supported in problem.inner_box
            (default: normalized cutoff bump)
        quadrature_points: Gauss-Legendre points along each ray
        refine: Sub-cells per grid cell for the y-quadrature; ρ is read between
            nodes with the C¹ cubic rule

    Returns:
        VectorField on the source's grid

    Raises:
        PreconditionError: For grids above MAX_NODES per axis
    """
    rho = problem.rho
    grid = rho.grid
    if max(grid.shape) > MAX_NODES:
        raise PreconditionError(f"Bogovskii oracle is limited to {MAX_NODES} nodes per axis, got {grid.shape}")
    if kernel_density is None:
        kernel_density = default_kernel_density(grid, problem.inner_box)

    inner = problem.inner_box
    n = grid.n_dim
    if not rho.max_abs():
        return VectorField.zeros(grid)

    # Midpoint lattice over the inner box for the y-integral.
    sub_axes = []
    for axis in range(n):
        cells = max(1, int(round((inner.upper[axis] - inner.lower[axis]) / grid.spacing[axis]))) * refine
        width = (inner.upper[axis] - inner.lower[axis]) / cells
        sub_axes.append((inner.lower[axis] + (np.arange(cells) + 0.5) * width, width))
    ys = np.stack(np.meshgrid(*[a for a, _ in sub_axes], indexing='ij'), axis=-1).reshape(-1, n)
    cell = float(np.prod([w for _, w in sub_axes]))
    rho_y = sample_array(grid, rho.values, ys, order=3) * cell
    keep = rho_y != 0.0
    ys, rho_y = ys[keep], rho_y[keep]

    nodes = grid.node_coordinates()
    targets = grid.node_mask(inner, closed=False)
    xs = nodes[targets]

    xi, wi = np.polynomial.legendre.leggauss(quadrature_points)
    out = np.zeros((xs.shape[0], n))
    logger.info(f"Bogovskii oracle: {xs.shape[0]} targets x {ys.shape[0]} sources x {quadrature_points} points")

    for start in range(0, xs.shape[0], CHUNK):
        x = xs[start:start + CHUNK]
        d = x[:, None, :] - ys[None, :, :]
        s_max = _ray_exit(np.broadcast_to(ys[None, :, :], d.shape), d, inner)
        span = np.where(np.isfinite(s_max), np.maximum(s_max - 1.0, 0.0), 0.0)
        s = 1.0 + span[..., None] * (xi + 1.0) / 2.0
        weights = span[..., None] * wi / 2.0
        points = ys[None, :, None, :] + s[..., None] * d[:, :, None, :]
        theta = sample_array(grid, kernel_density.values, points)
        radial = np.sum(theta * s ** (n - 1) * weights, axis=-1)
        out[start:start + CHUNK] = np.einsum('xy,xyk->xk', radial * rho_y[None, :], d)

    components = []
    for axis in range(n):
        comp = np.zeros(grid.shape)
        comp[targets] = out[:, axis]
        components.append(comp)
    return VectorField(grid, tuple(components))
