"""
Neumann Poisson Solver
======================

Red-black successive over-relaxation for Δu = ρ on a box with homogeneous
Neumann data.

Discretization:
- 5-point (7-point in 3-D) Laplacian with mirrored ghost nodes, u[-1] = u[1]
- the trapezoid weights are the left null vector of this operator, so ρ is
  made compatible by removing its trapezoid mean
- the returned potential has zero trapezoid mean
"""

import logging
import math
from typing import List, Optional

import numpy as np

from config import get_config
from errors import PoissonConvergenceError
from fields.field import ScalarField
from fields.grid import Box, Grid
from fields.operators import trapezoid_weights

logger = logging.getLogger(__name__)

CHECK_EVERY = 10


def neumann_laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Mirror-Neumann discrete Laplacian of a node array."""
    padded = np.pad(u, 1, mode='reflect')
    out = np.zeros_like(u)
    core = tuple(slice(1, -1) for _ in range(grid.n_dim))
    for axis, h in enumerate(grid.spacing):
        ahead = list(core)
        behind = list(core)
        ahead[axis] = slice(2, None)
        behind[axis] = slice(None, -2)
        out += (padded[tuple(ahead)] + padded[tuple(behind)] - 2.0 * u) / (h * h)
    return out


def optimal_omega(grid: Grid) -> float:
    """SOR factor 2 / (1 + sqrt(1 − μ²)), μ the largest non-unit Jacobi eigenvalue."""
    weights = [1.0 / (h * h) for h in grid.spacing]
    total = sum(weights)
    mu = max((total - w * (1.0 - math.cos(math.pi / (n - 1)))) / total
             for w, n in zip(weights, grid.shape))
    return 2.0 / (1.0 + math.sqrt(max(0.0, 1.0 - mu * mu)))


def _colour_masks(grid: Grid):
    parity = sum(np.indices(grid.shape)) % 2
    return parity == 0, parity == 1


def solve_neumann_poisson(rho: ScalarField, box: Optional[Box] = None,
                          tol: Optional[float] = None,
                          max_sweeps: Optional[int] = None,
                          initial: Optional[np.ndarray] = None) -> ScalarField:
    """
    Solve Δu = ρ with ∂u/∂n = 0 and zero mean.

    Args:
        rho: Source; its trapezoid mean is subtracted first
        box: Optional node-aligned sub-box to solve on (result lives on that subgrid)
        tol: Max-norm residual target relative to max(1, ‖ρ‖∞) (default poisson_tol)
        max_sweeps: Sweep limit (default poisson_max_sweeps)
        initial: Optional starting potential on the solve grid

    Returns:
        Potential u on the solve grid

    Raises:
        PoissonConvergenceError: If the residual target is not met; carries the residual trace
    """
    cfg = get_config()
    tol = cfg.poisson_tol if tol is None else tol
    max_sweeps = cfg.poisson_max_sweeps if max_sweeps is None else max_sweeps

    if box is not None:
        rho = rho.restrict(box)
    grid = rho.grid

    weights = trapezoid_weights(grid)
    measure = float(weights.sum())
    source = rho.values - float(np.sum(weights * rho.values)) / measure
    scale = max(1.0, float(np.max(np.abs(source))))
    target = tol * scale

    u = np.zeros(grid.shape) if initial is None else np.array(initial, dtype=float)
    if not np.any(source):
        return ScalarField(grid, np.zeros(grid.shape))

    omega = optimal_omega(grid)
    inv_h2 = [1.0 / (h * h) for h in grid.spacing]
    diag = 2.0 * sum(inv_h2)
    colours = _colour_masks(grid)
    core = tuple(slice(1, -1) for _ in range(grid.n_dim))
    history: List[float] = []

    for sweep in range(1, max_sweeps + 1):
        for colour in colours:
            padded = np.pad(u, 1, mode='reflect')
            neighbours = np.zeros(grid.shape)
            for axis, w in enumerate(inv_h2):
                ahead = list(core)
                behind = list(core)
                ahead[axis] = slice(2, None)
                behind[axis] = slice(None, -2)
                neighbours += w * (padded[tuple(ahead)] + padded[tuple(behind)])
            gauss_seidel = (neighbours - source) / diag
            u[colour] += omega * (gauss_seidel[colour] - u[colour])

        if sweep % CHECK_EVERY == 0 or sweep == max_sweeps:
            residual = float(np.max(np.abs(neumann_laplacian(grid, u) - source)))
            history.append(residual)
            if not math.isfinite(residual):
                raise PoissonConvergenceError("Neumann Poisson solve diverged", history)
            if residual <= target:
                logger.debug(f"Poisson converged after {sweep} sweeps (residual {residual:.3e})")
                break
    else:
        raise PoissonConvergenceError(
            f"Neumann Poisson solve did not reach {target:.3e} in {max_sweeps} sweeps", history)

    u -= float(np.sum(weights * u)) / measure
    return ScalarField(grid, u)
