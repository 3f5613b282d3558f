"""
Compactly Supported Divergence Solver
=====================================

Finds w with div w = ρ and w ≡ 0 outside a prescribed box, for a zero-mean ρ
supported inside a smaller inner box.

Sweep 0 takes w₀ = χ∇u, with u the Neumann potential of ρ on the support box
and χ the cutoff between the inner and support boxes. Every later sweep
removes the current residual ρ_k by axis-wise marginal antiderivatives: peel
off the per-line sums of ρ_k along the last axis, replace them by parity
bumps, integrate the difference along the axis, and recurse on the remaining
axes.

The antiderivatives invert the central difference of `divergence` exactly:
values of one index parity are chained to each other, so a line can be
integrated to zero at both ends iff both of its parity sums vanish. Over the
whole box this asks for zero sums on each of the 2ⁿ parity classes of nodes,
which `remove_mean` arranges.
"""

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from config import get_config
from errors import AnnulusCorrectionError, PreconditionError
from fields.field import ScalarField, VectorField
from fields.grid import Box, Grid
from fields.operators import divergence_array, gradient, integrate
from geometry.cutoff import bump_profile, make_cutoff
from solvers.poisson import solve_neumann_poisson

logger = logging.getLogger(__name__)

# The one-sided face stencil of np.gradient reaches two nodes inward.
FACE_CLEARANCE = 2


@dataclass(frozen=True)
class DivProblem:
    """div w = rho with supp w inside support_box and supp rho inside inner_box."""

    rho: ScalarField
    support_box: Box
    inner_box: Box

    def validate(self, mean_tol: Optional[float] = None, threshold: Optional[float] = None):
        """
        Raises:
            PreconditionError: Nonzero mean, support outside inner_box, or boxes not nested
        """
        cfg = get_config()
        mean_tol = cfg.mean_tol if mean_tol is None else mean_tol
        grid = self.rho.grid
        scale = max(1.0, self.rho.max_abs())

        if not grid.box.contains_box(self.support_box):
            raise PreconditionError(f"Support box {self.support_box.as_list()} leaves the grid box")
        if not self.support_box.contains_box(self.inner_box, strict=True):
            raise PreconditionError(
                f"Inner box {self.inner_box.as_list()} is not strictly inside "
                f"support box {self.support_box.as_list()}")

        mean = integrate(self.rho)
        if abs(mean) > mean_tol * grid.box.measure * scale:
            raise PreconditionError(f"Source must have zero mean, got ∫ρ = {mean:.3e}")

        if threshold is None:
            threshold = cfg.support_rel_threshold * self.rho.max_abs()
        loose = (np.abs(self.rho.values) > threshold) & ~grid.node_mask(self.inner_box)
        if loose.any():
            raise PreconditionError(
                f"Source has {int(loose.sum())} nodes outside inner box {self.inner_box.as_list()}")



def parity_classes(shape: Tuple[int, ...]) -> Iterator[Tuple[slice, ...]]:
    """Index slices of the 2ⁿ classes of nodes sharing their index parities."""
    for parities in itertools.product((0, 1), repeat=len(shape)):
        yield tuple(slice(p, None, 2) for p in parities)


def remove_mean(rho: ScalarField, inner_box: Box) -> ScalarField:
    """
    Subtract multiples of a cutoff bump ψ inside inner_box, one per parity class.

    The central-difference divergence of a compactly supported field sums to
    zero over every parity class, so each class sum of ρ is removed; ∫ρ = 0
    follows and supp ρ stays put.
    """
    grid = rho.grid
    plateau = inner_box.inset(inner_box.inradius / 2.0)
    psi = make_cutoff(plateau, inner_box, grid).values
    values = np.array(rho.values)
    for cls in parity_classes(grid.shape):
        weight = float(psi[cls].sum())
        if weight <= 0:
            raise PreconditionError(f"Inner box {inner_box.as_list()} holds no grid mass")
        values[cls] -= (float(values[cls].sum()) / weight) * psi[cls]
    return ScalarField(grid, values)


def parity_antiderivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """
    c with (c[i+1] − c[i−1]) / 2h = values[i] along `axis`, zero on both end nodes.

    Exact when both parity sums of every line vanish; otherwise the defect
    sits on the last two nodes of the line.
    """
    steps = np.moveaxis(2.0 * h * values, axis, 0)
    running = np.empty_like(steps)
    running[0::2] = np.cumsum(steps[0::2], axis=0)
    running[1::2] = np.cumsum(steps[1::2], axis=0)
    out = np.zeros_like(steps)
    out[1:-1] = running[:-2]
    return np.moveaxis(out, 0, axis)


def _parity_bumps(grid: Grid, box: Box, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """Bump over box along axis, split by index parity, each part with unit sum."""
    bump = bump_profile(grid.axes()[axis], box.lower[axis], box.upper[axis])
    shape = [1] * grid.n_dim
    shape[axis] = grid.shape[axis]
    parts = []
    for parity in (0, 1):
        part = np.zeros_like(bump)
        part[parity::2] = bump[parity::2]
        total = float(part.sum())
        if total <= 0:
            raise PreconditionError(f"Box {box.as_list()} is too thin for a correction along axis {axis}")
        parts.append((part / total).reshape(shape))
    return parts[0], parts[1]


def _line_parity_sum(values: np.ndarray, axis: int, parity: int) -> np.ndarray:
    index = [slice(None)] * values.ndim
    index[axis] = slice(parity, None, 2)
    return values[tuple(index)].sum(axis=axis, keepdims=True)


def marginal_antiderivative(grid: Grid, residual: np.ndarray, box: Box) -> List[np.ndarray]:
    """
    One correction sweep: components whose divergence reproduces `residual`.

    The part of `residual` carrying nonzero parity-class sums cannot be the
    divergence of a compact field; it is left out and stays in the residual.
    """
    n = grid.n_dim
    bumps = [_parity_bumps(grid, box, axis) for axis in range(n)]

    remnant = np.zeros(grid.shape)
    for parities, cls in zip(itertools.product((0, 1), repeat=n), parity_classes(grid.shape)):
        profile = functools.reduce(np.multiply, [bumps[a][p] for a, p in enumerate(parities)])
        remnant = remnant + float(residual[cls].sum()) * profile
    logger.debug(f"Parity-class remnant {float(np.max(np.abs(remnant))):.3e}")

    components: List[np.ndarray] = [np.zeros(grid.shape) for _ in range(n)]
    remaining = residual - remnant
    for axis in range(n - 1, 0, -1):
        replacement = sum(_line_parity_sum(remaining, axis, p) * bumps[axis][p] for p in (0, 1))
        components[axis] = parity_antiderivative(remaining - replacement, grid.spacing[axis], axis)
        remaining = replacement
    components[0] = parity_antiderivative(remaining, grid.spacing[0], 0)
    return components


def active_box(grid: Grid, support_box: Box) -> Box:
    """
    Closed node-aligned box holding every node where a compact solution may be nonzero.

    One cell inside the snapped support box, and never closer than
    FACE_CLEARANCE cells to the grid faces.
    """
    support = grid.snap_box(support_box, inward=True)
    box = grid.snap_box(support.inset(grid.h), inward=True)
    clearance = FACE_CLEARANCE * np.asarray(grid.spacing)
    lower = np.maximum(np.asarray(box.lower), np.asarray(grid.box.lower) + clearance)
    upper = np.minimum(np.asarray(box.upper), np.asarray(grid.box.upper) - clearance)
    if np.any(upper <= lower):
        raise PreconditionError(f"Support box {support_box.as_list()} leaves no active nodes")
    return grid.snap_box(Box(tuple(float(v) for v in lower), tuple(float(v) for v in upper)), inward=True)




def solve_compact_divergence(problem: DivProblem,
                             div_tol: Optional[float] = None,
                             max_sweeps: Optional[int] = None,
                             mean_tol: Optional[float] = None,
                             poisson_tol: Optional[float] = None,
                             history: Optional[List[float]] = None) -> VectorField:
    """
    Solve div w = ρ with w bit-exactly zero outside the open support box.

    Args:
        problem: Source and boxes
        div_tol: Target ‖div w − ρ‖∞ relative to ‖ρ‖∞ (default from config)
        max_sweeps: Correction sweep limit (default from config)
        mean_tol: Zero-mean tolerance for the precondition check
        poisson_tol: Tolerance of the sweep-0 potential solve
        history: Optional list receiving the residual after every sweep

    Returns:
        VectorField on the source's grid

    Raises:
        PreconditionError: If the problem violates its invariants
        AnnulusCorrectionError: If correction sweeps stagnate or run out
    """
    cfg = get_config()
    div_tol = cfg.div_tol if div_tol is None else div_tol
    max_sweeps = cfg.max_sweeps if max_sweeps is None else max_sweeps
    trace = history if history is not None else []

    problem.validate(mean_tol=mean_tol)
    rho = problem.rho
    grid = rho.grid
    scale = rho.max_abs()
    if scale == 0.0:
        return VectorField.zeros(grid)

    # Central differences couple a face node to its inner neighbour: w may only
    # be nonzero on the nodes of the open support box, i.e. the closed box one
    # cell inside it.
    support = grid.snap_box(problem.support_box, inward=True)
    working = active_box(grid, support)
    if not working.contains_box(problem.inner_box, strict=True):
        raise PreconditionError(
            f"Inner box {problem.inner_box.as_list()} needs a one-cell gap inside "
            f"the support box {support.as_list()}")
    sub, slices = grid.subgrid(working)

    potential = solve_neumann_poisson(rho.restrict(working), tol=poisson_tol)
    chi = make_cutoff(problem.inner_box, working, sub)
    grad = gradient(potential)
    components = [np.zeros(grid.shape) for _ in range(grid.n_dim)]
    for axis in range(grid.n_dim):
        components[axis][slices] = np.where(chi.values > 0, chi.values * grad.components[axis], 0.0)

    target = div_tol * scale
    residual = rho.values - divergence_array(grid, components)
    norm = float(np.max(np.abs(residual)))
    trace.append(norm)
    logger.debug(f"Divergence sweep 0: residual {norm:.3e} (target {target:.3e})")

    sweep = 0
    while norm > target:
        sweep += 1
        if sweep > max_sweeps:
            raise AnnulusCorrectionError(
                f"annulus correction failed: no convergence in {max_sweeps} sweeps", trace)
        correction = marginal_antiderivative(sub, residual[slices], working)
        for axis in range(grid.n_dim):
            components[axis][slices] += correction[axis]

        residual = rho.values - divergence_array(grid, components)
        new_norm = float(np.max(np.abs(residual)))
        trace.append(new_norm)
        logger.debug(f"Divergence sweep {sweep}: residual {new_norm:.3e}")
        if not new_norm < norm:
            raise AnnulusCorrectionError("annulus correction failed: residual stopped decreasing", trace)
        norm = new_norm

    return VectorField(grid, tuple(components))
