"""
Diffeomorphism Algebra
======================

Preimages, inversion, composition, density pullback and extension by the
identity.

Inversion runs a per-point fixed-point iteration x ← y − u(x), falling back to
Newton steps with the interpolated Jacobian where the iteration stalls. A
point whose neighbourhood does not move is its own preimage bit-for-bit.
"""

import logging
from typing import Optional

import numpy as np

from config import get_config
from errors import DomainError, InversionError, PreconditionError
from fields.field import TRANSPORT_ORDER, ScalarField, VectorField, sample_array
from fields.grid import Box, Grid, require_same_grid
from fields.operators import determinant_of_identity_plus, displacement_gradient, jacobian_determinant
from diffeo.diffeomorphism import Diffeomorphism

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 20


def _sample_displacement(phi: Diffeomorphism, points: np.ndarray) -> np.ndarray:
    return np.stack([sample_array(phi.grid, c, points, order=TRANSPORT_ORDER)
                     for c in phi.displacement.components], axis=-1)


def _clip_to_box(grid: Grid, points: np.ndarray) -> np.ndarray:
    box = grid.box
    return np.clip(points, np.asarray(box.lower), np.asarray(box.upper))


def preimage(phi: Diffeomorphism, points: np.ndarray,
             initial_guess: Optional[np.ndarray] = None,
             tol: Optional[float] = None,
             max_iter: Optional[int] = None) -> np.ndarray:
    """
    Solve φ(z) = y for every point y.

    Args:
        phi: Map to invert pointwise
        points: Targets y, shape (..., n_dim)
        initial_guess: Starting iterates (default y)
        tol: Step/residual tolerance (default inv_tol)
        max_iter: Fixed-point iterations before the Newton fallback (default inv_max_iter)

    Returns:
        z with the shape of points

    Raises:
        InversionError: Naming the first point that did not converge and its last iterate
    """
    if phi.inverse_of is not None:
        return phi.inverse_of.apply(points)

    cfg = get_config()
    tol = cfg.inv_tol if tol is None else tol
    max_iter = cfg.inv_max_iter if max_iter is None else max_iter

    grid = phi.grid
    pts = np.asarray(points, dtype=float)
    shape = pts.shape
    y = pts.reshape(-1, grid.n_dim)
    guess = y if initial_guess is None else np.asarray(initial_guess, dtype=float).reshape(-1, grid.n_dim)
    z = _clip_to_box(grid, guess.copy())

    active = np.arange(y.shape[0])
    for _ in range(max_iter):
        if active.size == 0:
            break
        z_next = _clip_to_box(grid, y[active] - _sample_displacement(phi, z[active]))
        step = np.max(np.abs(z_next - z[active]), axis=1)
        z[active] = z_next
        active = active[step > tol]

    if active.size:
        logger.debug(f"Fixed-point inversion stalled at {active.size} points; switching to Newton")
        grads = displacement_gradient(grid, phi.displacement.components)
        n = grid.n_dim
        for _ in range(NEWTON_MAX_ITER):
            zi = z[active]
            mismatch = zi + _sample_displacement(phi, zi) - y[active]
            done = np.max(np.abs(mismatch), axis=1) <= tol
            active = active[~done]
            if active.size == 0:
                break
            zi = zi[~done]
            mismatch = mismatch[~done]
            jac = np.empty((active.size, n, n))
            for i in range(n):
                for j in range(n):
                    jac[:, i, j] = sample_array(grid, grads[i][j], zi) + (1.0 if i == j else 0.0)
            try:
                delta = np.linalg.solve(jac, mismatch[..., None])[..., 0]
            except np.linalg.LinAlgError:
                first = int(active[0])
                node = np.unravel_index(first, shape[:-1]) if len(shape) > 1 else (first,)
                raise InversionError("Singular Jacobian in Newton fallback", node=node, last_iterate=z[first])
            z[active] = _clip_to_box(grid, zi - delta)

    if active.size:
        first = int(active[0])
        node = np.unravel_index(first, shape[:-1]) if len(shape) > 1 else (first,)
        raise InversionError("Inversion did not converge", node=node, last_iterate=z[first])

    return z.reshape(shape)


def invert(phi: Diffeomorphism, tol: Optional[float] = None,
           max_iter: Optional[int] = None) -> Diffeomorphism:
    """
    Node-sampled inverse ψ of φ, remembering φ as `inverse_of`.

    Raises:
        PreconditionError: If det ∇φ is not positive everywhere
        InversionError: If some node does not converge
    """
    if phi.inverse_of is not None:
        return phi.inverse_of
    if phi.is_identity():
        return Diffeomorphism(phi.grid, phi.displacement, phi.support_box, inverse_of=phi)

    min_det = phi.min_jacobian()
    if min_det <= 0:
        raise PreconditionError(f"Cannot invert a map with min det ∇φ = {min_det:.3e}")

    grid = phi.grid
    nodes = grid.node_coordinates()
    z = preimage(phi, nodes, tol=tol, max_iter=max_iter)
    displacement = VectorField.from_stacked(grid, z - nodes)
    return Diffeomorphism(grid, displacement, phi.support_box, inverse_of=phi)


def compose(outer: Diffeomorphism, inner: Diffeomorphism,
            clamp_tol: Optional[float] = None) -> Diffeomorphism:
    """
    outer ∘ inner, i.e. x ↦ inner(x) + u_outer(inner(x)).

    The support box of the result is the smallest box holding both support
    boxes (None when either is unknown).

    Raises:
        FieldError: If the maps live on different grids
        DomainError: If inner sends a node further than clamp_tol outside the box
    """
    require_same_grid(outer.grid, inner.grid, what="composed maps")
    if inner.is_identity():
        return outer
    if outer.is_identity():
        return inner

    clamp_tol = get_config().clamp_tol if clamp_tol is None else clamp_tol
    grid = inner.grid
    nodes = grid.node_coordinates()
    images = inner.node_images()
    box = grid.box
    overshoot = np.max(np.maximum(np.asarray(box.lower) - images, images - np.asarray(box.upper)))
    if overshoot > clamp_tol:
        raise DomainError(f"Inner map leaves the box by {overshoot:.3e} (clamp_tol {clamp_tol:.1e})")
    images = _clip_to_box(grid, images)

    sampled = _sample_displacement(outer, images)
    if outer.inverse_of is None:
        outer_step = sampled
    else:
        outer_step = preimage(outer.inverse_of, images, initial_guess=images + sampled) - images

    displacement = VectorField.from_stacked(grid, inner.displacement.stacked + outer_step)
    if outer.support_box is not None and inner.support_box is not None:
        support = outer.support_box.union(inner.support_box)
    else:
        support = None
    return Diffeomorphism(grid, displacement, support)


def pullback_density(g: ScalarField, phi: Diffeomorphism, check_orientation: bool = True) -> ScalarField:
    """
    (g ∘ φ) · det ∇φ at every node.

    For a map produced by `invert`, det ∇φ is taken as 1 / (det ∇φ⁻¹ ∘ φ),
    with φ⁻¹ the remembered forward map. With check_orientation=False a
    non-positive Jacobian is passed through instead of rejected.

    Raises:
        FieldError: If g and φ live on different grids
        PreconditionError: If the relevant Jacobian is not positive
    """
    require_same_grid(g.grid, phi.grid, what="density and map")
    grid = phi.grid
    images = phi.node_images()
    if phi.inverse_of is None:
        det = jacobian_determinant(phi).values
        if check_orientation and det.min() <= 0:
            raise PreconditionError(f"Pullback through a map with min det ∇φ = {det.min():.3e}")
        return ScalarField(grid, sample_array(grid, g.values, images) * det)

    det_forward = determinant_of_identity_plus(grid, phi.inverse_of.displacement.components)
    if check_orientation and det_forward.min() <= 0:
        raise PreconditionError(f"Forward map has min det = {det_forward.min():.3e}")
    return ScalarField(grid, sample_array(grid, g.values, images) / sample_array(grid, det_forward, images))


def extend_by_identity(phi: Diffeomorphism, from_box: Box, to_grid: Grid) -> Diffeomorphism:
    """
    Re-sample φ onto a larger grid, identity outside its support.

    Args:
        phi: Map with a support box strictly inside from_box
        from_box: Box φ is defined on
        to_grid: Target grid (its box must contain from_box)

    Returns:
        Map on to_grid whose displacement is bit-exactly zero outside phi.support_box

    Raises:
        PreconditionError: If the support box is missing or not strictly inside from_box
    """
    if phi.support_box is None:
        raise PreconditionError("Extension by identity needs a map with a known support box")
    if not from_box.contains_box(phi.support_box, strict=True):
        raise PreconditionError(
            f"Support box {phi.support_box.as_list()} is not strictly inside {from_box.as_list()}")
    if not to_grid.box.contains_box(from_box):
        raise PreconditionError(f"Target grid does not contain {from_box.as_list()}")

    nodes = to_grid.node_coordinates()
    inside = phi.support_box.contains(nodes, closed=True)
    components = []
    for comp in phi.displacement.components:
        out = np.zeros(to_grid.shape)
        out[inside] = sample_array(phi.grid, comp, nodes[inside])
        components.append(out)
    return Diffeomorphism(to_grid, VectorField(to_grid, tuple(components)), phi.support_box)
