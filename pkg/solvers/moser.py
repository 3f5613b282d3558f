"""
Moser Flow
==========

Transport of a density f to g along the linear path ρ_t = (1 − t)f + t·g with
velocity v_t = w / ρ_t, where div w = f − g. The time-1 map φ satisfies
(g ∘ φ)·det ∇φ = f up to discretization error.

Trajectories start at the grid nodes and are advanced with classical RK4 at
a fixed step count. A node whose velocity is exactly zero stays put
bit-for-bit.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import get_config
from errors import FieldError, FlowError, PreconditionError
from fields.field import TRANSPORT_ORDER, ScalarField, VectorField, sample_array
from fields.grid import Box, require_same_grid
from diffeo.algebra import pullback_density
from diffeo.diffeomorphism import Diffeomorphism

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowProblem:
    """Densities f → g, flux w with div w ≈ f − g, and the RK4 step count over [0, 1]."""

    f: ScalarField
    g: ScalarField
    w: VectorField
    steps: int
    rho_floor: Optional[float] = None

    def __post_init__(self):
        require_same_grid(self.f.grid, self.g.grid, self.w.grid, what="flow inputs")
        if int(self.steps) < 1:
            raise PreconditionError(f"Flow needs at least one step, got {self.steps}")
        floor = get_config().rho_floor if self.rho_floor is None else self.rho_floor
        object.__setattr__(self, 'rho_floor', float(floor))
        # ρ_t is a convex combination, so its minimum is min(f, g) over nodes.
        lowest = min(float(self.f.values.min()), float(self.g.values.min()))
        if lowest < self.rho_floor:
            raise FlowError(f"density floor breached: min(f, g) = {lowest:.3e} < {self.rho_floor:.1e}")

    @property
    def grid(self):
        return self.f.grid


def velocity_at(problem: FlowProblem, t: float, point: np.ndarray) -> np.ndarray:
    """
    v_t(x) = w(x) / ((1 − t) f(x) + t g(x)) at one point or a batch (..., n_dim).

    w, f and g are sampled with the cubic transport rule, whose derivative at
    a node is the central difference used by `divergence`.

    Raises:
        PreconditionError: If t lies outside [0, 1]
        FlowError: "density floor breached" when the interpolated ρ_t is too small
    """
    if not (0.0 <= t <= 1.0):
        raise PreconditionError(f"Flow time must lie in [0, 1], got {t}")
    grid = problem.grid
    pts = np.asarray(point, dtype=float)
    flux = np.stack([sample_array(grid, c, pts, order=TRANSPORT_ORDER)
                     for c in problem.w.components], axis=-1)
    density = ((1.0 - t) * sample_array(grid, problem.f.values, pts, order=TRANSPORT_ORDER)
               + t * sample_array(grid, problem.g.values, pts, order=TRANSPORT_ORDER))
    if np.any(density < problem.rho_floor):
        raise FlowError(f"density floor breached: ρ_t = {float(np.min(density)):.3e} at t = {t:.4f}")
    return flux / density[..., None]


def integrate_flow(problem: FlowProblem, t_start: float = 0.0, t_end: float = 1.0,
                   initial: Optional[np.ndarray] = None,
                   support_box: Optional[Box] = None) -> Diffeomorphism:
    """
    RK4 particle flow from t_start to t_end seeded at the grid nodes.

    Args:
        problem: Flow data; `problem.steps` steps are taken over [t_start, t_end]
        t_start, t_end: Time interval inside [0, 1]
        initial: Positions at t_start (default: the nodes), shape (*shape, n_dim)
        support_box: Box outside which w vanishes; recorded on the result

    Returns:
        Diffeomorphism whose displacement is (final position − node)

    Raises:
        FlowError: Density floor breach or non-finite trajectory
    """
    grid = problem.grid
    nodes = grid.node_coordinates()
    x = nodes.copy() if initial is None else np.array(initial, dtype=float)
    if x.shape != nodes.shape:
        raise FieldError(f"Initial positions have shape {x.shape}, expected {nodes.shape}")

    lower = np.asarray(grid.box.lower)
    upper = np.asarray(grid.box.upper)
    dt = (t_end - t_start) / problem.steps
    logger.debug(f"Integrating flow over [{t_start}, {t_end}] with {problem.steps} RK4 steps")

    for k in range(problem.steps):
        t = t_start + k * dt
        k1 = velocity_at(problem, t, x)
        k2 = velocity_at(problem, t + dt / 2.0, x + (dt / 2.0) * k1)
        k3 = velocity_at(problem, t + dt / 2.0, x + (dt / 2.0) * k2)
        k4 = velocity_at(problem, min(t + dt, 1.0), x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FlowError(f"Non-finite trajectory at step {k + 1}/{problem.steps}")
        x = np.clip(x, lower, upper)

    return Diffeomorphism(grid, VectorField.from_stacked(grid, x - nodes), support_box)


@dataclass(frozen=True)
class PullbackResidual:
    """Norms of (g ∘ φ)·det ∇φ − f over nodes at least 2h from ∂Ω."""

    max: float
    l2: float
    min_det: float


def pullback_residual(f: ScalarField, g: ScalarField, phi: Diffeomorphism) -> PullbackResidual:
    """Residual of the pullback equation on the stencil-valid region, plus min det ∇φ."""
    require_same_grid(f.grid, g.grid, phi.grid, what="residual inputs")
    grid = f.grid
    residual = pullback_density(g, phi, check_orientation=False).values - f.values
    valid = grid.boundary_distance() >= 2.0 * grid.h * (1 - 1e-12)
    r = residual[valid]
    return PullbackResidual(
        max=float(np.max(np.abs(r))) if r.size else 0.0,
        l2=float(np.sqrt(np.sum(r * r) * grid.cell_volume)),
        min_det=phi.min_jacobian(),
    )
