"""
Pipeline Stages
===============

The building blocks of a pullback solve on the subdomain Ω′:

- normalize_pair / reconcile_mass: equal masses, normalized to meas Ω′
- solve_unit_jacobian: first-stage map Φ with det ∇Φ = f, no support control
- concordant_jacobian_solve: Ψ with det ∇Ψ = g and Ψ = Φ near the collar
- solve_on_subdomain: φ = Ψ⁻¹ ∘ Φ, identity on the collar

Every stage runs inside `run_stage`, which times it on the tracker and tags
any failure with the stage name.
"""

import logging
import math
from contextlib import contextmanager
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from errors import (ConcordanceError, DomainError, FieldError, FlowError, InversionError,
                    MassBalanceError, PipelineError, PreconditionError, SolverError)
from fields.field import ScalarField, VectorField
from fields.grid import Box, Grid, require_same_grid
from fields.operators import gradient, integrate, jacobian_determinant
from geometry.cutoff import make_cutoff
from geometry.domain import CollarBand, mask_bounding_box
from diffeo.algebra import compose, invert, pullback_density
from diffeo.diffeomorphism import Diffeomorphism
from handlers.timeout_handler import StageTracker
from pipeline.config import PipelineConfig
from solvers.divergence import DivProblem, active_box, remove_mean, solve_compact_divergence
from solvers.moser import FlowProblem, integrate_flow, pullback_residual
from solvers.poisson import solve_neumann_poisson

logger = logging.getLogger(__name__)

NUMERICAL_ERRORS = (FieldError, DomainError, PreconditionError, SolverError, FlowError, InversionError)

# Cells kept between supp(h − 1) and ∂Ω″: one for the active box, one for the cutoff ramp.
OMEGA_2_CLEARANCE = 2


@contextmanager
def run_stage(tracker: Optional[StageTracker], name: str) -> Iterator[None]:
    """
    Time a stage and re-raise its failures as PipelineError tagged with `name`.

    Args:
        tracker: Stage tracker, or None to run untracked
        name: Stage tag ("normalize", "subdomain", "stage_a", ...)
    """
    if tracker is not None:
        tracker.begin_step(name)
    try:
        yield
    except PipelineError as e:
        if tracker is not None:
            tracker.fail_step(name, str(e))
        raise
    except NUMERICAL_ERRORS as e:
        if tracker is not None:
            tracker.fail_step(name, str(e))
        raise PipelineError(str(e), stage=name, cause=e) from e
    if tracker is not None:
        tracker.complete_step(name)


def check_densities(f: ScalarField, g: ScalarField, mass_tol: float) -> Tuple[float, float]:
    """
    Positivity and the equal-mass hypothesis.

    Returns:
        (∫f, ∫g)

    Raises:
        PipelineError: If either density is not strictly positive
        MassBalanceError: "unequal total volume" when the masses differ beyond mass_tol
    """
    require_same_grid(f.grid, g.grid, what="f and g")
    for name, field in (('f', f), ('g', g)):
        lowest = float(field.values.min())
        if lowest <= 0:
            raise PipelineError(f"{name} must be strictly positive (min {lowest:.3e})", stage="normalize")
    mass_f = integrate(f)
    mass_g = integrate(g)
    if abs(mass_f - mass_g) > mass_tol * mass_f:
        raise MassBalanceError(
            f"unequal total volume: ∫f = {mass_f:.6g}, ∫g = {mass_g:.6g} "
            f"(relative gap {abs(mass_f - mass_g) / mass_f:.2e} > {mass_tol:.1e})")
    return mass_f, mass_g


def normalize_pair(f: ScalarField, g: ScalarField,
                   mass_tol: float = 1e-3,
                   post_mass_tol: float = 1e-10) -> Tuple[ScalarField, ScalarField, float]:
    """
    Scale f and g to total mass meas Ω.

    λ = meas Ω / ∫f multiplies f. It also multiplies g when the masses agree
    within post_mass_tol, so f = g stays node-exact wherever it held; otherwise
    g gets its own factor meas Ω / ∫g.

    Returns:
        (λf, scaled g, λ)

    Raises:
        MassBalanceError: "unequal total volume"
    """
    mass_f, mass_g = check_densities(f, g, mass_tol)
    grid = f.grid
    measure = grid.box.measure
    lam = measure / mass_f
    f_scaled = ScalarField(grid, lam * f.values, is_density=True)
    if abs(mass_f - mass_g) <= post_mass_tol * mass_f:
        g_scaled = ScalarField(grid, lam * g.values, is_density=True)
    else:
        logger.debug(f"Masses differ by {abs(mass_f - mass_g) / mass_f:.2e}; scaling g separately")
        g_scaled = ScalarField(grid, (measure / mass_g) * g.values, is_density=True)
    return f_scaled, g_scaled, lam


def reconcile_mass(f: ScalarField, g: ScalarField, support: Box) -> Tuple[ScalarField, float]:
    """
    Remove the quadrature mass gap ∫f − ∫g from g inside the support box.

    g becomes g·(1 + cχ), χ a cutoff over the support box grown by one cell,
    so g changes only at nodes of the support box and ∫f = ∫g afterwards.

    Returns:
        (reconciled g, c)
    """
    gap = integrate(f) - integrate(g)
    if gap == 0.0:
        return g, 0.0
    grid = g.grid
    spacing = np.asarray(grid.spacing)
    outer = Box(tuple(np.asarray(support.lower) - spacing), tuple(np.asarray(support.upper) + spacing))
    # The only nodes strictly inside `outer` are those of the support box.
    chi = make_cutoff(support, outer, grid)
    weight = integrate(g * chi)
    c = gap / weight
    logger.debug(f"Reconciling mass gap {gap:.3e} with factor {c:.3e}")
    return ScalarField(grid, g.values * (1.0 + c * chi.values), is_density=g.is_density), c


def midway_box(grid: Grid, support: Box, outer: Box) -> Optional[Box]:
    """
    Node-aligned box halfway between a support box and an enclosing box.

    Returns None unless the support keeps at least one node clear of `outer` on
    every side and the result spans at least two cells per axis.
    """
    s_lo = np.rint(grid.index_of(np.asarray(support.lower))).astype(int)
    s_hi = np.rint(grid.index_of(np.asarray(support.upper))).astype(int)
    o_lo = np.rint(grid.index_of(np.asarray(outer.lower))).astype(int)
    o_hi = np.rint(grid.index_of(np.asarray(outer.upper))).astype(int)
    if np.any(s_lo < o_lo + 1) or np.any(s_hi > o_hi - 1):
        return None
    lo = (o_lo + s_lo + 1) // 2
    hi = (s_hi + o_hi) // 2
    if np.any(hi - lo < 2):
        return None
    axes = grid.axes()
    return Box(tuple(axes[a][lo[a]] for a in range(grid.n_dim)),
               tuple(axes[a][hi[a]] for a in range(grid.n_dim)))


def solve_unit_jacobian(f: ScalarField, config: PipelineConfig) -> Diffeomorphism:
    """
    Φ with det ∇Φ = f on the grid box.

    The flux is the gradient of the Neumann potential of f − 1 with its normal
    component zeroed on the faces, so trajectories stay in the box and may
    slide along it.

    Args:
        f: Density with ∫f = meas of the grid box
        config: Solve settings (steps, Poisson tolerance, density floor)

    Returns:
        Φ on f's grid (no support box)
    """
    grid = f.grid
    potential = solve_neumann_poisson(f - 1.0, tol=config.poisson_tol)
    components = [np.array(c) for c in gradient(potential).components]
    for axis, comp in enumerate(components):
        face = [slice(None)] * grid.n_dim
        face[axis] = 0
        comp[tuple(face)] = 0.0
        face[axis] = -1
        comp[tuple(face)] = 0.0
    flux = VectorField(grid, tuple(components))
    problem = FlowProblem(f, ScalarField.constant(grid, 1.0), flux, config.steps, config.rho_floor)
    return integrate_flow(problem)


def concordant_jacobian_solve(Phi: Diffeomorphism, g: ScalarField, omega_prime: Box,
                              collar: CollarBand, config: PipelineConfig,
                              f: Optional[ScalarField] = None,
                              diagnostics: Optional[Dict[str, float]] = None) -> Diffeomorphism:
    """
    Ψ = Θ ∘ Φ with det ∇Ψ = g and Ψ = Φ on a neighbourhood of the collar.

    When f (the density Φ was built for) is given, the target is
    (g − f) + det ∇Φ: it equals det ∇Φ bit-for-bit wherever f = g, so
    h = (target ∘ Φ⁻¹)·det ∇Φ⁻¹ is exactly 1 near Φ(collar). Θ solves
    det ∇Θ = h with a flux that vanishes outside Ω″ = Ω′ inset by the collar
    width plus the largest collar displacement of Φ. The inset is capped so
    that Ω″ keeps OMEGA_2_CLEARANCE cells around supp(h − 1).

    Args:
        Phi: First-stage map on the Ω′ grid
        g: Target density on the same grid
        omega_prime: The grid box Ω′
        collar: Collar band inside Ω′
        config: Solve settings
        f: Density of the first stage, enabling the collar reconciliation
        diagnostics: Optional dict receiving h statistics and the stage residual

    Returns:
        Ψ on the Ω′ grid

    Raises:
        ConcordanceError: "degenerate concordance density" when h ≤ 0, mass
            drift beyond mass_tol, or no room for Θ between supp(h − 1) and ∂Ω″
    """
    grid = Phi.grid
    require_same_grid(grid, g.grid, what="first-stage map and target")
    diag = diagnostics if diagnostics is not None else {}
    measure = grid.box.measure
    h = grid.h

    jac = jacobian_determinant(Phi)
    target = g if f is None else ScalarField(grid, (g.values - f.values) + jac.values)
    if float(target.values.min()) <= 0:
        raise ConcordanceError(f"degenerate concordance density: target min {target.values.min():.3e}")

    near = collar.widened(2.0 * h).node_mask(grid)
    deviation = float(np.max(np.abs(target.values - jac.values)[near])) if near.any() else 0.0
    if deviation > config.concord_pre_tol:
        raise ConcordanceError(
            f"concordance failed: target differs from det ∇Φ by {deviation:.3e} near the collar")

    mass = integrate(target)
    if abs(mass - measure) > config.mass_tol * measure:
        raise ConcordanceError(f"concordance failed: target mass {mass:.6g} drifts from meas Ω′ = {measure:.6g}")

    phi_inverse = invert(Phi, tol=config.inv_tol, max_iter=config.inv_max_iter)
    h_field = pullback_density(target, phi_inverse)
    h_min, h_max = float(h_field.values.min()), float(h_field.values.max())
    diag['h_min'] = h_min
    diag['h_max'] = h_max
    if h_min <= 0:
        raise ConcordanceError(f"degenerate concordance density: min h = {h_min:.3e}")

    h_mass_error = abs(integrate(h_field) - measure) / measure
    diag['h_mass_error'] = h_mass_error
    if h_mass_error > config.mass_tol:
        raise ConcordanceError(f"concordance failed: ∫h drifts from meas Ω′ by {h_mass_error:.2e}")

    image_of_collar = collar.contains(phi_inverse.node_images())
    diag['h_collar_deviation'] = (float(np.max(np.abs(h_field.values[image_of_collar] - 1.0)))
                                  if image_of_collar.any() else 0.0)
    logger.info(f"Concordance density: h in [{h_min:.4f}, {h_max:.4f}], "
                f"mass error {h_mass_error:.2e}, deviation near Φ(collar) {diag['h_collar_deviation']:.2e}")

    rho_values = h_field.values - 1.0
    threshold = config.support_rel_threshold * max(1.0, h_max)
    moving = np.abs(rho_values) > threshold
    if not moving.any():
        logger.info("h ≡ 1: first-stage map already has the target Jacobian")
        diag['stage_b_residual'] = pullback_residual(target, ScalarField.constant(grid, 1.0), Phi).max
        diag['div_residual'] = 0.0
        return Phi

    support = mask_bounding_box(grid, moving)
    c_max = Phi.max_displacement(collar.node_mask(grid))
    inset = math.ceil((collar.eps + c_max) / h - 1e-9) * h
    gap = min(min(s - o, p - t) for s, t, o, p in zip(support.lower, support.upper,
                                                     omega_prime.lower, omega_prime.upper))
    room = (math.floor(gap / h + 1e-9) - OMEGA_2_CLEARANCE) * h
    if inset > room:
        logger.warning(f"Ω″ inset {inset:.4g} capped at {room:.4g} to keep {OMEGA_2_CLEARANCE} cells "
                       f"around supp(h − 1); Θ may reach Φ(collar)")
        inset = room
    if inset < h:
        raise ConcordanceError(
            f"concordance failed: supp(h − 1) = {support.as_list()} lies {gap:.4g} from ∂Ω′, "
            f"no room for Ω″ (collar displacement {c_max:.3e})")
    omega_2 = grid.snap_box(omega_prime.inset(inset), inward=True)
    working = active_box(grid, omega_2)

    inner = midway_box(grid, support, working)
    if inner is None:
        raise ConcordanceError(
            f"concordance failed: supp(h − 1) = {support.as_list()} leaves no room inside "
            f"Ω″ = {omega_2.as_list()} (collar displacement {c_max:.3e})")
    logger.debug(f"Ω″ = {omega_2.as_list()}, supp(h − 1) in {inner.as_list()}")

    rho = remove_mean(ScalarField(grid, np.where(grid.node_mask(inner), rho_values, 0.0)), inner)
    trace = []
    flux = solve_compact_divergence(DivProblem(rho, omega_2, inner),
                                    div_tol=config.div_tol, max_sweeps=config.max_sweeps,
                                    mean_tol=config.mean_tol, poisson_tol=config.poisson_tol,
                                    history=trace)
    diag['div_residual'] = trace[-1] / rho.max_abs() if rho.max_abs() > 0 else 0.0

    h_corrected = ScalarField(grid, 1.0 + rho.values)
    flow = FlowProblem(h_corrected, ScalarField.constant(grid, 1.0), flux, config.steps, config.rho_floor)
    theta = integrate_flow(flow, support_box=working)

    psi = compose(theta, Phi, clamp_tol=config.clamp_tol)
    diag['stage_b_residual'] = pullback_residual(target, ScalarField.constant(grid, 1.0), psi).max
    return psi


def solve_on_subdomain(f: ScalarField, g: ScalarField, omega_prime: Box, collar: CollarBand,
                       config: PipelineConfig,
                       diagnostics: Optional[Dict[str, float]] = None,
                       tracker: Optional[StageTracker] = None) -> Diffeomorphism:
    """
    Solve (g ∘ φ)·det ∇φ = f on Ω′ with φ = id on the collar.

    Args:
        f, g: Densities on the Ω′ grid with equal masses, f = g near the collar
        omega_prime: The grid box Ω′
        collar: Collar band inside Ω′
        config: Solve settings
        diagnostics: Optional dict receiving per-stage metrics
        tracker: Optional stage tracker

    Returns:
        φ on the Ω′ grid with support box collar.core

    Raises:
        PipelineError: Tagged "stage_a", "stage_b" or "compose"
        ConcordanceError: "concordance failed" when the collar moves more than concord_tol
    """
    grid = f.grid
    diag = diagnostics if diagnostics is not None else {}

    with run_stage(tracker, 'stage_a'):
        Phi = solve_unit_jacobian(f, config)
        diag['stage_a_residual'] = pullback_residual(f, ScalarField.constant(grid, 1.0), Phi).max
        logger.info(f"First-stage map: residual {diag['stage_a_residual']:.3e}, "
                    f"min det {Phi.min_jacobian():.4f}")

    with run_stage(tracker, 'stage_b'):
        psi = concordant_jacobian_solve(Phi, g, omega_prime, collar, config, f=f, diagnostics=diag)

    with run_stage(tracker, 'compose'):
        phi = compose(invert(psi, tol=config.inv_tol, max_iter=config.inv_max_iter), Phi,
                      clamp_tol=config.clamp_tol)
        collar_nodes = collar.node_mask(grid)
        collar_displacement = phi.max_displacement(collar_nodes)
        diag['collar_displacement'] = collar_displacement
        if collar_displacement > config.concord_tol:
            raise ConcordanceError(
                f"concordance failed: collar displacement {collar_displacement:.3e} "
                f"exceeds {config.concord_tol:.1e}", stage="compose")

        before = pullback_residual(f, g, phi).max
        core = collar.core
        keep = grid.node_mask(core, closed=False) & ~collar_nodes
        components = tuple(np.where(keep, c, 0.0) for c in phi.displacement.components)
        snapped = Diffeomorphism(grid, VectorField(grid, components), core)
        after = pullback_residual(f, g, snapped).max
        diag['snap_ratio'] = after / before if before > 0 else 1.0
        if after > 2.0 * before + 1e-12:
            raise ConcordanceError(
                f"concordance failed: snapping the collar raised the residual "
                f"from {before:.3e} to {after:.3e}", stage="compose")

    return snapped
