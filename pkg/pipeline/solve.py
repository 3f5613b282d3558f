"""
Pullback Solve Entry Points
===========================

solve_pullback finds φ with (g ∘ φ)·det ∇φ = f on a box Ω and φ = id outside
a subdomain Ω′ holding supp(f − g):

1. Validate positivity and the equal-mass hypothesis
2. Pick Ω′ and a collar width inside it
3. Restrict to Ω′, reconcile the quadrature mass gap, normalize to meas Ω′
4. Two-stage solve on Ω′ (or one compactly supported flow for method "direct")
5. Extend by the identity to Ω and measure the result
"""

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from errors import PipelineError, PreconditionError
from fields.field import ScalarField
from fields.grid import Box, Grid
from fields.operators import integrate
from geometry.domain import (DomainSpec, band_mask, choose_collar_width, collar_band, default_threshold,
                             mask_bounding_box, select_subdomain, support_distance, support_mask)
from diffeo.algebra import extend_by_identity, pullback_density
from diffeo.diffeomorphism import Diffeomorphism
from handlers.timeout_handler import StageTracker
from pipeline.config import PipelineConfig, method_tol
from pipeline.report import SolveReport
from pipeline.stages import (check_densities, midway_box, normalize_pair, reconcile_mass, run_stage,
                             solve_on_subdomain)
from solvers.divergence import DivProblem, active_box, remove_mean, solve_compact_divergence
from solvers.moser import FlowProblem, integrate_flow, pullback_residual

logger = logging.getLogger(__name__)

COMPOSED_STAGES = ['normalize', 'subdomain', 'stage_a', 'stage_b', 'compose', 'extend', 'verify']
DIRECT_STAGES = ['normalize', 'subdomain', 'divergence', 'flow', 'verify']


def _default_config(f: ScalarField) -> PipelineConfig:
    return PipelineConfig(grid_n=max(max(f.grid.shape), 17))


def _tracker(config: PipelineConfig, stages) -> StageTracker:
    tracker = StageTracker(stages, max_seconds=config.runtime_budget_s)
    tracker.start()
    return tracker


def _measure(f: ScalarField, g: ScalarField, phi: Diffeomorphism,
             omega_prime: Optional[Box], config: PipelineConfig,
             tracker: StageTracker, **extra: Any) -> SolveReport:
    """Residuals, support and mass checks of φ against the original f and g."""
    grid = f.grid
    residual = pullback_residual(f, g, phi)
    mass_f = integrate(f)
    mass_g = integrate(g)
    transported = integrate(pullback_density(g, phi, check_orientation=False))
    if omega_prime is None:
        outside = 0.0
    else:
        outside = phi.max_displacement(~grid.node_mask(omega_prime, closed=False))

    report = SolveReport(
        method=config.method,
        grid_shape=list(grid.shape),
        steps=config.steps,
        margin=config.margin,
        omega_prime=omega_prime.as_list() if omega_prime is not None else None,
        residual_max=residual.max,
        residual_l2=residual.l2,
        min_det=residual.min_det,
        max_displacement_outside_omega_prime=outside,
        mass_balance=abs(mass_f - mass_g) / mass_f,
        transported_mass_error=abs(transported - mass_f) / mass_f,
        method_tol=method_tol(max(grid.shape)),
        collar_tol=config.concord_tol,
        timings=dict(tracker.timings),
        total_seconds=tracker.total_seconds(),
        budget_exceeded=tracker.budget_exceeded(),
        **extra,
    )
    logger.info(f"Solve finished ({config.method}): residual {report.residual_max:.3e} "
                f"(gate {report.method_tol:.3e}), min det {report.min_det:.4f}, "
                f"failed gates {report.gates() or 'none'}")
    return report


def _identity_result(f: ScalarField, g: ScalarField, config: PipelineConfig,
                     tracker: StageTracker) -> Tuple[Diffeomorphism, SolveReport]:
    logger.info("supp(f − g) is empty; returning the identity")
    phi = Diffeomorphism.identity(f.grid)
    with run_stage(tracker, 'verify'):
        report = _measure(f, g, phi, None, config, tracker, support_empty=True)
    return phi, report


def _normalized_masses(f: ScalarField, g: ScalarField) -> float:
    measure = f.grid.box.measure
    return max(abs(integrate(f) - measure), abs(integrate(g) - measure)) / measure


def _support_box(grid: Grid, f: ScalarField, g: ScalarField, threshold: float) -> Box:
    return mask_bounding_box(grid, support_mask(f, g, threshold))


def solve_pullback(f: ScalarField, g: ScalarField,
                   config: Optional[PipelineConfig] = None) -> Tuple[Diffeomorphism, SolveReport]:
    """
    Solve (g ∘ φ)·det ∇φ = f with φ = id outside Ω′.

    Args:
        f, g: Positive densities on one grid over Ω with equal total mass
        config: Solve settings (default: PipelineConfig for f's grid); method
            "direct" dispatches to solve_direct

    Returns:
        (φ on f's grid, SolveReport measured against the original f and g)

    Raises:
        MassBalanceError: "unequal total volume"
        PipelineError: Any stage failure, tagged with its stage
    """
    config = config or _default_config(f)
    if config.method == 'direct':
        return solve_direct(f, g, config)

    tracker = _tracker(config, COMPOSED_STAGES)
    grid = f.grid

    with run_stage(tracker, 'normalize'):
        check_densities(f, g, config.mass_tol)
        threshold = default_threshold(f, g, config.support_rel_threshold)
        empty = not support_mask(f, g, threshold).any()
    if empty:
        return _identity_result(f, g, config, tracker)

    with run_stage(tracker, 'subdomain'):
        spec = DomainSpec(grid.box, margin=config.margin, collar_width=config.collar_width)
        sub, _ = grid.subgrid(select_subdomain(spec, f, g, threshold))
        omega_prime = sub.box
        eps = choose_collar_width(grid, omega_prime, f, g, config.collar_width, threshold)
        collar = collar_band(omega_prime, eps)
        f_sub = f.restrict(omega_prime)
        g_sub = g.restrict(omega_prime)

    with run_stage(tracker, 'normalize'):
        support = _support_box(sub, f_sub, g_sub, threshold)
        g_sub, _ = reconcile_mass(f_sub, g_sub, support)
        f_n, g_n, lam = normalize_pair(f_sub, g_sub, config.mass_tol, config.post_mass_tol)
        normalized_error = _normalized_masses(f_n, g_n)
        logger.info(f"Normalized on Ω′ = {omega_prime.as_list()}: λ = {lam:.6g}, collar width {eps:.4g}")

    diagnostics: Dict[str, float] = {}
    phi_sub = solve_on_subdomain(f_n, g_n, omega_prime, collar, config,
                                 diagnostics=diagnostics, tracker=tracker)

    with run_stage(tracker, 'extend'):
        phi = extend_by_identity(phi_sub, omega_prime, grid)

    with run_stage(tracker, 'verify'):
        report = _measure(f, g, phi, omega_prime, config, tracker,
                          collar_width=eps, lam=lam, normalized_mass_error=normalized_error,
                          **diagnostics)
    return phi, report


def solve_direct(f: ScalarField, g: ScalarField,
                 config: Optional[PipelineConfig] = None) -> Tuple[Diffeomorphism, SolveReport]:
    """
    Baseline: one flow f → g driven by a flux supported in Ω′.

    Runs on the whole grid. The flux solves div w = λ(f − g), corrected to
    zero mean inside a box midway between supp(f − g) and the active box of
    Ω′; the flow then carries f to g up to that correction.

    Raises:
        MassBalanceError: "unequal total volume"
        PipelineError: Tagged "normalize", "subdomain", "divergence", "flow" or "verify"
    """
    config = config or _default_config(f)
    if config.method != 'direct':
        config = config.model_copy(update={'method': 'direct'})
    tracker = _tracker(config, DIRECT_STAGES)
    grid = f.grid

    with run_stage(tracker, 'normalize'):
        check_densities(f, g, config.mass_tol)
        threshold = default_threshold(f, g, config.support_rel_threshold)
        empty = not support_mask(f, g, threshold).any()
    if empty:
        return _identity_result(f, g, config, tracker)

    with run_stage(tracker, 'subdomain'):
        omega_prime = select_subdomain(DomainSpec(grid.box, margin=config.margin), f, g, threshold)
        working = active_box(grid, omega_prime)
        support = _support_box(grid, f, g, threshold)
        inner = midway_box(grid, support, working)
        if inner is None:
            raise PipelineError(
                f"supp(f − g) = {support.as_list()} leaves no room inside Ω′ = {omega_prime.as_list()}",
                stage="subdomain")

    with run_stage(tracker, 'normalize'):
        g_reconciled, _ = reconcile_mass(f, g, support)
        f_n, g_n, lam = normalize_pair(f, g_reconciled, config.mass_tol, config.post_mass_tol)
        normalized_error = _normalized_masses(f_n, g_n)

    with run_stage(tracker, 'divergence'):
        rho = ScalarField(grid, np.where(grid.node_mask(inner), f_n.values - g_n.values, 0.0))
        rho = remove_mean(rho, inner)
        trace = []
        flux = solve_compact_divergence(DivProblem(rho, omega_prime, inner),
                                        div_tol=config.div_tol, max_sweeps=config.max_sweeps,
                                        mean_tol=config.mean_tol, poisson_tol=config.poisson_tol,
                                        history=trace)
        div_residual = trace[-1] / rho.max_abs() if rho.max_abs() > 0 else 0.0

    with run_stage(tracker, 'flow'):
        g_adjusted = ScalarField(grid, f_n.values - rho.values)
        problem = FlowProblem(f_n, g_adjusted, flux, config.steps, config.rho_floor)
        phi = integrate_flow(problem, support_box=working)

    with run_stage(tracker, 'verify'):
        report = _measure(f, g, phi, omega_prime, config, tracker,
                          lam=lam, normalized_mass_error=normalized_error, div_residual=div_residual)
    return phi, report


def solve_with_margin(f: ScalarField, g: ScalarField, d: float,
                      config: Optional[PipelineConfig] = None) -> Tuple[Diffeomorphism, SolveReport]:
    """
    Solve with φ = id on the band V_d = {x : dist(x, ∂Ω) < d/2}.

    The margin of Ω′ is forced to d/2; for empty supp(f − g) the support
    distance is taken to be the inradius of Ω.

    Args:
        f, g: Densities as for solve_pullback
        d: Guaranteed distance of supp(f − g) from ∂Ω
        config: Solve settings; its method is honoured

    Raises:
        PreconditionError: If d is outside (0, inradius] or exceeds the actual support distance
    """
    config = config or _default_config(f)
    grid = f.grid
    box = grid.box
    if not (0 < d <= box.inradius):
        raise PreconditionError(f"Margin distance d = {d} must lie in (0, {box.inradius}]")
    threshold = default_threshold(f, g, config.support_rel_threshold)
    distance = support_distance(f, g, threshold)
    if distance < d:
        raise PreconditionError(
            f"supp(f − g) is {distance:.4g} from ∂Ω, closer than the requested d = {d}")

    phi, report = solve_pullback(f, g, config.model_copy(update={'margin': d / 2.0}))
    band = band_mask(grid, box, d / 2.0, strict=True)
    report = report.model_copy(update={'max_displacement_in_vd': phi.max_displacement(band)})
    logger.info(f"Displacement on V_d (d = {d}): {report.max_displacement_in_vd}")
    return phi, report
