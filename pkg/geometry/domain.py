"""
Domain Geometry
===============

The box Ω, the subdomain Ω′ inset from it, collar bands inside ∂Ω′, and the
distance of supp(f − g) to the boundary.

Default choices:
- margin of Ω′ is d/2, d = support_distance(f, g)
- collar width is half the gap between the support and ∂Ω′, snapped down to
  the grid and capped so that a two-node neighbourhood of the collar stays
  clear of the support
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import get_config
from errors import DomainError
from fields.field import ScalarField
from fields.grid import Box, Grid, require_same_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DomainSpec:
    """Ω with optional user-forced margin and collar width (None means default)."""

    box: Box
    margin: Optional[float] = None
    collar_width: Optional[float] = None

    def __post_init__(self):
        for name in ('margin', 'collar_width'):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if self.margin is not None and self.collar_width is not None:
            if self.margin + self.collar_width >= self.box.inradius:
                raise DomainError(
                    f"margin + collar_width = {self.margin + self.collar_width} "
                    f"must stay below inradius {self.box.inradius}")

    @property
    def omega_prime(self) -> Box:
        if self.margin is None:
            raise DomainError("Margin not resolved yet")
        return self.box.inset(self.margin)


@dataclass(frozen=True)
class CollarBand:
    """Nodes of Ω̄′ within `eps` of ∂Ω′."""

    omega_prime: Box
    eps: float

    def __post_init__(self):
        if not (0 < self.eps < self.omega_prime.inradius):
            raise DomainError(
                f"Collar width {self.eps} must lie in (0, {self.omega_prime.inradius})")

    @property
    def core(self) -> Box:
        """Ω′ minus the open collar."""
        return self.omega_prime.inset(self.eps)

    def contains(self, points: np.ndarray) -> np.ndarray:
        dist = self.omega_prime.distance_to_boundary(points)
        return (dist >= 0) & (dist <= self.eps * (1 + 1e-12))

    def node_mask(self, grid: Grid) -> np.ndarray:
        return self.contains(grid.node_coordinates())

    def widened(self, extra: float) -> 'CollarBand':
        """The band grown inward by `extra` ("a neighbourhood of U")."""
        return CollarBand(self.omega_prime, self.eps + extra)


def collar_band(omega_prime: Box, eps: float) -> CollarBand:
    """Box realization of the collar U_eps inside Ω′."""
    return CollarBand(omega_prime, eps)


def band_mask(grid: Grid, box: Box, width: float, strict: bool = False) -> np.ndarray:
    """Grid nodes of the closed box within `width` (or strictly less) of its boundary."""
    dist = box.distance_to_boundary(grid.node_coordinates())
    if strict:
        return (dist >= 0) & (dist < width)
    return (dist >= 0) & (dist <= width)


def default_threshold(f: ScalarField, g: ScalarField, rel: Optional[float] = None) -> float:
    rel = get_config().support_rel_threshold if rel is None else rel
    return rel * max(f.max_abs(), g.max_abs())


def support_mask(f: ScalarField, g: ScalarField, threshold: Optional[float] = None) -> np.ndarray:
    require_same_grid(f.grid, g.grid, what="f and g")
    if threshold is None:
        threshold = default_threshold(f, g)
    return np.abs(f.values - g.values) > threshold


def support_distance(f: ScalarField, g: ScalarField, threshold: Optional[float] = None) -> float:
    """
    Distance from the nodes where |f − g| > threshold to ∂Ω.

    Returns the inradius of Ω when that node set is empty.

    Raises:
        FieldError: If f and g live on different grids
    """
    mask = support_mask(f, g, threshold)
    grid = f.grid
    if not mask.any():
        return grid.box.inradius
    return float(grid.boundary_distance()[mask].min())


def support_bounding_box(f: ScalarField, g: ScalarField,
                         threshold: Optional[float] = None) -> Optional[Box]:
    """Smallest node-aligned box holding the support nodes, or None if there are none."""
    mask = support_mask(f, g, threshold)
    return mask_bounding_box(f.grid, mask)


def mask_bounding_box(grid: Grid, mask: np.ndarray) -> Optional[Box]:
    if not mask.any():
        return None
    nodes = grid.node_coordinates()[mask]
    return Box(tuple(nodes.min(axis=0)), tuple(nodes.max(axis=0)))


def select_subdomain(spec: DomainSpec, f: ScalarField, g: ScalarField,
                     threshold: Optional[float] = None) -> Box:
    """
    Choose Ω′ = Ω inset by the margin, snapped inward to grid nodes.

    Args:
        spec: Ω plus an optional forced margin
        f, g: Densities on a shared grid over spec.box
        threshold: Support detection threshold (default from config)

    Returns:
        Node-aligned Ω′ whose open interior holds every support node

    Raises:
        DomainError: "support too close to boundary" when the support leaves Ω′
    """
    grid = f.grid
    d = support_distance(f, g, threshold)
    if d <= 0:
        raise DomainError("support too close to boundary (support touches ∂Ω)")

    margin = spec.margin if spec.margin is not None else d / 2.0
    if margin >= spec.box.inradius:
        raise DomainError(f"Margin {margin} reaches the inradius {spec.box.inradius}")

    omega_prime = grid.snap_box(spec.box.inset(margin), inward=True)
    mask = support_mask(f, g, threshold)
    outside = mask & ~grid.node_mask(omega_prime, closed=False)
    if outside.any():
        raise DomainError(
            f"support too close to boundary: {int(outside.sum())} support nodes "
            f"outside Ω′ = {omega_prime.as_list()} (d = {d:.4g}, margin = {margin:.4g})")

    logger.info(f"Selected Ω′ = {omega_prime.as_list()} (d = {d:.4g}, margin = {margin:.4g})")
    return omega_prime


def choose_collar_width(grid: Grid, omega_prime: Box, f: ScalarField, g: ScalarField,
                        requested: Optional[float] = None,
                        threshold: Optional[float] = None) -> float:
    """
    Collar width ε inside Ω′ leaving the support and a two-node buffer untouched.

    Args:
        grid: Grid of f and g
        omega_prime: Node-aligned subdomain
        f, g: Densities
        requested: Forced width; validated, not adjusted
        threshold: Support detection threshold

    Returns:
        ε, a positive multiple of the grid spacing

    Raises:
        DomainError: If no admissible width exists on this grid
    """
    mask = support_mask(f, g, threshold)
    dist = omega_prime.distance_to_boundary(grid.node_coordinates())
    gap = float(dist[mask].min()) if mask.any() else omega_prime.inradius
    h = grid.h
    cap = gap - 3.0 * h

    if requested is not None:
        eps = float(requested)
        if eps > cap + 1e-12 * h:
            raise DomainError(
                f"Collar width {eps} leaves no two-node buffer before the support "
                f"(gap {gap:.4g}, spacing {h:.4g})")
    else:
        eps = math.floor((gap / 2.0) / h + 1e-9) * h
        eps = min(max(eps, h), math.floor(cap / h + 1e-9) * h)
        if eps < h:
            raise DomainError(
                f"Support is {gap:.4g} from ∂Ω′; no collar of at least one cell fits (spacing {h:.4g})")
    collar_band(omega_prime, eps)
    logger.debug(f"Collar width {eps:.4g} (gap {gap:.4g})")
    return eps
