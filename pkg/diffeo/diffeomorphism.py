"""
Diffeomorphism
==============

A map φ = id + u stored as a node-sampled displacement field.

A map produced by `invert` keeps a reference to its forward map
(`inverse_of`). Off-grid evaluation of such a map solves the forward equation
instead of interpolating the sampled displacement.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import FieldError
from fields.field import VectorField, sample_array
from fields.grid import Box, Grid
from fields.operators import jacobian_determinant

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Diffeomorphism:
    """
    φ = id + u on a grid.

    Attributes:
        grid: Sampling grid
        displacement: u, one component per axis
        support_box: Box outside which u is bit-exactly zero at the nodes (optional)
        inverse_of: Forward map when this map was produced by inversion
    """

    grid: Grid
    displacement: VectorField
    support_box: Optional[Box] = None
    inverse_of: Optional['Diffeomorphism'] = None

    def __post_init__(self):
        if self.displacement.grid != self.grid:
            raise FieldError("Displacement lives on a different grid than the map")
        if self.support_box is not None:
            outside = ~self.grid.node_mask(self.support_box, closed=True)
            for i, comp in enumerate(self.displacement.components):
                if np.any(comp[outside] != 0.0):
                    raise FieldError(
                        f"Displacement component {i} is nonzero outside the support box "
                        f"{self.support_box.as_list()}")

    @classmethod
    def identity(cls, grid: Grid, support_box: Optional[Box] = None) -> 'Diffeomorphism':
        return cls(grid, VectorField.zeros(grid), support_box)

    @property
    def n_dim(self) -> int:
        return self.grid.n_dim

    def is_identity(self) -> bool:
        return self.displacement.is_zero()

    def node_images(self) -> np.ndarray:
        """φ at every node, shape (*shape, n_dim)."""
        return self.grid.node_coordinates() + self.displacement.stacked

    def displacement_at(self, points: np.ndarray) -> np.ndarray:
        """u at arbitrary points (..., n_dim)."""
        pts = np.asarray(points, dtype=float)
        sampled = np.stack([sample_array(self.grid, c, pts) for c in self.displacement.components], axis=-1)
        if self.inverse_of is None:
            return sampled
        from diffeo.algebra import preimage
        return preimage(self.inverse_of, pts, initial_guess=pts + sampled) - pts

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts + self.displacement_at(pts)

    def jacobian(self):
        return jacobian_determinant(self)

    def min_jacobian(self) -> float:
        return float(self.jacobian().values.min())

    def max_displacement(self, mask: Optional[np.ndarray] = None) -> float:
        return self.displacement.max_norm(mask)

    def restrict(self, box: Box) -> 'Diffeomorphism':
        """Forward map sampled on a node-aligned sub-box (support metadata dropped)."""
        sub, _ = self.grid.subgrid(box)
        return Diffeomorphism(sub, self.displacement.restrict(box))
