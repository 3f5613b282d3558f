"""
Fields Package
==============
Grids, node-sampled fields and the finite-difference substrate.

This package contains:
- grid: Box and Grid descriptors
- field: ScalarField, VectorField and multilinear interpolation
- operators: gradient, divergence, Jacobian determinant, trapezoidal quadrature
"""

from .grid import Box, Grid, require_same_grid
from .field import ScalarField, VectorField, interpolate_scalar, interpolate_vector, sample_array
from .operators import (
    divergence,
    gradient,
    integrate,
    integrate_array,
    jacobian_determinant,
    trapezoid_weights,
)

__all__ = [
    'Box',
    'Grid',
    'require_same_grid',
    'ScalarField',
    'VectorField',
    'interpolate_scalar',
    'interpolate_vector',
    'sample_array',
    'gradient',
    'divergence',
    'integrate',
    'integrate_array',
    'jacobian_determinant',
    'trapezoid_weights',
]
