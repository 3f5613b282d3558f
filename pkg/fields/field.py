"""
Scalar and Vector Fields
========================

Node-sampled fields on a `Grid`, with multilinear and local cubic interpolation.

Query points outside the box are clamped onto it; fractional indices within
SNAP_TOL of a node are snapped, so evaluating at a node returns the stored
value bit-for-bit.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from errors import FieldError
from fields.grid import SNAP_TOL, Box, Grid, require_same_grid

logger = logging.getLogger(__name__)

Number = Union[int, float]

# Velocities and map displacements are differentiated after sampling, so they
# use the C¹ cubic rule; point queries stay multilinear.
TRANSPORT_ORDER = 3


def _frozen_copy(values, shape: Tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.shape != shape:
        raise FieldError(f"{what} has shape {arr.shape}, grid expects {shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"{what} contains non-finite samples")
    arr.flags.writeable = False
    return arr


def _catmull_rom_weights(t: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Weights of nodes i − 1 .. i + 2 at fraction t of cell [i, i + 1]; (0, 1, 0, 0) at t = 0."""
    t2 = t * t
    t3 = t2 * t
    return (-0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2)


def _ghost_padded(values: np.ndarray) -> np.ndarray:
    """One ghost layer per face, extrapolated so that quadratics are reproduced."""
    padded = values
    for axis in range(values.ndim):
        first = np.take(padded, [0, 1, 2], axis=axis)
        last = np.take(padded, [-1, -2, -3], axis=axis)
        lo = 3.0 * np.take(first, [0], axis=axis) - 3.0 * np.take(first, [1], axis=axis) + np.take(first, [2], axis=axis)
        hi = 3.0 * np.take(last, [0], axis=axis) - 3.0 * np.take(last, [1], axis=axis) + np.take(last, [2], axis=axis)
        padded = np.concatenate([lo, padded, hi], axis=axis)
    return padded


def _sample_cubic(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Tensor-product Catmull-Rom interpolation at fractional indices idx (m, n_dim)."""
    shape = np.asarray(values.shape)
    padded = _ghost_padded(values)
    base = np.clip(np.floor(idx).astype(int), 0, shape - 2)
    frac = idx - base
    weights = [_catmull_rom_weights(frac[:, a]) for a in range(values.ndim)]
    out = np.zeros(idx.shape[0])
    for offsets in itertools.product(range(4), repeat=values.ndim):
        weight = np.ones(idx.shape[0])
        for a, k in enumerate(offsets):
            weight = weight * weights[a][k]
        # padded index of node base + k − 1 is base + k
        out += weight * padded[tuple(base[:, a] + k for a, k in enumerate(offsets))]
    return out


def sample_array(grid: Grid, values: np.ndarray, points: np.ndarray, order: int = 1) -> np.ndarray:
    """Interpolate a node array at points (..., n_dim).

    order=1 is multilinear. order=3 is the local Catmull-Rom cubic: C¹, exact
    on quadratics, and like the multilinear rule it returns node values
    bit-for-bit at nodes. Ghost nodes for the outer stencil are extrapolated
    quadratically; grids with fewer than three nodes on an axis fall back to
    multilinear.

    Raises:
        FieldError: If any query point is non-finite, has the wrong dimension,
            or the order is not 1 or 3.
    """
    if order not in (1, 3):
        raise FieldError(f"Interpolation order must be 1 or 3, got {order}")
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1:] != (grid.n_dim,):
        raise FieldError(f"Query points have trailing dimension {pts.shape[-1:]}, expected {grid.n_dim}")
    if not np.all(np.isfinite(pts)):
        raise FieldError("Interpolation query contains non-finite coordinates")

    idx = grid.index_of(pts)
    nearest = np.rint(idx)
    idx = np.where(np.abs(idx - nearest) <= SNAP_TOL, nearest, idx)
    idx = np.clip(idx, 0.0, np.asarray(grid.shape, dtype=float) - 1.0)

    flat = idx.reshape(-1, grid.n_dim)
    if order == 3 and min(grid.shape) >= 3:
        out = _sample_cubic(values, flat)
    else:
        out = ndimage.map_coordinates(values, flat.T, order=1, mode='nearest', prefilter=False)
    return out.reshape(pts.shape[:-1])


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite sample per grid node; `is_density` additionally demands positivity."""

    grid: Grid
    values: np.ndarray
    is_density: bool = False

    def __post_init__(self):
        arr = _frozen_copy(self.values, self.grid.shape, "Scalar field")
        object.__setattr__(self, 'values', arr)
        if self.is_density and not np.all(arr > 0):
            raise FieldError(f"Density must be strictly positive (min {arr.min():.3e})")

    @classmethod
    def constant(cls, grid: Grid, value: float, is_density: bool = False) -> 'ScalarField':
        return cls(grid, np.full(grid.shape, float(value)), is_density)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[..., np.ndarray],
                      is_density: bool = False) -> 'ScalarField':
        """Sample func(x, y[, z]) on the ij-indexed node mesh."""
        mesh = np.meshgrid(*grid.axes(), indexing='ij')
        values = np.broadcast_to(np.asarray(func(*mesh), dtype=float), grid.shape)
        return cls(grid, values, is_density)

    def with_values(self, values: np.ndarray, is_density: Optional[bool] = None) -> 'ScalarField':
        return ScalarField(self.grid, values, self.is_density if is_density is None else is_density)

    def as_density(self) -> 'ScalarField':
        return ScalarField(self.grid, self.values, True)

    def restrict(self, box: Box) -> 'ScalarField':
        """Same samples on the node-aligned sub-box."""
        sub, slices = self.grid.subgrid(box)
        return ScalarField(sub, self.values[slices], self.is_density)

    def interpolate(self, points: np.ndarray) -> Union[float, np.ndarray]:
        return interpolate_scalar(self, points)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _operand(self, other) -> Union[np.ndarray, float]:
        if isinstance(other, ScalarField):
            require_same_grid(self.grid, other.grid)
            return other.values
        return float(other)

    def __add__(self, other) -> 'ScalarField':
        return ScalarField(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other) -> 'ScalarField':
        return ScalarField(self.grid, self.values - self._operand(other))

    def __rsub__(self, other) -> 'ScalarField':
        return ScalarField(self.grid, self._operand(other) - self.values)

    def __mul__(self, other) -> 'ScalarField':
        return ScalarField(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self) -> 'ScalarField':
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """One component array per axis, each sampled on the grid."""

    grid: Grid
    components: Tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.n_dim:
            raise FieldError(f"Vector field has {len(comps)} components, grid has {self.grid.n_dim} axes")
        frozen = tuple(_frozen_copy(c, self.grid.shape, f"Vector component {i}")
                       for i, c in enumerate(comps))
        object.__setattr__(self, 'components', frozen)

    @classmethod
    def zeros(cls, grid: Grid) -> 'VectorField':
        return cls(grid, tuple(np.zeros(grid.shape) for _ in range(grid.n_dim)))

    @classmethod
    def from_stacked(cls, grid: Grid, stacked: np.ndarray) -> 'VectorField':
        """Build from an array of shape (*shape, n_dim)."""
        arr = np.asarray(stacked, dtype=float)
        return cls(grid, tuple(arr[..., i] for i in range(grid.n_dim)))

    @classmethod
    def from_function(cls, grid: Grid, funcs: Sequence[Callable[..., np.ndarray]]) -> 'VectorField':
        mesh = np.meshgrid(*grid.axes(), indexing='ij')
        return cls(grid, tuple(np.broadcast_to(np.asarray(fn(*mesh), dtype=float), grid.shape)
                               for fn in funcs))

    @property
    def stacked(self) -> np.ndarray:
        """Components stacked last, shape (*shape, n_dim)."""
        return np.stack(self.components, axis=-1)

    def restrict(self, box: Box) -> 'VectorField':
        sub, slices = self.grid.subgrid(box)
        return VectorField(sub, tuple(c[slices] for c in self.components))

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.components))

    def max_norm(self, mask: Optional[np.ndarray] = None) -> float:
        """Largest Euclidean length over nodes (optionally only masked nodes)."""
        mag = self.magnitude()
        if mask is not None:
            mag = mag[mask]
        return float(mag.max()) if mag.size else 0.0

    def is_zero(self) -> bool:
        return all(not np.any(c) for c in self.components)

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        return interpolate_vector(self, points)


def interpolate_scalar(field: ScalarField, point: np.ndarray) -> Union[float, np.ndarray]:
    """
    Multilinear interpolation of a scalar field.

    Args:
        field: Field to sample
        point: One point (n_dim,) or a batch (..., n_dim); clamped to the grid box

    Returns:
        A float for a single point, otherwise an array of shape (...)

    Raises:
        FieldError: For non-finite coordinates
    """
    out = sample_array(field.grid, field.values, point)
    if np.ndim(point) == 1:
        return float(out)
    return out


def interpolate_vector(field: VectorField, point: np.ndarray) -> np.ndarray:
    """Componentwise `interpolate_scalar`; result has the shape of `point`."""
    pts = np.asarray(point, dtype=float)
    return np.stack([sample_array(field.grid, c, pts) for c in field.components], axis=-1)
