"""
Grids and Boxes
===============

Axis-aligned boxes and the uniform lattices sampled over them.

Arrays on a grid are ij-indexed: axis 0 runs along x, axis 1 along y (and
axis 2 along z). Node (k_1..k_n) sits at origin + k_i * h_i.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DomainError, FieldError

logger = logging.getLogger(__name__)

# Fractional indices this close to an integer are treated as that node.
SNAP_TOL = 1e-9

MIN_NODES = 3


def _as_tuple(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box [lower, upper]. Degenerate (zero-width) axes are allowed."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = _as_tuple(self.lower)
        upper = _as_tuple(self.upper)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        if len(lower) != len(upper) or not lower:
            raise DomainError(f"Box corners disagree in dimension: {lower} vs {upper}")
        if not all(math.isfinite(v) for v in lower + upper):
            raise DomainError(f"Box corners must be finite: {lower}, {upper}")
        if any(hi < lo for lo, hi in zip(lower, upper)):
            raise DomainError(f"Box upper corner below lower corner: {lower}, {upper}")

    @classmethod
    def unit(cls, n_dim: int = 2) -> 'Box':
        return cls((0.0,) * n_dim, (1.0,) * n_dim)

    @property
    def n_dim(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> Tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    @property
    def inradius(self) -> float:
        """Half the shortest side: the conventional distance of the empty set to the boundary."""
        return min(self.extent) / 2.0

    @property
    def center(self) -> Tuple[float, ...]:
        return tuple((lo + hi) / 2.0 for lo, hi in zip(self.lower, self.upper))

    def inset(self, margin: float) -> 'Box':
        """Shrink every face inward by `margin`.

        Raises:
            DomainError: If the margin is negative or swallows the box.
        """
        if margin < 0 or not math.isfinite(margin):
            raise DomainError(f"Inset margin must be finite and >= 0, got {margin}")
        if margin >= self.inradius and margin > 0:
            raise DomainError(f"Inset margin {margin} reaches the inradius {self.inradius}")
        return Box(tuple(lo + margin for lo in self.lower),
                   tuple(hi - margin for hi in self.upper))

    def union(self, other: 'Box') -> 'Box':
        """Smallest box containing both."""
        self._check_dim(other)
        return Box(tuple(min(a, b) for a, b in zip(self.lower, other.lower)),
                   tuple(max(a, b) for a, b in zip(self.upper, other.upper)))

    def contains_box(self, other: 'Box', strict: bool = False) -> bool:
        self._check_dim(other)
        if strict:
            return (all(o > s for o, s in zip(other.lower, self.lower))
                    and all(o < s for o, s in zip(other.upper, self.upper)))
        return (all(o >= s for o, s in zip(other.lower, self.lower))
                and all(o <= s for o, s in zip(other.upper, self.upper)))

    def contains(self, points: np.ndarray, closed: bool = True) -> np.ndarray:
        """Membership of points (..., n_dim); returns a boolean array of shape (...)."""
        pts = np.asarray(points, dtype=float)
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        if closed:
            return np.all((pts >= lower) & (pts <= upper), axis=-1)
        return np.all((pts > lower) & (pts < upper), axis=-1)

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        """Distance from points inside the box to its boundary (negative outside)."""
        pts = np.asarray(points, dtype=float)
        to_lower = pts - np.asarray(self.lower)
        to_upper = np.asarray(self.upper) - pts
        return np.min(np.minimum(to_lower, to_upper), axis=-1)

    def as_list(self) -> List[List[float]]:
        return [list(self.lower), list(self.upper)]

    def _check_dim(self, other: 'Box'):
        if other.n_dim != self.n_dim:
            raise DomainError(f"Box dimension mismatch: {self.n_dim} vs {other.n_dim}")


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over a box.

    Attributes:
        shape: Sample count per axis (each >= 3; >= 9 recommended)
        origin: Lower corner of the box
        extent: Side lengths of the box (> 0)
    """

    shape: Tuple[int, ...]
    origin: Tuple[float, ...]
    extent: Tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        origin = _as_tuple(self.origin)
        extent = _as_tuple(self.extent)
        object.__setattr__(self, 'shape', shape)
        object.__setattr__(self, 'origin', origin)
        object.__setattr__(self, 'extent', extent)

        if not (len(shape) == len(origin) == len(extent)):
            raise FieldError(f"Grid metadata disagrees in dimension: {shape}, {origin}, {extent}")
        if len(shape) not in (2, 3):
            raise FieldError(f"Only 2-D and 3-D grids are supported, got n_dim={len(shape)}")
        if any(s < MIN_NODES for s in shape):
            raise FieldError(f"Grid needs at least {MIN_NODES} nodes per axis, got {shape}")
        if not all(math.isfinite(v) for v in origin + extent):
            raise FieldError(f"Grid origin/extent must be finite: {origin}, {extent}")
        if any(e <= 0 for e in extent):
            raise FieldError(f"Grid extent must be positive: {extent}")

    @classmethod
    def unit(cls, n: int, n_dim: int = 2) -> 'Grid':
        """n nodes per axis on the unit square/cube."""
        return cls((n,) * n_dim, (0.0,) * n_dim, (1.0,) * n_dim)

    @classmethod
    def over(cls, box: Box, shape: Sequence[int]) -> 'Grid':
        return cls(tuple(shape), box.lower, box.extent)

    @property
    def n_dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(e / (s - 1) for e, s in zip(self.extent, self.shape))

    @property
    def h(self) -> float:
        """Coarsest spacing; used where one length scale per grid is enough."""
        return max(self.spacing)

    @property
    def box(self) -> Box:
        return Box(self.origin, tuple(o + e for o, e in zip(self.origin, self.extent)))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> List[np.ndarray]:
        """1-D node coordinates per axis."""
        return [o + np.arange(s) * h for o, s, h in zip(self.origin, self.shape, self.spacing)]

    def node_coordinates(self) -> np.ndarray:
        """Stacked node coordinates, shape (*shape, n_dim)."""
        return np.stack(np.meshgrid(*self.axes(), indexing='ij'), axis=-1)

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Fractional (unclamped) indices of points, shape (..., n_dim)."""
        pts = np.asarray(points, dtype=float)
        return (pts - np.asarray(self.origin)) / np.asarray(self.spacing)

    def snap_box(self, box: Box, inward: bool = True) -> Box:
        """Move box faces onto grid nodes (inward shrinks, outward grows).

        Raises:
            DomainError: If the snapped box collapses.
        """
        lo_idx, hi_idx = self._box_indices(box, inward)
        lo_idx = np.clip(lo_idx, 0, np.asarray(self.shape) - 1)
        hi_idx = np.clip(hi_idx, 0, np.asarray(self.shape) - 1)
        if np.any(hi_idx <= lo_idx):
            raise DomainError(f"Box {box.as_list()} has no interior on the grid after snapping")
        return self._box_from_indices(lo_idx, hi_idx)

    def slices_for(self, box: Box) -> Tuple[slice, ...]:
        """Index slices of a node-aligned box.

        Raises:
            DomainError: If the box is not node-aligned or leaves the grid.
        """
        idx = np.stack([self.index_of(np.asarray(box.lower)), self.index_of(np.asarray(box.upper))])
        rounded = np.rint(idx)
        if np.any(np.abs(idx - rounded) > SNAP_TOL):
            raise DomainError(f"Box {box.as_list()} is not aligned with the grid nodes")
        rounded = rounded.astype(int)
        if np.any(rounded[0] < 0) or np.any(rounded[1] > np.asarray(self.shape) - 1):
            raise DomainError(f"Box {box.as_list()} leaves the grid box {self.box.as_list()}")
        return tuple(slice(int(a), int(b) + 1) for a, b in zip(rounded[0], rounded[1]))

    def subgrid(self, box: Box) -> Tuple['Grid', Tuple[slice, ...]]:
        """Grid over a node-aligned sub-box, plus the slices selecting its nodes."""
        slices = self.slices_for(box)
        shape = tuple(s.stop - s.start for s in slices)
        origin = tuple(o + s.start * h for o, s, h in zip(self.origin, slices, self.spacing))
        extent = tuple((n - 1) * h for n, h in zip(shape, self.spacing))
        return Grid(shape, origin, extent), slices

    def node_mask(self, box: Box, closed: bool = True) -> np.ndarray:
        return box.contains(self.node_coordinates(), closed=closed)

    def boundary_distance(self) -> np.ndarray:
        """Per-node distance to the grid box boundary."""
        return self.box.distance_to_boundary(self.node_coordinates())

    def _box_indices(self, box: Box, inward: bool) -> Tuple[np.ndarray, np.ndarray]:
        lo = self.index_of(np.asarray(box.lower))
        hi = self.index_of(np.asarray(box.upper))
        if inward:
            return np.ceil(lo - SNAP_TOL).astype(int), np.floor(hi + SNAP_TOL).astype(int)
        return np.floor(lo + SNAP_TOL).astype(int), np.ceil(hi - SNAP_TOL).astype(int)

    def _box_from_indices(self, lo_idx: np.ndarray, hi_idx: np.ndarray) -> Box:
        return Box(tuple(o + int(k) * h for o, k, h in zip(self.origin, lo_idx, self.spacing)),
                   tuple(o + int(k) * h for o, k, h in zip(self.origin, hi_idx, self.spacing)))


def same_grid(*grids: Optional[Grid]) -> bool:
    first = grids[0]
    return all(g == first for g in grids[1:])


def require_same_grid(*grids: Grid, what: str = "fields"):
    """Raises FieldError when grids differ."""
    if not same_grid(*grids):
        raise FieldError(f"{what} live on mismatched grids")
