"""
Cutoff Functions
================

C² cutoffs built from the quintic smoothstep 6t⁵ − 15t⁴ + 10t³: one ramp per
axis, multiplied together. The ramp is exactly 0 for t <= 0 and exactly 1
for t >= 1.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DomainError
from fields.field import ScalarField
from fields.grid import Box, Grid

logger = logging.getLogger(__name__)


def smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def ramp_profile(x: np.ndarray, outer_lo: float, inner_lo: float,
                 inner_hi: float, outer_hi: float) -> np.ndarray:
    """1-D plateau: 0 outside [outer_lo, outer_hi], 1 on [inner_lo, inner_hi]."""
    x = np.asarray(x, dtype=float)
    rising = smoothstep((x - outer_lo) / (inner_lo - outer_lo))
    falling = smoothstep((outer_hi - x) / (outer_hi - inner_hi))
    return np.minimum(rising, falling)


def bump_profile(x: np.ndarray, lo: float, hi: float, dx: Optional[float] = None) -> np.ndarray:
    """Plateau bump supported in (lo, hi); unit trapezoid integral when dx is given."""
    quarter = (hi - lo) / 4.0
    bump = ramp_profile(x, lo, lo + quarter, hi - quarter, hi)
    if dx is None:
        return bump
    total = float(np.sum(bump) * dx - 0.5 * dx * (bump[0] + bump[-1]))
    if total <= 0:
        raise DomainError(f"Bump over ({lo}, {hi}) has no mass on the grid")
    return bump / total


@dataclass(frozen=True, eq=False)
class CutoffField(ScalarField):
    """Values in [0, 1]: exactly 1 on `inner`, exactly 0 outside `outer`."""

    inner: Optional[Box] = None
    outer: Optional[Box] = None


def make_cutoff(inner: Box, outer: Box, grid: Grid) -> CutoffField:
    """
    Per-axis C² ramp product between two nested boxes.

    Args:
        inner: Plateau box where the cutoff equals 1
        outer: Box outside which the cutoff equals 0
        grid: Grid to sample on

    Returns:
        CutoffField on `grid`

    Raises:
        DomainError: If inner is not strictly inside outer
    """
    if not outer.contains_box(inner, strict=True):
        raise DomainError(f"Cutoff inner box {inner.as_list()} is not strictly inside {outer.as_list()}")

    values = np.ones(grid.shape)
    for axis, coords in enumerate(grid.axes()):
        profile = ramp_profile(coords, outer.lower[axis], inner.lower[axis],
                               inner.upper[axis], outer.upper[axis])
        shape = [1] * grid.n_dim
        shape[axis] = grid.shape[axis]
        values = values * profile.reshape(shape)
    return CutoffField(grid, values, False, inner, outer)
