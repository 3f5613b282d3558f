"""
Gallery - Built-in Density Pairs
================================

Equal-mass positive pairs (f, g) on the unit square with f = g node-exactly
outside a centered sub-box:

- twin-bumps: the same windowed Gaussian at two mirrored centers
- ring-swap: a ring traded for a central bump of equal mass
- anisotropic-blob: an elliptic blob rotated by +angle and -angle
- oned-profile: a y-independent profile against g = 1 (1-D oracle input);
  localized=true confines it to a box so the pipeline can solve it

Bumps are windowed Gaussians exp(-r²/2σ²)·(1 - (r/R)²)³ that vanish exactly
for r ≥ R. Where masses do not match by symmetry, the second amplitude is
rescaled on the grid so both trapezoid masses agree.
"""

import logging
from typing import Any, Callable, Dict, Tuple

import numpy as np

from errors import InputError
from fields.field import ScalarField
from fields.grid import Grid
from fields.operators import integrate_array

logger = logging.getLogger(__name__)

DEFAULT_N = 65


def windowed_gaussian(r: np.ndarray, sigma: float, radius: float) -> np.ndarray:
    """exp(-r²/2σ²)·(1 - (r/R)²)³ for r < R, exactly 0 beyond."""
    window = np.clip(1.0 - (np.asarray(r) / radius) ** 2, 0.0, None) ** 3
    return np.exp(-np.asarray(r) ** 2 / (2.0 * sigma * sigma)) * window


def _window(t: np.ndarray, center: float, half_width: float) -> np.ndarray:
    return np.clip(1.0 - ((t - center) / half_width) ** 2, 0.0, None) ** 3


def _twin_bumps(grid: Grid, sigma: float = 0.08, radius: float = 0.15,
                amplitude: float = 0.5, offset: float = 0.05) -> Tuple[np.ndarray, np.ndarray]:
    x, y = np.meshgrid(*grid.axes(), indexing='ij')
    left = windowed_gaussian(np.hypot(x - (0.5 - offset), y - 0.5), sigma, radius)
    right = windowed_gaussian(np.hypot(x - (0.5 + offset), y - 0.5), sigma, radius)
    return 1.0 + amplitude * left, 1.0 + amplitude * right


def _ring_swap(grid: Grid, ring_radius: float = 0.12, ring_width: float = 0.06,
               sigma: float = 0.08, radius: float = 0.2,
               amplitude: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    x, y = np.meshgrid(*grid.axes(), indexing='ij')
    r = np.hypot(x - 0.5, y - 0.5)
    ring = _window(r, ring_radius, 2.0 * ring_width) * np.exp(-((r - ring_radius) / ring_width) ** 2)
    bump = windowed_gaussian(r, sigma, radius)
    bump_amplitude = amplitude * integrate_array(grid, ring) / integrate_array(grid, bump)
    return 1.0 + amplitude * ring, 1.0 + bump_amplitude * bump


def _anisotropic_blob(grid: Grid, angle: float = 30.0, major: float = 0.18, minor: float = 0.08,
                      amplitude: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    x, y = np.meshgrid(*grid.axes(), indexing='ij')

    def blob(theta: float) -> np.ndarray:
        c, s = np.cos(theta), np.sin(theta)
        u = c * (x - 0.5) + s * (y - 0.5)
        v = -s * (x - 0.5) + c * (y - 0.5)
        q = (u / major) ** 2 + (v / minor) ** 2
        return np.clip(1.0 - q, 0.0, None) ** 3 * np.exp(-q)

    theta = np.deg2rad(angle)
    first, second = blob(theta), blob(-theta)
    second_amplitude = amplitude * integrate_array(grid, first) / integrate_array(grid, second)
    return 1.0 + amplitude * first, 1.0 + second_amplitude * second


def _oned_profile(grid: Grid, amplitude: float = 0.3, center: float = 0.5, half_width: float = 0.28,
                  localized: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    x, y = np.meshgrid(*grid.axes(), indexing='ij')
    # One full sine period across the window, odd about the center: zero net mass.
    phase = 2.0 * np.pi * (x - (center - half_width)) / (2.0 * half_width)
    perturbation = amplitude * np.sin(phase) * _window(x, center, half_width)
    if localized:
        perturbation = perturbation * _window(y, 0.5, half_width)
    return 1.0 + perturbation, np.ones(grid.shape)


PROBLEMS: Dict[str, Callable[..., Tuple[np.ndarray, np.ndarray]]] = {
    'twin-bumps': _twin_bumps,
    'ring-swap': _ring_swap,
    'anisotropic-blob': _anisotropic_blob,
    'oned-profile': _oned_profile,
}

# Parameters under which every problem has supp(f - g) well inside the square.
SOLVABLE_PARAMS: Dict[str, Dict[str, Any]] = {
    'oned-profile': {'localized': True},
}


def gallery(name: str, n: int = DEFAULT_N, **params: Any) -> Tuple[ScalarField, ScalarField]:
    """
    Build a gallery pair on the n × n unit-square grid.

    Args:
        name: One of PROBLEMS
        n: Nodes per axis
        **params: Problem parameters (see the builder signatures)

    Returns:
        (f, g) as density fields

    Raises:
        InputError: Unknown problem or parameter
    """
    builder = PROBLEMS.get(name)
    if builder is None:
        raise InputError(f"Unknown gallery problem '{name}' (known: {', '.join(PROBLEMS)})")
    grid = Grid.unit(int(n))
    try:
        f_values, g_values = builder(grid, **params)
    except TypeError as e:
        raise InputError(f"Bad parameters for gallery problem '{name}': {e}") from e
    logger.debug(f"Gallery '{name}' on {n}×{n} with {params or 'defaults'}")
    return ScalarField(grid, f_values, is_density=True), ScalarField(grid, g_values, is_density=True)


def solvable_pair(name: str, n: int = DEFAULT_N, **params: Any) -> Tuple[ScalarField, ScalarField]:
    """gallery() with the parameters that make the pair solvable by the pipeline."""
    merged = dict(SOLVABLE_PARAMS.get(name, {}))
    merged.update(params)
    return gallery(name, n, **merged)
