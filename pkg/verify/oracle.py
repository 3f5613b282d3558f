"""
1-D Transport Oracle
====================

For densities that depend on x only, the pullback problem decouples into the
monotone rearrangement T = G⁻¹ ∘ F of the normalized cumulative masses. The
2-D first-stage solver must reproduce T along every horizontal line.
"""

import logging
from typing import Optional

import numpy as np
from scipy import integrate as sp_integrate

from errors import PreconditionError
from fields.field import ScalarField
from fields.operators import integrate
from pipeline.config import PipelineConfig
from pipeline.stages import solve_unit_jacobian

logger = logging.getLogger(__name__)


def monotone_transport_map(f_profile: np.ndarray, g_profile: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    T with (g ∘ T)·T′ = f on the 1-D nodes x.

    Both cumulative masses come from the trapezoid rule and are normalized to
    the interval length; G is inverted by monotone linear interpolation.

    Raises:
        PreconditionError: If a profile is not strictly positive or the shapes disagree
    """
    f_profile = np.asarray(f_profile, dtype=float)
    g_profile = np.asarray(g_profile, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (f_profile.shape == g_profile.shape == x.shape) or x.ndim != 1:
        raise PreconditionError("Profiles and nodes must be 1-D arrays of the same length")
    if f_profile.min() <= 0 or g_profile.min() <= 0:
        raise PreconditionError("Transport profiles must be strictly positive")

    length = x[-1] - x[0]
    F = sp_integrate.cumulative_trapezoid(f_profile, x, initial=0.0)
    G = sp_integrate.cumulative_trapezoid(g_profile, x, initial=0.0)
    F = x[0] + length * F / F[-1]
    G = x[0] + length * G / G[-1]
    return np.interp(F, G, x)


def oracle_compare_1d(profile: ScalarField, config: Optional[PipelineConfig] = None,
                      row_tol: float = 1e-12) -> float:
    """
    Max deviation of the first-stage x-displacement from the exact 1-D map on the midline.

    Args:
        profile: y-independent positive density with ∫profile = meas Ω
        config: Solve settings for the first stage (default for the profile's grid)
        row_tol: Allowed variation across y, relative to the profile's max

    Returns:
        max |u_x(x, y_mid) - (T(x) - x)|

    Raises:
        PreconditionError: If the profile varies in y, is not positive, or has the wrong mass
    """
    grid = profile.grid
    values = profile.values
    if grid.n_dim != 2:
        raise PreconditionError("The 1-D oracle compares 2-D solves only")
    if np.max(np.abs(values - values[:, :1])) > row_tol * profile.max_abs():
        raise PreconditionError("Oracle profile must not depend on y")
    if values.min() <= 0:
        raise PreconditionError("Oracle profile must be strictly positive")
    config = config or PipelineConfig(grid_n=max(max(grid.shape), 17))
    measure = grid.box.measure
    mass = integrate(profile)
    if abs(mass - measure) > config.mass_tol * measure:
        raise PreconditionError(f"Oracle profile must have mass meas Ω = {measure}, got {mass:.6g}")

    x = grid.axes()[0]
    exact = monotone_transport_map(values[:, 0], np.ones_like(x), x) - x

    phi = solve_unit_jacobian(profile, config)
    mid = grid.shape[1] // 2
    deviation = float(np.max(np.abs(phi.displacement.components[0][:, mid] - exact)))
    logger.info(f"1-D oracle on {grid.shape}: deviation {deviation:.3e}")
    return deviation
