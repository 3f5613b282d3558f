"""Tests for the compactly supported divergence solver."""

import numpy as np
import pytest

from errors import AnnulusCorrectionError, PreconditionError
from fields.field import ScalarField
from fields.grid import Box, Grid
from fields.operators import divergence, integrate
from solvers.divergence import (
    DivProblem, active_box, parity_antiderivative, parity_classes, remove_mean, solve_compact_divergence,
)

INNER = Box((0.3125, 0.3125), (0.6875, 0.6875))
SUPPORT = Box((0.1875, 0.1875), (0.8125, 0.8125))


def cos_bump(cx, cy, radius):
    def bump(x, y):
        r = np.hypot(x - cx, y - cy)
        return np.where(r < radius, np.cos(np.pi * r / (2 * radius)) ** 2, 0.0)
    return bump


def dipole(grid):
    """Mirror-symmetric bump pair of opposite sign: zero mean on a symmetric grid."""
    left, right = cos_bump(0.42, 0.5, 0.08), cos_bump(0.58, 0.5, 0.08)
    return ScalarField.from_function(grid, lambda x, y: left(x, y) - right(x, y))


def test_dipole_solution():
    grid = Grid.unit(33)
    rho = dipole(grid)
    history = []
    w = solve_compact_divergence(DivProblem(rho, SUPPORT, INNER), history=history)

    residual = np.max(np.abs(divergence(w).values - rho.values))
    assert residual <= 1e-3 * rho.max_abs()
    outside = ~grid.node_mask(SUPPORT, closed=False)
    assert all(np.all(c[outside] == 0.0) for c in w.components)
    assert history[-1] <= 1e-3 * rho.max_abs()
    assert all(b < a for a, b in zip(history, history[1:]))


def test_zero_source():
    grid = Grid.unit(17)
    w = solve_compact_divergence(DivProblem(ScalarField.constant(grid, 0.0), SUPPORT, INNER))
    assert w.is_zero()


def test_nonzero_mean_is_rejected():
    grid = Grid.unit(33)
    rho = ScalarField.from_function(grid, cos_bump(0.5, 0.5, 0.1))
    with pytest.raises(PreconditionError, match='zero mean'):
        solve_compact_divergence(DivProblem(rho, SUPPORT, INNER))


def test_source_outside_inner_box_is_rejected():
    grid = Grid.unit(33)
    left, right = cos_bump(0.25, 0.5, 0.05), cos_bump(0.75, 0.5, 0.05)
    rho = ScalarField.from_function(grid, lambda x, y: left(x, y) - right(x, y))
    with pytest.raises(PreconditionError, match='outside inner box'):
        solve_compact_divergence(DivProblem(rho, SUPPORT, INNER))


def test_boxes_must_nest():
    grid = Grid.unit(33)
    with pytest.raises(PreconditionError):
        solve_compact_divergence(DivProblem(dipole(grid), INNER, SUPPORT))


def test_exhausted_sweeps():
    grid = Grid.unit(33)
    with pytest.raises(AnnulusCorrectionError, match='annulus correction failed') as excinfo:
        solve_compact_divergence(DivProblem(dipole(grid), SUPPORT, INNER), div_tol=1e-15, max_sweeps=0)
    assert len(excinfo.value.history) == 1


def test_remove_mean_keeps_support():
    grid = Grid.unit(33)
    rho = ScalarField.from_function(grid, cos_bump(0.5, 0.5, 0.1))
    balanced = remove_mean(rho, INNER)
    assert abs(integrate(balanced)) <= 1e-12
    outside = ~grid.node_mask(INNER)
    assert np.all(balanced.values[outside] == 0.0)


def test_active_box():
    grid = Grid.unit(33)
    assert active_box(grid, SUPPORT) == Box((0.21875, 0.21875), (0.78125, 0.78125))


def test_active_box_keeps_clear_of_grid_faces():
    grid = Grid.unit(33)
    assert active_box(grid, grid.box) == Box((0.0625, 0.0625), (0.9375, 0.9375))


def random_dipole(grid, rng):
    """Two cosine bumps of opposite sign at random places inside INNER, mean removed."""
    radii = rng.uniform(0.06, 0.1, size=2)
    bumps = []
    for radius in radii:
        cx, cy = rng.uniform(INNER.lower[0] + radius, INNER.upper[0] - radius, size=2)
        bumps.append(cos_bump(cx, cy, radius))
    a, b = rng.uniform(0.5, 2.0, size=2)
    rho = ScalarField.from_function(grid, lambda x, y: a * bumps[0](x, y) - b * bumps[1](x, y))
    return remove_mean(rho, INNER)


def test_randomized_dipoles():
    grid = Grid.unit(33)
    rng = np.random.default_rng(20240601)
    outside = ~grid.node_mask(SUPPORT, closed=False)
    for _ in range(100):
        rho = random_dipole(grid, rng)
        history = []
        w = solve_compact_divergence(DivProblem(rho, SUPPORT, INNER), history=history)

        residual = np.max(np.abs(divergence(w).values - rho.values))
        assert residual <= 1e-3 * rho.max_abs()
        assert all(np.all(c[outside] == 0.0) for c in w.components)
        assert all(b < a for a, b in zip(history, history[1:]))


def test_parity_antiderivative_inverts_central_difference():
    rng = np.random.default_rng(7)
    values = rng.standard_normal(21)
    for parity in (0, 1):
        values[parity::2] -= values[parity::2].mean()
    h = 0.05

    c = parity_antiderivative(values, h, axis=0)
    assert c[0] == 0.0 and c[-1] == 0.0
    # Zero padding: the antiderivative vanishes beyond both ends.
    padded = np.pad(c, 3)
    np.testing.assert_allclose(np.gradient(padded, h)[3:-3], values, atol=1e-12)


def test_remove_mean_balances_parity_classes():
    grid = Grid.unit(33)
    rho = ScalarField.from_function(grid, cos_bump(0.45, 0.55, 0.1))
    balanced = remove_mean(rho, INNER)
    for cls in parity_classes(grid.shape):
        assert abs(balanced.values[cls].sum()) <= 1e-12


def test_unbalanced_parity_classes_are_reported():
    # Zero mean, but the +1 and -1 sit in different parity classes.
    grid = Grid.unit(33)
    values = np.zeros(grid.shape)
    values[16, 16], values[16, 17] = 1.0, -1.0
    with pytest.raises(AnnulusCorrectionError, match='annulus correction failed'):
        solve_compact_divergence(DivProblem(ScalarField(grid, values), SUPPORT, INNER))
