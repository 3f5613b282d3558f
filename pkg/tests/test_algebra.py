"""Tests for inversion, composition, pullback and extension."""

import numpy as np
import pytest

from diffeo.algebra import compose, extend_by_identity, invert, preimage, pullback_density
from diffeo.diffeomorphism import Diffeomorphism
from errors import DomainError, PreconditionError
from fields.field import ScalarField, VectorField
from fields.grid import Box, Grid
from geometry.cutoff import make_cutoff

INNER = Box((0.375, 0.375), (0.625, 0.625))
OUTER = Box((0.25, 0.25), (0.75, 0.75))


def bump_map(grid, ax=0.03, ay=-0.02):
    cut = make_cutoff(INNER, OUTER, grid).values
    return Diffeomorphism(grid, VectorField(grid, (ax * cut, ay * cut)), OUTER)


@pytest.fixture
def grid():
    return Grid.unit(33)


def test_invert_round_trip(grid):
    phi = bump_map(grid)
    psi = invert(phi)
    assert psi.inverse_of is phi
    assert invert(psi) is phi
    assert compose(phi, psi).max_displacement() <= 1e-6
    assert compose(psi, phi).max_displacement() <= 1e-6


def test_invert_keeps_exact_identity_outside_support(grid):
    psi = invert(bump_map(grid))
    outside = ~grid.node_mask(OUTER)
    assert psi.max_displacement(outside) == 0.0


def test_preimage_fixed_point(grid):
    phi = bump_map(grid)
    points = np.array([[0.1, 0.9], [0.5, 0.5], [0.45, 0.6]])
    z = preimage(phi, points)
    np.testing.assert_array_equal(z[0], points[0])
    np.testing.assert_allclose(phi.apply(z), points, atol=1e-9)


def test_invert_rejects_folding_map(grid):
    u = VectorField.from_function(grid, [lambda x, y: -2.0 * x, lambda x, y: 0.0 * y])
    with pytest.raises(PreconditionError):
        invert(Diffeomorphism(grid, u))


def test_identity_shortcuts(grid):
    phi = bump_map(grid)
    ident = Diffeomorphism.identity(grid, OUTER)
    assert compose(phi, ident) is phi
    assert compose(ident, phi) is phi
    assert invert(ident).is_identity()


def test_compose_support_union(grid):
    a = bump_map(grid)
    other = Box((0.3, 0.2), (0.7, 0.8))
    cut = make_cutoff(Box((0.4, 0.4), (0.6, 0.6)), other, grid).values
    b = Diffeomorphism(grid, VectorField(grid, (0.0 * cut, 0.02 * cut)), other)
    assert compose(a, b).support_box == Box((0.25, 0.2), (0.75, 0.8))


def test_compose_rejects_overshoot(grid):
    shift = Diffeomorphism(grid, VectorField.from_function(grid, [lambda x, y: 0.0 * x + 0.1,
                                                                  lambda x, y: 0.0 * y]))
    with pytest.raises(DomainError):
        compose(bump_map(grid), shift)


def test_pullback_through_identity(grid):
    g = ScalarField.from_function(grid, lambda x, y: 1.0 + x * y, is_density=True)
    pulled = pullback_density(g, Diffeomorphism.identity(grid))
    np.testing.assert_allclose(pulled.values, g.values, atol=1e-14)


def test_pullback_of_jacobian_through_inverse_is_one(grid):
    phi = bump_map(grid)
    jac = ScalarField(grid, phi.jacobian().values)
    pulled = pullback_density(jac, invert(phi))
    np.testing.assert_allclose(pulled.values, 1.0, atol=1e-12)


def test_pullback_rejects_folding(grid):
    u = VectorField.from_function(grid, [lambda x, y: -2.0 * x, lambda x, y: 0.0 * y])
    g = ScalarField.constant(grid, 1.0)
    with pytest.raises(PreconditionError):
        pullback_density(g, Diffeomorphism(grid, u))
    flipped = pullback_density(g, Diffeomorphism(grid, u), check_orientation=False)
    assert flipped.values.min() < 0


def test_extend_by_identity():
    box = Box((0.125, 0.125), (0.875, 0.875))
    sub = Grid.over(box, (25, 25))
    phi = bump_map(sub)
    full = Grid.unit(33)
    extended = extend_by_identity(phi, box, full)
    assert extended.support_box == OUTER
    assert extended.max_displacement(~full.node_mask(OUTER)) == 0.0
    _, slices = full.subgrid(box)
    np.testing.assert_array_equal(extended.displacement.components[0][slices], phi.displacement.components[0])


def test_extend_requires_interior_support():
    box = Box((0.25, 0.25), (0.75, 0.75))
    sub = Grid.over(box, (17, 17))
    phi = bump_map(sub)
    with pytest.raises(PreconditionError):
        extend_by_identity(phi, box, Grid.unit(33))
    with pytest.raises(PreconditionError):
        extend_by_identity(Diffeomorphism.identity(sub), box, Grid.unit(33))


@pytest.mark.parametrize('fixture', ['twin_bumps_solution', 'twin_bumps_direct'])
def test_inverse_cancels_solved_maps(request, fixture):
    _, _, phi, _ = request.getfixturevalue(fixture)
    psi = invert(phi)
    assert compose(psi, phi).max_displacement() <= 1e-6
    assert compose(phi, psi).max_displacement() <= 1e-6
