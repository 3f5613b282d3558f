"""Tests for subdomain and collar selection."""

import numpy as np
import pytest

from errors import DomainError, FieldError
from fields.field import ScalarField
from fields.grid import Box, Grid
from geometry.domain import (CollarBand, DomainSpec, band_mask, choose_collar_width, select_subdomain,
                             support_bounding_box, support_distance)

N = 33
H = 1.0 / (N - 1)


@pytest.fixture
def plateau_pair():
    """f = 1 and g = 1.5 on the closed box [0.375, 0.625]^2."""
    grid = Grid.unit(N)
    f = ScalarField.constant(grid, 1.0, is_density=True)
    mask = grid.node_mask(Box((0.375, 0.375), (0.625, 0.625)))
    g = ScalarField(grid, np.where(mask, 1.5, 1.0), is_density=True)
    return grid, f, g


def test_support_distance(plateau_pair):
    _, f, g = plateau_pair
    assert support_distance(f, g) == pytest.approx(0.375)
    assert support_distance(f, f) == pytest.approx(0.5)


def test_support_bounding_box(plateau_pair):
    _, f, g = plateau_pair
    assert support_bounding_box(f, g) == Box((0.375, 0.375), (0.625, 0.625))
    assert support_bounding_box(f, f) is None


def test_mismatched_grids(plateau_pair):
    _, f, _ = plateau_pair
    with pytest.raises(FieldError):
        support_distance(f, ScalarField.constant(Grid.unit(17), 1.0))


def test_select_subdomain_default_margin(plateau_pair):
    grid, f, g = plateau_pair
    omega_prime = select_subdomain(DomainSpec(grid.box), f, g)
    assert omega_prime == Box((0.1875, 0.1875), (0.8125, 0.8125))


def test_select_subdomain_forced_margin_too_large(plateau_pair):
    grid, f, g = plateau_pair
    with pytest.raises(DomainError, match='support too close to boundary'):
        select_subdomain(DomainSpec(grid.box, margin=0.4), f, g)


def test_support_touching_boundary():
    grid = Grid.unit(N)
    f = ScalarField.constant(grid, 1.0, is_density=True)
    values = np.ones(grid.shape)
    values[0, 10] = 2.0
    g = ScalarField(grid, values, is_density=True)
    assert support_distance(f, g) == 0.0
    with pytest.raises(DomainError, match='support too close to boundary'):
        select_subdomain(DomainSpec(grid.box), f, g)


def test_collar_width_defaults_to_half_gap(plateau_pair):
    grid, f, g = plateau_pair
    omega_prime = select_subdomain(DomainSpec(grid.box), f, g)
    eps = choose_collar_width(grid, omega_prime, f, g)
    assert eps == pytest.approx(3 * H)


def test_requested_collar_width_is_validated(plateau_pair):
    grid, f, g = plateau_pair
    omega_prime = select_subdomain(DomainSpec(grid.box), f, g)
    assert choose_collar_width(grid, omega_prime, f, g, requested=2 * H) == 2 * H
    with pytest.raises(DomainError):
        choose_collar_width(grid, omega_prime, f, g, requested=4 * H)


class TestDomainSpec:
    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            DomainSpec(Box.unit(), margin=0.0)
        with pytest.raises(DomainError):
            DomainSpec(Box.unit(), collar_width=-0.1)

    def test_margin_plus_collar_below_inradius(self):
        with pytest.raises(DomainError):
            DomainSpec(Box.unit(), margin=0.3, collar_width=0.25)

    def test_omega_prime(self):
        assert DomainSpec(Box.unit(), margin=0.25).omega_prime == Box((0.25, 0.25), (0.75, 0.75))
        with pytest.raises(DomainError):
            DomainSpec(Box.unit()).omega_prime


class TestCollarBand:
    def test_width_range(self):
        with pytest.raises(DomainError):
            CollarBand(Box.unit(), 0.5)
        with pytest.raises(DomainError):
            CollarBand(Box.unit(), 0.0)

    def test_core_and_mask(self):
        grid = Grid.unit(9)
        band = CollarBand(Box((0.125, 0.125), (0.875, 0.875)), 0.125)
        assert band.core == Box((0.25, 0.25), (0.75, 0.75))
        mask = band.node_mask(grid)
        assert mask.sum() == 49 - 9
        assert band.widened(0.125).node_mask(grid).sum() == 49 - 1

    def test_band_mask_strict(self):
        grid = Grid.unit(9)
        assert band_mask(grid, grid.box, 0.125).sum() == 81 - 25
        assert band_mask(grid, grid.box, 0.125, strict=True).sum() == 81 - 49


def test_select_subdomain_holds_random_supports():
    grid = Grid.unit(N)
    nodes = grid.node_coordinates()
    f = ScalarField.constant(grid, 1.0, is_density=True)
    rng = np.random.default_rng(11)
    for _ in range(50):
        lo = rng.integers(2, N - 3, size=2)
        hi = np.array([rng.integers(a, N - 2) for a in lo])
        support = Box(tuple(lo * H), tuple(hi * H))
        g = ScalarField(grid, np.where(grid.node_mask(support), 1.0 + rng.uniform(0.1, 1.0), 1.0),
                        is_density=True)

        omega_prime = select_subdomain(DomainSpec(grid.box), f, g)
        assert grid.box.contains_box(omega_prime)
        moving = np.abs(f.values - g.values) > 0
        assert np.all(grid.node_mask(omega_prime, closed=False)[moving])
        assert omega_prime.distance_to_boundary(nodes[moving]).min() >= H * (1 - 1e-9)
