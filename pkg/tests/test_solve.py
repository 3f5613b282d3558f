"""End-to-end pullback solves on gallery pairs."""

import numpy as np
import pytest

from errors import DomainError, MassBalanceError, PipelineError, PreconditionError
from fields.field import ScalarField
from fields.grid import Box, Grid
from fields.operators import integrate
from geometry.domain import band_mask
from handlers.gallery import solvable_pair
from pipeline.config import PipelineConfig
from pipeline.solve import COMPOSED_STAGES, solve_pullback, solve_with_margin


class TestComposed:
    def test_all_gates_pass(self, twin_bumps_solution):
        _, _, _, report = twin_bumps_solution
        assert report.gates() == []
        assert report.method == 'composed'
        assert report.residual_max <= 2e-2

    def test_identity_outside_omega_prime(self, twin_bumps_solution):
        f, _, phi, report = twin_bumps_solution
        omega_prime = Box(*report.omega_prime)
        outside = ~f.grid.node_mask(omega_prime, closed=False)
        assert all(np.all(c[outside] == 0.0) for c in phi.displacement.components)
        assert report.max_displacement_outside_omega_prime == 0.0
        assert omega_prime.contains_box(phi.support_box)

    def test_orientation_and_mass(self, twin_bumps_solution):
        _, _, phi, report = twin_bumps_solution
        assert phi.min_jacobian() > 0
        assert report.transported_mass_error <= 1e-3
        assert report.normalized_mass_error <= 1e-10

    def test_stage_diagnostics(self, twin_bumps_solution):
        _, _, _, report = twin_bumps_solution
        assert report.collar_displacement <= report.collar_tol
        assert report.h_min > 0
        assert report.h_mass_error <= 1e-3
        assert report.collar_width > 0
        assert report.h_collar_deviation <= 1e-6
        assert 0.9 < report.lam < 1.0
        assert set(report.timings) <= set(COMPOSED_STAGES)
        assert {'stage_a', 'stage_b', 'compose', 'verify'} <= set(report.timings)


def test_direct_method(twin_bumps_direct):
    _, _, phi, report = twin_bumps_direct
    assert report.method == 'direct'
    assert report.max_displacement_outside_omega_prime == 0.0
    assert report.min_det > 0
    assert report.residual_max <= report.method_tol
    assert report.collar_displacement is None


def test_method_dispatch(twin_bumps_65):
    f, g = twin_bumps_65
    _, report = solve_pullback(f, g, PipelineConfig(method='direct', grid_n=65))
    assert report.method == 'direct'


def test_empty_support_returns_identity():
    f, _ = solvable_pair('twin-bumps', 33)
    phi, report = solve_pullback(f, f)
    assert phi.is_identity()
    assert report.support_empty
    assert report.residual_max == 0.0
    assert report.passed


def test_unequal_masses():
    f, g = solvable_pair('twin-bumps', 33)
    with pytest.raises(MassBalanceError) as excinfo:
        solve_pullback(f, g * 1.5)
    assert excinfo.value.stage == 'normalize'


def test_support_at_boundary():
    grid = Grid.unit(33)
    f = ScalarField.from_function(grid, lambda x, y: 1.0 + 0.2 * np.cos(np.pi * x), is_density=True)
    g = ScalarField.constant(grid, integrate(f), is_density=True)
    with pytest.raises(PipelineError) as excinfo:
        solve_pullback(f, g)
    assert excinfo.value.stage == 'subdomain'
    assert isinstance(excinfo.value.cause, DomainError)


class TestMargin:
    def test_band_is_fixed(self, twin_bumps_65):
        f, g = twin_bumps_65
        phi, report = solve_with_margin(f, g, 0.3)
        assert report.margin == pytest.approx(0.15)
        assert report.max_displacement_in_vd == 0.0
        band = band_mask(f.grid, f.grid.box, 0.15, strict=True)
        assert phi.max_displacement(band) == 0.0
        assert report.passed

    @pytest.mark.parametrize('d', [0.0, -0.1, 0.6])
    def test_out_of_range(self, twin_bumps_65, d):
        f, g = twin_bumps_65
        with pytest.raises(PreconditionError):
            solve_with_margin(f, g, d)

    def test_support_closer_than_d(self, twin_bumps_65):
        f, g = twin_bumps_65
        with pytest.raises(PreconditionError, match='closer than'):
            solve_with_margin(f, g, 0.45)


@pytest.mark.slow
@pytest.mark.parametrize('method', ['composed', 'direct'])
@pytest.mark.parametrize('name', ['ring-swap', 'anisotropic-blob', 'oned-profile'])
def test_other_gallery_problems(name, method):
    f, g = solvable_pair(name, 65)
    _, report = solve_pullback(f, g, PipelineConfig(method=method, grid_n=65))
    assert report.gates() == []
    assert report.residual_max <= 2e-2


def test_composed_on_coarse_grid():
    f, g = solvable_pair('twin-bumps', 33)
    _, report = solve_pullback(f, g, PipelineConfig(grid_n=33, steps=16))
    assert report.method == 'composed'
    assert report.gates() == []
