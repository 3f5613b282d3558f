"""Tests for the exact 1-D transport oracle."""

import numpy as np
import pytest

from errors import PreconditionError
from handlers.gallery import gallery
from verify.oracle import monotone_transport_map, oracle_compare_1d


def test_equal_profiles_give_identity():
    x = np.linspace(0.0, 1.0, 33)
    profile = 1.0 + 0.5 * np.sin(3 * x)
    np.testing.assert_array_equal(monotone_transport_map(profile, profile, x), x)


def test_linear_profile_against_uniform():
    x = np.linspace(0.0, 1.0, 65)
    T = monotone_transport_map(0.5 + x, np.ones_like(x), x)
    np.testing.assert_allclose(T, 0.5 * x + 0.5 * x ** 2, atol=1e-14)


def test_transport_map_is_monotone():
    x = np.linspace(0.0, 1.0, 65)
    T = monotone_transport_map(1.0 + 0.9 * np.cos(5 * x), 2.0 - x, x)
    assert np.all(np.diff(T) > 0)
    assert T[0] == 0.0 and T[-1] == pytest.approx(1.0)


def test_invalid_profiles():
    x = np.linspace(0.0, 1.0, 9)
    with pytest.raises(PreconditionError):
        monotone_transport_map(np.zeros(9), np.ones(9), x)
    with pytest.raises(PreconditionError):
        monotone_transport_map(np.ones(8), np.ones(9), x)


def test_first_stage_matches_exact_map():
    f, _ = gallery('oned-profile', 65)
    assert oracle_compare_1d(f) <= 3e-2


@pytest.mark.slow
def test_deviation_shrinks_under_refinement():
    coarse = oracle_compare_1d(gallery('oned-profile', 65)[0])
    fine = oracle_compare_1d(gallery('oned-profile', 129)[0])
    assert 3.0 <= coarse / fine <= 5.0


def test_rejects_y_dependent_profile():
    f, _ = gallery('twin-bumps', 33)
    with pytest.raises(PreconditionError, match='depend on y'):
        oracle_compare_1d(f)


def test_rejects_wrong_mass():
    f, _ = gallery('oned-profile', 33)
    with pytest.raises(PreconditionError, match='mass'):
        oracle_compare_1d(f * 1.5)
