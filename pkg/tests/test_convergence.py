"""Tests for refinement studies and method comparison."""

import pytest
from pydantic import ValidationError

from errors import PreconditionError
from pipeline.config import PipelineConfig
from verify.convergence import ConvergenceStudy, compare_methods, fit_order, run_convergence, steps_for


def test_steps_scale_with_grid():
    assert steps_for(65, 32) == 32
    assert steps_for(129, 32) == 64
    assert steps_for(33, 32) == 16
    assert steps_for(17, 8) == 4


def test_fit_order_second_order():
    sizes = [33, 65, 129]
    residuals = [3.0 / (n - 1) ** 2 for n in sizes]
    assert fit_order(sizes, residuals) == pytest.approx(2.0)


def test_fit_order_exact():
    assert fit_order([33, 65], [0.0, 1e-16]) == 'exact'


@pytest.mark.parametrize('sizes, residuals', [
    ([33], [1e-3]),
    ([33, 65], [1e-3, 0.0]),
    ([33, 65], [1e-3]),
])
def test_fit_order_rejects(sizes, residuals):
    with pytest.raises(PreconditionError):
        fit_order(sizes, residuals)


def test_study_sizes_must_increase():
    with pytest.raises(ValidationError):
        ConvergenceStudy(problem='twin-bumps', method='composed', sizes=[65, 33], steps=[32, 16],
                         residuals=[1e-2, 4e-2], order=2.0, reports=[])


@pytest.mark.slow
@pytest.mark.parametrize('method', ['composed', 'direct'])
def test_twin_bumps_study(method):
    study = run_convergence('twin-bumps', [33, 65, 129], config=PipelineConfig(method=method), threads=2)
    assert study.sizes == [33, 65, 129]
    assert study.steps == [16, 32, 64]
    assert all(report.passed for report in study.reports)
    assert 1.5 <= study.order <= 2.5


@pytest.mark.slow
def test_compare_methods():
    comparison = compare_methods('twin-bumps', 65)
    assert comparison.composed.passed
    assert comparison.direct.min_det > 0
    assert comparison.map_distance >= 0.0
