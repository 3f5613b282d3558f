"""Tests for the solve report and its gates."""

import json
import math

import pytest
from pydantic import ValidationError

from pipeline.report import REPORT_SCHEMA, SolveReport


def make_report(**overrides):
    values = dict(
        method='composed',
        grid_shape=[65, 65],
        steps=32,
        residual_max=1e-3,
        residual_l2=1e-4,
        min_det=0.8,
        max_displacement_outside_omega_prime=0.0,
        mass_balance=0.0,
        transported_mass_error=1e-6,
        method_tol=2e-2,
        collar_tol=1e-3,
    )
    values.update(overrides)
    return SolveReport(**values)


def test_passing_report():
    report = make_report()
    assert report.gates() == []
    assert report.passed
    assert report.grid_n == 65
    assert report.schema_id == REPORT_SCHEMA


def test_gates_are_reported_in_order():
    report = make_report(residual_max=0.5, min_det=-0.1, max_displacement_outside_omega_prime=1e-3,
                         transported_mass_error=0.01, collar_displacement=0.1)
    assert report.gates() == ['residual', 'orientation', 'support', 'mass', 'collar']
    assert not report.passed


def test_band_displacement_counts_as_support():
    assert make_report(max_displacement_in_vd=1e-9).gates() == ['support']
    assert make_report(max_displacement_in_vd=0.0).gates() == []


@pytest.mark.parametrize('value', [math.nan, math.inf])
def test_non_finite_metrics_are_rejected(value):
    with pytest.raises(ValidationError):
        make_report(residual_max=value)


def test_unknown_fields_are_rejected():
    with pytest.raises(ValidationError):
        make_report(extra_metric=1.0)


def test_json_uses_schema_alias():
    report = make_report(timings={'stage_a': 0.5}, omega_prime=[[0.25, 0.25], [0.75, 0.75]])
    data = json.loads(report.to_json())
    assert data['schema'] == REPORT_SCHEMA
    assert 'schema_id' not in data
    restored = SolveReport.from_json(report.to_json())
    assert restored == report
