"""
Pipeline Package
================
End-to-end pullback solves.

This package contains:
- config: PipelineConfig and the residual gate method_tol
- report: SolveReport and its gates
- stages: normalization, first-stage map, concordant solve, subdomain solve
- solve: solve_pullback, solve_with_margin and the direct baseline
"""

from .config import PipelineConfig, method_tol
from .report import REPORT_SCHEMA, SolveReport
from .stages import (concordant_jacobian_solve, normalize_pair, reconcile_mass, run_stage,
                     solve_on_subdomain, solve_unit_jacobian)
from .solve import solve_direct, solve_pullback, solve_with_margin

__all__ = [
    'PipelineConfig',
    'method_tol',
    'REPORT_SCHEMA',
    'SolveReport',
    'concordant_jacobian_solve',
    'normalize_pair',
    'reconcile_mass',
    'run_stage',
    'solve_on_subdomain',
    'solve_unit_jacobian',
    'solve_direct',
    'solve_pullback',
    'solve_with_margin',
]
