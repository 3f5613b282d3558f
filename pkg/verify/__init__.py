"""
Verify Package
==============
Convergence studies and independent oracles.

This package contains:
- convergence: size ladders, order fitting, composed vs direct comparison
- oracle: exact 1-D monotone transport for y-independent profiles
"""

from .convergence import ConvergenceStudy, MethodComparison, compare_methods, fit_order, run_convergence, steps_for
from .oracle import monotone_transport_map, oracle_compare_1d

__all__ = [
    'ConvergenceStudy',
    'MethodComparison',
    'compare_methods',
    'fit_order',
    'run_convergence',
    'steps_for',
    'monotone_transport_map',
    'oracle_compare_1d',
]
