"""
Solvers Package
===============
Numerical engines behind the pullback construction.

This package contains:
- poisson: red-black SOR for the Neumann Poisson problem
- divergence: compactly supported solutions of div w = ρ
- bogovskii: slow quadrature oracle for the divergence problem
- moser: velocity, RK4 particle flow and the pullback residual
"""

from .poisson import neumann_laplacian, solve_neumann_poisson
from .divergence import DivProblem, active_box, marginal_antiderivative, remove_mean, solve_compact_divergence
from .bogovskii import bogovskii_oracle, default_kernel_density
from .moser import FlowProblem, PullbackResidual, integrate_flow, pullback_residual, velocity_at

__all__ = [
    'neumann_laplacian',
    'solve_neumann_poisson',
    'DivProblem',
    'active_box',
    'marginal_antiderivative',
    'remove_mean',
    'solve_compact_divergence',
    'bogovskii_oracle',
    'default_kernel_density',
    'FlowProblem',
    'PullbackResidual',
    'integrate_flow',
    'pullback_residual',
    'velocity_at',
]
