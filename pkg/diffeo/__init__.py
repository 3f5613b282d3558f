"""
Diffeo Package
==============
Diffeomorphisms stored as displacement fields, and the operations the
construction performs on them.

This package contains:
- diffeomorphism: the Diffeomorphism type
- algebra: preimage, invert, compose, pullback_density, extend_by_identity
"""

from .diffeomorphism import Diffeomorphism
from .algebra import compose, extend_by_identity, invert, preimage, pullback_density

__all__ = [
    'Diffeomorphism',
    'compose',
    'extend_by_identity',
    'invert',
    'preimage',
    'pullback_density',
]
