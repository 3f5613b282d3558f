"""
Geometry Package
================
Box domains, subdomain and collar selection, and cutoff functions.

This package contains:
- domain: DomainSpec, CollarBand, support distance, Ω′ selection
- cutoff: C² cutoff fields between nested boxes
"""

from .cutoff import CutoffField, bump_profile, make_cutoff, ramp_profile, smoothstep
from .domain import (
    CollarBand,
    DomainSpec,
    band_mask,
    choose_collar_width,
    collar_band,
    default_threshold,
    mask_bounding_box,
    select_subdomain,
    support_bounding_box,
    support_distance,
    support_mask,
)

__all__ = [
    'CutoffField',
    'bump_profile',
    'make_cutoff',
    'ramp_profile',
    'smoothstep',
    'CollarBand',
    'DomainSpec',
    'band_mask',
    'choose_collar_width',
    'collar_band',
    'default_threshold',
    'mask_bounding_box',
    'select_subdomain',
    'support_bounding_box',
    'support_distance',
    'support_mask',
]
