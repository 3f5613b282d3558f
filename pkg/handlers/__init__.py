"""
Handlers Package
================
Input, output and run plumbing around the solver.

This package contains:
- timeout_handler: Stage timing with a soft runtime budget
- file_handler: Field CSV reading and writing
- gallery: Built-in density pairs
- run_config: CLI settings and density specs
- output_writer: Field CSVs, JSON report and PGM renders
"""

from .timeout_handler import RuntimeBudget, StageTracker
from .file_handler import load_density_csv, load_field_csv, write_array_csv, write_field_csv
from .gallery import PROBLEMS, gallery, solvable_pair
from .run_config import DensitySpec, RunConfig, load_config_file, load_density, parse_density_spec
from .output_writer import render_pgm, write_outputs

__all__ = [
    'RuntimeBudget',
    'StageTracker',
    'load_density_csv',
    'load_field_csv',
    'write_array_csv',
    'write_field_csv',
    'PROBLEMS',
    'gallery',
    'solvable_pair',
    'DensitySpec',
    'RunConfig',
    'load_config_file',
    'load_density',
    'parse_density_spec',
    'render_pgm',
    'write_outputs',
]
