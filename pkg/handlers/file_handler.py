"""
File Handler - Field CSV Reading and Writing
============================================

Fields travel as plain CSV:
- Line 1: `nx,ny,x0,y0,x1,y1` (node counts and the box corners)
- Then ny lines of nx comma-separated values, y increasing, x along a row

Values are written with repr(), the shortest text that parses back to the
same float, so write/load round-trips are bit-exact.

Validation:
- Every problem is reported with the file path and the 1-based line/column
- Densities must be strictly positive; non-finite values are always rejected
"""

import math
import os
from pathlib import Path
from typing import List, Union
import logging

import numpy as np

from errors import InputError
from fields.field import ScalarField
from fields.grid import Grid

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

HEADER_FIELDS = ('nx', 'ny', 'x0', 'y0', 'x1', 'y1')


def _parse_float(text: str, path: str, line: int, column: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"Unparsable number '{text.strip()}'", path=path, line=line, column=column)
    if not math.isfinite(value):
        raise InputError(f"Non-finite value '{text.strip()}'", path=path, line=line, column=column)
    return value


def _parse_header(text: str, path: str) -> Grid:
    parts = text.strip().split(',')
    if len(parts) != len(HEADER_FIELDS):
        raise InputError(f"Header must be {','.join(HEADER_FIELDS)}, got {len(parts)} entries",
                         path=path, line=1)
    counts = []
    for column, part in enumerate(parts[:2], start=1):
        try:
            counts.append(int(part))
        except ValueError:
            raise InputError(f"Node count '{part.strip()}' is not an integer", path=path, line=1, column=column)
    corners = [_parse_float(p, path, 1, column) for column, p in enumerate(parts[2:], start=3)]
    x0, y0, x1, y1 = corners
    try:
        return Grid((counts[0], counts[1]), (x0, y0), (x1 - x0, y1 - y0))
    except ValueError as e:
        raise InputError(f"Invalid grid header: {e}", path=path, line=1)


def load_field_csv(path: PathLike, positive: bool = False) -> ScalarField:
    """
    Read a field CSV.

    Args:
        path: File to read
        positive: Reject values <= 0 and return a density

    Returns:
        ScalarField on the grid described by the header

    Raises:
        InputError: Missing file, malformed header, dimension mismatch,
            unparsable or (with positive=True) non-positive entries
    """
    path = str(path)
    if not os.path.exists(path):
        raise InputError("Field file not found", path=path)

    with open(path, 'r', encoding='utf-8') as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise InputError("Field file is empty", path=path)

    grid = _parse_header(lines[0], path)
    nx, ny = grid.shape
    rows = lines[1:]
    if len(rows) != ny:
        raise InputError(f"Expected {ny} value rows, found {len(rows)}", path=path, line=len(lines))

    values = np.empty((nx, ny))
    for j, row in enumerate(rows):
        line_no = j + 2
        parts = row.split(',')
        if len(parts) != nx:
            raise InputError(f"Expected {nx} values, found {len(parts)}", path=path, line=line_no)
        for i, part in enumerate(parts):
            value = _parse_float(part, path, line_no, i + 1)
            if positive and value <= 0:
                raise InputError(f"Density must be strictly positive, got {value!r}",
                                 path=path, line=line_no, column=i + 1)
            values[i, j] = value

    logger.debug(f"Loaded {nx}×{ny} field from {path}")
    return ScalarField(grid, values, is_density=positive)


def load_density_csv(path: PathLike) -> ScalarField:
    """Read a density CSV; every value must be strictly positive."""
    return load_field_csv(path, positive=True)


def format_field_csv(values: np.ndarray, grid: Grid) -> str:
    """CSV text for node values on a 2-D grid."""
    if grid.n_dim != 2:
        raise InputError(f"CSV fields are 2-D only, got a {grid.n_dim}-D grid")
    nx, ny = grid.shape
    box = grid.box
    header = [str(nx), str(ny), repr(box.lower[0]), repr(box.lower[1]), repr(box.upper[0]), repr(box.upper[1])]
    lines: List[str] = [','.join(header)]
    for j in range(ny):
        lines.append(','.join(repr(float(v)) for v in values[:, j]))
    return '\n'.join(lines) + '\n'


def write_field_csv(field: ScalarField, path: PathLike) -> Path:
    """Write a scalar field as CSV and return the path written."""
    return write_array_csv(field.values, field.grid, path)


def write_array_csv(values: np.ndarray, grid: Grid, path: PathLike) -> Path:
    """Write a node array on a 2-D grid as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_field_csv(np.asarray(values, dtype=float), grid), encoding='utf-8')
    return path
