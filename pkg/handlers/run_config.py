"""
Run Configuration - CLI Settings and Density Specs
==================================================

RunConfig is what one CLI invocation resolves to, merged with the
precedence flag > config file > default.

Density specs:
- `gallery:<name>:<src|dst>[:key=value,...]` picks f (src) or g (dst) of a
  gallery pair built on the --grid resolution
- `csv:<path>` or a bare path ending in `.csv` loads a density CSV
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import get_config
from errors import InputError
from fields.field import ScalarField
from handlers.file_handler import load_density_csv
from handlers.gallery import PROBLEMS, gallery
from pipeline.config import PipelineConfig

logger = logging.getLogger(__name__)

ROLES = {'src': 0, 'dst': 1}


@dataclass(frozen=True)
class DensitySpec:
    """One parsed density source."""

    kind: Literal['gallery', 'csv']
    name: Optional[str] = None
    role: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    path: Optional[str] = None


def _parse_value(text: str, spec: str) -> Any:
    lowered = text.strip().lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    try:
        return float(text)
    except ValueError:
        raise InputError(f"Gallery parameter value '{text}' is neither a number nor true/false in '{spec}'")


def parse_density_spec(text: str) -> DensitySpec:
    """
    Parse a density spec string.

    Raises:
        InputError: Unknown scheme, gallery name or role, or malformed key=value pairs
    """
    if text.startswith('csv:'):
        path = text[len('csv:'):]
        if not path:
            raise InputError(f"Empty path in density spec '{text}'")
        return DensitySpec(kind='csv', path=path)
    if text.lower().endswith('.csv') and not text.startswith('gallery:'):
        return DensitySpec(kind='csv', path=text)
    if not text.startswith('gallery:'):
        raise InputError(f"Density spec '{text}' must start with 'gallery:' or 'csv:' or end in '.csv'")

    parts = text.split(':', 3)
    if len(parts) < 3:
        raise InputError(f"Gallery spec '{text}' needs gallery:<name>:<src|dst>")
    _, name, role = parts[:3]
    if name not in PROBLEMS:
        raise InputError(f"Unknown gallery problem '{name}' (known: {', '.join(PROBLEMS)})")
    if role not in ROLES:
        raise InputError(f"Gallery role must be 'src' or 'dst', got '{role}'")

    params: Dict[str, Any] = {}
    if len(parts) == 4 and parts[3]:
        for item in parts[3].split(','):
            key, sep, value = item.partition('=')
            if not sep or not key.strip():
                raise InputError(f"Gallery parameter '{item}' is not key=value in '{text}'")
            params[key.strip()] = _parse_value(value, text)
    return DensitySpec(kind='gallery', name=name, role=role, params=params)


def load_density(spec: DensitySpec, n: int) -> ScalarField:
    """Materialize a parsed spec; gallery densities are built on an n × n grid."""
    if spec.kind == 'csv':
        return load_density_csv(spec.path)
    pair = gallery(spec.name, n, **spec.params)
    return pair[ROLES[spec.role]]


class RunConfig(BaseModel):
    """Resolved settings of one CLI run."""

    model_config = ConfigDict(extra='forbid')

    command: Literal['solve', 'convergence'] = 'solve'
    f: Optional[str] = None
    g: Optional[str] = None
    method: Literal['composed', 'direct'] = 'composed'
    grid: int = Field(65, ge=17)
    steps: int = Field(default_factory=lambda: get_config().default_steps, ge=4)
    margin: Optional[float] = Field(None, gt=0)
    collar_width: Optional[float] = Field(None, gt=0)
    out: str = Field(default_factory=lambda: get_config().output_dir)
    render: bool = False
    problem: Optional[str] = None
    sizes: List[int] = Field(default_factory=lambda: [33, 65, 129])
    verbose: bool = False

    @field_validator('f', 'g')
    @classmethod
    def spec_parses(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_density_spec(value)
        return value

    @field_validator('sizes')
    @classmethod
    def sizes_valid(cls, sizes: List[int]) -> List[int]:
        if not sizes or any(n < 17 for n in sizes):
            raise ValueError(f"Sizes must be at least 17, got {sizes}")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"Sizes must be strictly increasing, got {sizes}")
        return sizes

    @model_validator(mode='after')
    def inputs_present(self) -> 'RunConfig':
        if self.command == 'solve' and (self.f is None or self.g is None):
            raise ValueError("solve needs both --f and --g")
        if self.command == 'convergence':
            if self.problem is None:
                raise ValueError("convergence needs --problem")
            if self.problem not in PROBLEMS:
                raise ValueError(f"Unknown gallery problem '{self.problem}'")
        return self

    @classmethod
    def from_sources(cls, flags: Dict[str, Any], file_values: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """
        Merge settings: explicit flags win over the config file, which wins over defaults.

        Args:
            flags: Parsed flags; None means "not given"
            file_values: Contents of a JSON config file

        Raises:
            InputError: If the merged settings do not validate
        """
        merged: Dict[str, Any] = dict(file_values or {})
        merged.update({k: v for k, v in flags.items() if v is not None})
        try:
            return cls.model_validate(merged)
        except ValidationError as e:
            problems = '; '.join(f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                                 for err in e.errors())
            raise InputError(f"Invalid run configuration: {problems}") from e

    def pipeline_config(self) -> PipelineConfig:
        """Solver settings; --margin is handled by solve_with_margin, not as Ω′'s margin."""
        return PipelineConfig(method=self.method, grid_n=self.grid, steps=self.steps,
                              collar_width=self.collar_width)

    def ensure_output_dir(self) -> Path:
        """
        Create the output directory.

        Raises:
            InputError: If it cannot be created or written
        """
        path = Path(self.out)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise InputError(f"Cannot create output directory: {e}", path=str(path)) from e
        if not os.access(path, os.W_OK):
            raise InputError("Output directory is not writable", path=str(path))
        return path


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON run configuration.

    Raises:
        InputError: Missing file, invalid JSON, or a non-object document
    """
    if not os.path.exists(path):
        raise InputError("Config file not found", path=path)
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid JSON: {e.msg}", path=path, line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise InputError("Config file must hold a JSON object", path=path)
    # Accept flag spellings with dashes as well.
    return {key.replace('-', '_'): value for key, value in data.items()}
