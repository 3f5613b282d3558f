"""
Output Writer - Field CSVs, JSON Report and PGM Renders
=======================================================

Files written into the run's output directory:
- displacement_x.csv, displacement_y.csv: components of φ - id
- jacobian.csv: det ∇φ at the nodes
- report.json: the SolveReport (schema "jf-report-1")
- with render: jacobian.pgm and residual.pgm, 8-bit grayscale with a linear
  min-max scaling that is recorded under "renders" in the report
"""

from pathlib import Path
from typing import Dict, Optional
import logging

import numpy as np
from PIL import Image

from diffeo.algebra import pullback_density
from diffeo.diffeomorphism import Diffeomorphism
from fields.field import ScalarField
from handlers.file_handler import write_array_csv
from handlers.run_config import RunConfig
from pipeline.report import SolveReport

logger = logging.getLogger(__name__)


def render_pgm(values: np.ndarray, path: Path) -> Dict[str, object]:
    """
    Save a 2-D node array as a binary PGM (P5), y pointing up.

    Returns:
        {"file", "min", "max"} describing the scaling
    """
    lo = float(np.min(values))
    hi = float(np.max(values))
    if hi > lo:
        scaled = np.rint(255.0 * (values - lo) / (hi - lo))
    else:
        scaled = np.zeros_like(values)
    pixels = np.ascontiguousarray(scaled.astype(np.uint8).T[::-1])
    Image.fromarray(pixels).save(path, format='PPM')
    return {"file": path.name, "min": lo, "max": hi}


def write_outputs(report: SolveReport, phi: Diffeomorphism, config: RunConfig,
                  f: Optional[ScalarField] = None, g: Optional[ScalarField] = None) -> SolveReport:
    """
    Write the solve's fields, report and optional renders.

    Args:
        report: Report of the solve
        phi: The map
        config: Run settings (output directory, render flag)
        f, g: Densities, needed for the residual render

    Returns:
        The report as written (with render scalings filled in)

    Raises:
        InputError: If the output directory cannot be used
        OSError: Write failures, naming the path
    """
    out = config.ensure_output_dir()
    grid = phi.grid
    jacobian = phi.jacobian().values

    for axis, name in enumerate(('displacement_x', 'displacement_y')):
        write_array_csv(phi.displacement.components[axis], grid, out / f"{name}.csv")
    write_array_csv(jacobian, grid, out / "jacobian.csv")

    if config.render:
        renders = {"jacobian": render_pgm(jacobian, out / "jacobian.pgm")}
        if f is not None and g is not None:
            residual = pullback_density(g, phi, check_orientation=False).values - f.values
            renders["residual"] = render_pgm(residual, out / "residual.pgm")
        report = report.model_copy(update={"renders": renders})

    (out / "report.json").write_text(report.to_json(), encoding='utf-8')
    logger.info(f"Wrote outputs to {out}")
    return report
