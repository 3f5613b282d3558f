"""
Convergence Studies
===================

Runs a gallery problem over a ladder of grid sizes with the RK4 step count
proportional to N, and fits the empirical order of the pullback residual.
Size points are independent and run on a thread pool (JF_THREADS workers).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from config import get_config
from errors import PreconditionError
from handlers.gallery import solvable_pair
from pipeline.config import PipelineConfig
from pipeline.report import SolveReport
from pipeline.solve import solve_direct, solve_pullback

logger = logging.getLogger(__name__)

EXACT_RESIDUAL = 1e-14
BASE_N = 65


class ConvergenceStudy(BaseModel):
    """One problem solved at increasing resolution."""

    model_config = ConfigDict(allow_inf_nan=False)

    problem: str
    method: str
    sizes: List[int]
    steps: List[int]
    residuals: List[float]
    order: Union[float, Literal['exact']]
    reports: List[SolveReport]

    @field_validator('sizes')
    @classmethod
    def sizes_increasing(cls, sizes: List[int]) -> List[int]:
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"Grid sizes must be strictly increasing, got {sizes}")
        return sizes


class MethodComparison(BaseModel):
    """Composed and direct solves of the same pair; the maps may legitimately differ."""

    model_config = ConfigDict(allow_inf_nan=False)

    problem: str
    grid_n: int
    composed: SolveReport
    direct: SolveReport
    map_distance: float


def steps_for(n: int, base_steps: int) -> int:
    """RK4 steps proportional to N, equal to base_steps at N = 65."""
    return max(4, int(round(base_steps * (n - 1) / (BASE_N - 1))))


def fit_order(sizes: Sequence[int], residuals: Sequence[float]) -> Union[float, str]:
    """
    Least-squares slope of log(residual) against log(h), h = 1/(N - 1).

    Returns:
        The order, or "exact" when every residual is below 1e-14

    Raises:
        PreconditionError: Fewer than two sizes, or a zero residual among nonzero ones
    """
    residuals = np.asarray(residuals, dtype=float)
    if len(sizes) != len(residuals) or len(sizes) < 2:
        raise PreconditionError("Order fitting needs at least two (size, residual) pairs")
    if np.all(residuals < EXACT_RESIDUAL):
        return 'exact'
    if np.any(residuals <= 0):
        raise PreconditionError(f"Cannot fit an order through zero residuals: {residuals.tolist()}")
    h = 1.0 / (np.asarray(sizes, dtype=float) - 1.0)
    slope, _ = np.polyfit(np.log(h), np.log(residuals), 1)
    return float(slope)


def _solve(f, g, config: PipelineConfig):
    if config.method == 'direct':
        return solve_direct(f, g, config)
    return solve_pullback(f, g, config)


def run_convergence(problem_name: str, sizes: Sequence[int],
                    config: Optional[PipelineConfig] = None,
                    params: Optional[Dict[str, Any]] = None,
                    threads: Optional[int] = None) -> ConvergenceStudy:
    """
    Solve a gallery problem at each size and fit the residual order.

    Args:
        problem_name: Gallery problem name
        sizes: Strictly increasing grid sizes
        config: Base settings; grid_n and steps are set per size
        params: Gallery parameters
        threads: Worker count (default JF_THREADS)

    Returns:
        ConvergenceStudy with per-size reports
    """
    sizes = [int(n) for n in sizes]
    base = config or PipelineConfig()
    params = dict(params or {})
    threads = threads or get_config().threads
    logger.info(f"Convergence study '{problem_name}' ({base.method}) over {sizes} with {threads} thread(s)")

    def run_one(n: int) -> SolveReport:
        f, g = solvable_pair(problem_name, n, **params)
        cfg = base.model_copy(update={'grid_n': n, 'steps': steps_for(n, base.steps)})
        _, report = _solve(f, g, cfg)
        logger.info(f"  N = {n}: residual {report.residual_max:.3e}")
        return report

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_one, sizes))
    else:
        reports = [run_one(n) for n in sizes]

    residuals = [r.residual_max for r in reports]
    return ConvergenceStudy(
        problem=problem_name,
        method=base.method,
        sizes=sizes,
        steps=[r.steps for r in reports],
        residuals=residuals,
        order=fit_order(sizes, residuals),
        reports=reports,
    )


def compare_methods(problem_name: str, n: int = BASE_N,
                    config: Optional[PipelineConfig] = None,
                    params: Optional[Dict[str, Any]] = None) -> MethodComparison:
    """Solve one pair with both methods and record the max node distance between the maps."""
    base = config or PipelineConfig(grid_n=n)
    f, g = solvable_pair(problem_name, n, **(params or {}))
    phi_c, composed = solve_pullback(f, g, base.model_copy(update={'method': 'composed', 'grid_n': n}))
    phi_d, direct = solve_direct(f, g, base.model_copy(update={'method': 'direct', 'grid_n': n}))
    distance = float(np.max(np.abs(phi_c.displacement.stacked - phi_d.displacement.stacked)))
    logger.info(f"'{problem_name}' at N = {n}: composed vs direct map distance {distance:.3e}")
    return MethodComparison(problem=problem_name, grid_n=n, composed=composed, direct=direct,
                            map_distance=distance)
