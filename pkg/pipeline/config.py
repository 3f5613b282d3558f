"""
Pipeline Configuration
======================

Per-solve settings validated with pydantic. Defaults for every tolerance come
from the process-wide `config.Config`.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from config import get_config


def _default(name: str):
    return Field(default_factory=lambda: getattr(get_config(), name))


def method_tol(n: int) -> float:
    """Residual gate for an N-node grid: 2e-2 at N = 65, scaled at second order."""
    return 2e-2 * (64.0 / (n - 1)) ** 1.5


class PipelineConfig(BaseModel):
    """Settings for one pullback solve."""

    model_config = ConfigDict(extra='forbid', validate_assignment=True)

    method: Literal['composed', 'direct'] = 'composed'
    grid_n: int = Field(65, ge=17)
    steps: int = Field(default_factory=lambda: get_config().default_steps, ge=4)
    margin: Optional[float] = Field(None, gt=0)
    collar_width: Optional[float] = Field(None, gt=0)

    support_rel_threshold: float = _default('support_rel_threshold')
    poisson_tol: float = _default('poisson_tol')
    div_tol: float = _default('div_tol')
    max_sweeps: int = _default('max_sweeps')
    mean_tol: float = _default('mean_tol')
    inv_tol: float = _default('inv_tol')
    inv_max_iter: int = _default('inv_max_iter')
    rho_floor: float = _default('rho_floor')
    mass_tol: float = _default('mass_tol')
    post_mass_tol: float = _default('post_mass_tol')
    concord_tol: float = _default('concord_tol')
    concord_pre_tol: float = _default('concord_pre_tol')
    clamp_tol: float = _default('clamp_tol')
    runtime_budget_s: float = _default('runtime_budget_s')

    def residual_gate(self, n: Optional[int] = None) -> float:
        return method_tol(self.grid_n if n is None else n)
