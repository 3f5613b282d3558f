"""
Solve Report
============

Everything measured about one solve, serialized as `report.json`
(schema "jf-report-1"). Optional entries are None when a method has no such
stage; a NaN or infinite value never validates.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

REPORT_SCHEMA = "jf-report-1"
MASS_GATE_TOL = 1e-3

GATES = ('residual', 'orientation', 'support', 'mass', 'collar')


class SolveReport(BaseModel):
    """Metrics and gate thresholds of a pullback solve."""

    model_config = ConfigDict(allow_inf_nan=False, populate_by_name=True, extra='forbid')

    schema_id: str = Field(REPORT_SCHEMA, alias='schema')
    method: str
    grid_shape: List[int]
    steps: int
    margin: Optional[float] = None
    omega_prime: Optional[List[List[float]]] = None
    collar_width: Optional[float] = None
    lam: Optional[float] = None

    residual_max: float
    residual_l2: float
    min_det: float
    max_displacement_outside_omega_prime: float
    max_displacement_in_vd: Optional[float] = None
    mass_balance: float
    transported_mass_error: float
    normalized_mass_error: Optional[float] = None

    stage_a_residual: Optional[float] = None
    h_min: Optional[float] = None
    h_max: Optional[float] = None
    h_mass_error: Optional[float] = None
    h_collar_deviation: Optional[float] = None
    stage_b_residual: Optional[float] = None
    collar_displacement: Optional[float] = None
    snap_ratio: Optional[float] = None
    div_residual: Optional[float] = None

    method_tol: float
    collar_tol: float
    mass_tol: float = MASS_GATE_TOL

    timings: Dict[str, float] = Field(default_factory=dict)
    total_seconds: float = 0.0
    budget_exceeded: bool = False
    support_empty: bool = False
    renders: Dict[str, Dict[str, Any]] = Field(default_factory=dict)

    @property
    def grid_n(self) -> int:
        return max(self.grid_shape)

    def gates(self) -> List[str]:
        """Names of the failed gates, in a fixed order; empty when the solve passes."""
        failed = []
        if self.residual_max > self.method_tol:
            failed.append('residual')
        if self.min_det <= 0:
            failed.append('orientation')
        if self.max_displacement_outside_omega_prime != 0.0 or (
                self.max_displacement_in_vd is not None and self.max_displacement_in_vd != 0.0):
            failed.append('support')
        if self.transported_mass_error > self.mass_tol:
            failed.append('mass')
        if self.collar_displacement is not None and self.collar_displacement > self.collar_tol:
            failed.append('collar')
        return failed

    @property
    def passed(self) -> bool:
        return not self.gates()

    def to_json(self, indent: Optional[int] = 2) -> str:
        return self.model_dump_json(by_alias=True, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> 'SolveReport':
        return cls.model_validate_json(text)
