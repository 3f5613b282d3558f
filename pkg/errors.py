"""
Error Types
===========

Exception hierarchy for the pullback flow solver.

- Validation problems (bad grids, boxes, inputs, violated preconditions)
  subclass ValueError.
- Numerical failures (non-convergence, floor breaches, failed concordance)
  subclass RuntimeError and carry whatever trace the caller needs to diagnose
  them (residual history, node index, stage name).
"""

from typing import Any, List, Optional, Sequence


class FieldError(ValueError):
    """Malformed grid or field data, or a non-finite query point."""


class DomainError(ValueError):
    """Box, margin or collar geometry that violates its invariants."""


class PreconditionError(ValueError):
    """An operation was called with inputs outside its contract."""


class InputError(ValueError):
    """Unreadable or malformed user input (CSV files, density specs, flags)."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
                if column is not None:
                    location += f":{column}"
            location += ": "
        super().__init__(f"{location}{message}")


class SolverError(RuntimeError):
    """Iterative solver failure; `history` holds the residual trace."""

    def __init__(self, message: str, history: Optional[Sequence[float]] = None):
        self.history: List[float] = [float(r) for r in (history or [])]
        if self.history:
            message = f"{message} (last residual {self.history[-1]:.3e} after {len(self.history)} checks)"
        super().__init__(message)


class PoissonConvergenceError(SolverError):
    """Red-black relaxation did not reach the requested residual."""


class AnnulusCorrectionError(SolverError):
    """Correction sweeps of the compact divergence solve stagnated."""


class FlowError(RuntimeError):
    """Particle flow breakdown: density floor breached or non-finite trajectory."""


class InversionError(RuntimeError):
    """Per-node inversion did not converge."""

    def __init__(self, message: str, node: Optional[Sequence[int]] = None,
                 last_iterate: Optional[Sequence[float]] = None):
        self.node = tuple(int(i) for i in node) if node is not None else None
        self.last_iterate = tuple(float(v) for v in last_iterate) if last_iterate is not None else None
        if self.node is not None:
            message = f"{message} at node {self.node} (last iterate {self.last_iterate})"
        super().__init__(message)


class PipelineError(RuntimeError):
    """Failure inside one stage of a pullback solve."""

    def __init__(self, message: str, stage: str = "pipeline", cause: Optional[BaseException] = None):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {message}")


class MassBalanceError(PipelineError):
    """Input densities do not carry the same total volume."""

    def __init__(self, message: str = "unequal total volume", stage: str = "normalize", **kwargs: Any):
        super().__init__(message, stage=stage, **kwargs)


class ConcordanceError(PipelineError):
    """The concordant Jacobian solve could not match the first-stage map near the collar."""

    def __init__(self, message: str = "concordance failed", stage: str = "stage_b", **kwargs: Any):
        super().__init__(message, stage=stage, **kwargs)
