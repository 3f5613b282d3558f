"""
Timeout Handler - Stage Timing with a Soft Runtime Budget
=========================================================

Solves are never aborted for running long: the budget is a soft limit.
Crossing it logs a warning and is recorded in the report.

- RuntimeBudget tracks elapsed time against the budget
- StageTracker records begin/complete/fail per pipeline stage with timings
"""

from datetime import datetime
from typing import Any, Dict, List, Optional
import logging
import time

logger = logging.getLogger(__name__)


class RuntimeBudget:
    """
    Elapsed-time bookkeeping against a soft budget.

    Instead of hard failures at timeout, this:
    1. Tracks elapsed time
    2. Warns once when the budget is exceeded
    3. Lets the caller finish and record the overrun
    """

    def __init__(self, max_seconds: float = 60.0):
        """
        Initialize runtime budget.

        Args:
            max_seconds: Soft wall-clock budget (default 60 seconds)
        """
        self.max_seconds = max_seconds
        self.start_time: Optional[float] = None
        self.started_at: Optional[str] = None
        self._warned = False

    def start(self):
        """Start the timer."""
        self.start_time = time.perf_counter()
        self.started_at = datetime.now().isoformat()
        self._warned = False
        logger.debug(f"Runtime budget started: {self.max_seconds}s")

    def elapsed(self) -> float:
        """Get elapsed time in seconds."""
        if self.start_time is None:
            return 0.0
        return time.perf_counter() - self.start_time

    def remaining(self) -> float:
        """Get remaining time in seconds."""
        return max(0.0, self.max_seconds - self.elapsed())

    def is_exceeded(self) -> bool:
        """Return True once the budget has been used up; warns the first time."""
        exceeded = self.elapsed() > self.max_seconds
        if exceeded and not self._warned:
            self._warned = True
            logger.warning(f"Runtime budget of {self.max_seconds:.0f}s exceeded "
                           f"({self.elapsed():.1f}s elapsed); continuing")
        return exceeded

    def get_status(self) -> Dict[str, Any]:
        """Get current budget status."""
        elapsed = self.elapsed()
        return {
            "elapsed_seconds": elapsed,
            "remaining_seconds": self.remaining(),
            "is_exceeded": elapsed > self.max_seconds,
            "percent_used": (elapsed / self.max_seconds) * 100 if self.max_seconds else 0.0,
        }


class StageTracker:
    """
    Track multi-stage solve progress with budget awareness.
    """

    def __init__(self, stages: Optional[List[str]] = None, max_seconds: float = 60.0):
        """
        Initialize stage tracker.

        Args:
            stages: Expected stage names (others are added as they begin)
            max_seconds: Soft budget for all stages together
        """
        self.stages: List[str] = list(stages or [])
        self.stage_status: Dict[str, str] = {stage: "pending" for stage in self.stages}
        self.timings: Dict[str, float] = {}
        self._started: Dict[str, float] = {}
        self.budget = RuntimeBudget(max_seconds=max_seconds)

    def start(self):
        """Start tracking."""
        self.budget.start()

    def begin_step(self, step_name: str):
        """Mark a stage as in progress."""
        if step_name not in self.stage_status:
            self.stages.append(step_name)
        self.stage_status[step_name] = "running"
        self._started[step_name] = time.perf_counter()
        logger.info(f"Starting step: {step_name}")

    def complete_step(self, step_name: str):
        """Mark a stage as completed and record its duration."""
        self._record(step_name)
        self.stage_status[step_name] = "completed"
        logger.info(f"Completed step: {step_name} ({self.timings[step_name]:.2f}s)")
        self.budget.is_exceeded()

    def fail_step(self, step_name: str, error: str):
        """Mark a stage as failed."""
        self._record(step_name)
        self.stage_status[step_name] = f"failed: {error}"
        logger.error(f"Failed step {step_name}: {error}")

    def budget_exceeded(self) -> bool:
        return self.budget.is_exceeded()

    def total_seconds(self) -> float:
        return self.budget.elapsed()

    def get_status(self) -> Dict[str, Any]:
        """Get current status."""
        return {
            "steps": dict(self.stage_status),
            "timings": dict(self.timings),
            "budget_status": self.budget.get_status(),
        }

    def _record(self, step_name: str):
        started = self._started.pop(step_name, None)
        if started is not None:
            self.timings[step_name] = self.timings.get(step_name, 0.0) + time.perf_counter() - started
