"""
Configuration Management
========================

Process-wide settings for the pullback flow solver.

Numerical defaults live in the `Config` dataclass; the few knobs that are
environment-specific (threads, logging, runtime budget, output directory) are
read from `JF_*` environment variables, with `.env` files honoured through
python-dotenv.
"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"{name} must be true/false, got {raw!r}")


@dataclass
class Config:
    """Application configuration"""

    # App settings
    app_name: str = "jacobian-flow"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    # Runtime
    threads: int = 1
    runtime_budget_s: float = 60.0
    output_dir: str = "jf_output"

    # Support detection
    support_rel_threshold: float = 1e-12

    # Poisson / divergence solves
    poisson_tol: float = 1e-8
    poisson_max_sweeps: int = 20000
    div_tol: float = 1e-3
    max_sweeps: int = 8
    mean_tol: float = 1e-10

    # Inversion
    inv_tol: float = 1e-10
    inv_max_iter: int = 50

    # Flow
    rho_floor: float = 1e-6
    default_steps: int = 32

    # Pipeline tolerances
    mass_tol: float = 1e-3
    post_mass_tol: float = 1e-10
    concord_tol: float = 1e-3
    concord_pre_tol: float = 5e-2
    clamp_tol: float = 1e-6

    @classmethod
    def from_env(cls) -> 'Config':
        """Load configuration from environment variables"""
        level = os.getenv('JF_LOG_LEVEL', cls.log_level).strip().upper() or cls.log_level
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"JF_LOG_LEVEL is not a logging level: {level!r}")

        return cls(
            debug=_env_bool('JF_DEBUG', False),
            log_level=level,
            threads=_env_int('JF_THREADS', 1),
            runtime_budget_s=_env_float('JF_RUNTIME_BUDGET_S', cls.runtime_budget_s),
            output_dir=os.getenv('JF_OUTPUT_DIR', cls.output_dir) or cls.output_dir,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (for logging and report provenance)"""
        return asdict(self)


# Global config instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get global configuration instance"""
    global _config
    if _config is None:
        load_dotenv()
        _config = Config.from_env()
        logging.basicConfig(level=logging.DEBUG if _config.debug else _config.log_level)
        logger.debug(f"Configuration loaded: {_config.to_dict()}")
    return _config


def reload_config() -> Config:
    """Reload configuration from environment"""
    global _config
    _config = None
    return get_config()
