"""
Configuration Module

Environment-driven defaults for tolerances, integration settings and sweep
parallelism. Values come from the process environment or a `.env` file in the
working directory; scenario files and CLI flags override them.

Variables:
    TDG_SEED_TOL        degeneracy tolerance (coincident points, zero lengths)
    TDG_MEMBERSHIP_TOL  slack used by closure-membership checks
    TDG_DT              default integration step
    TDG_CAPTURE_EPS     default co-location radius
    TDG_T_MAX           default safety horizon
    TDG_WORKERS         sweep worker processes
    TDG_LOG_LEVEL       CLI log level
"""

import os
import logging
from typing import Optional
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()


def _env_float(name: str, default: float) -> float:
    """Read a float from the environment, falling back to the default on bad input"""
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not a number, using {default}")
        return default


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer")
        return default


# =============================================================================
# TOLERANCES
# =============================================================================

DEGENERACY_TOL = _env_float("TDG_SEED_TOL", 1e-12)
MEMBERSHIP_TOL = _env_float("TDG_MEMBERSHIP_TOL", 1e-9)


# =============================================================================
# SIMULATION DEFAULTS
# =============================================================================

DEFAULT_DT = _env_float("TDG_DT", 1e-4)
DEFAULT_CAPTURE_EPS = _env_float("TDG_CAPTURE_EPS", 1e-3)
DEFAULT_T_MAX = _env_float("TDG_T_MAX", 100.0)
DEFAULT_RECORD_EVERY = 1
DEFAULT_TWO_DEVIATION_GRID = 32


def sweep_workers() -> int:
    """Number of worker processes for sweeps (TDG_WORKERS, else CPU count)"""
    workers = _env_int("TDG_WORKERS", None)
    if workers is None or workers < 1:
        workers = os.cpu_count() or 1
    return workers


def log_level() -> int:
    """Root log level requested through TDG_LOG_LEVEL (default INFO)"""
    name = os.getenv("TDG_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO
