"""
Numerical defaults and configuration loading.

All tolerances, caps and floors used across the package live here as module-level
constants. The CLI exposes the important ones as flags; ``load_json_config`` reads the
``--config`` file that mirrors the same flag names.
"""

import json
import logging
import os
from pathlib import Path

from .errors import ParameterError

logger = logging.getLogger(__name__)

# Series evaluation
RELATIVE_TOLERANCE = 1e-12
MAX_TERMS = 10_000
SMALL_TERM_STREAK = 10
EXTENDED_PRECISION_DIGITS = 60

# Derivative (Hoppe) route
HOPPE_CAP = 40
HOPPE_FLOAT_LIMIT = 12  # above this order the triple sum runs in mpmath
DERIVATIVE_ROUTE_MAX_H = 10

# Total-count tail rule K(eps)
TAIL_EPSILON = 1e-6
TAIL_MAX_H = 5000
TAIL_INITIAL_H = 64

# Threshold series truncation
THRESHOLD_TRUNCATION = 1e-12
HEAVY_TAIL_STREAK = 50
THRESHOLD_HARD_CAP = 100_000

# Quadrature
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200

# Sampling
ACCEPTANCE_FLOOR = 0.1

# Monte Carlo
Z_THRESHOLD = 4.0
DEFAULT_SEED = 20_240_229
SEED_ENV_VAR = "TEMPERED_SHOCKS_SEED"

# Output
DEFAULT_T_GRID = "0:5:101"
CSV_DIGITS = 17
DERIVATIVE_STEP = 1e-5
UNDERFLOW_FLOOR = 1e-300


def default_seed():
    """Return the master seed used when none is given.

    The ``TEMPERED_SHOCKS_SEED`` environment variable overrides the built-in constant.

    Returns:
        int: Seed value
    """
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    try:
        seed = int(raw.strip(), 0)
    except ValueError as e:
        raise ParameterError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e
    if seed < 0 or seed >= 2**64:
        raise ParameterError(f"{SEED_ENV_VAR} must lie in [0, 2**64), got {seed}")
    logger.debug("Using seed %d from %s", seed, SEED_ENV_VAR)
    return seed


def load_json_config(path):
    """Read a JSON configuration file for the command-line front end.

    Keys are CLI flag names without the leading dashes, with ``-`` or ``_`` accepted
    interchangeably (``"lambda1"``, ``"t-grid"``, ``"threshold"``...).

    Args:
        path: Path of the JSON file

    Returns:
        dict: Mapping of argparse destination names to values
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ParameterError(f"cannot read config file {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ParameterError(f"config file {path} is not valid JSON: {e.msg} (line {e.lineno})") from e

    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must hold a JSON object")

    return {str(key).replace("-", "_"): value for key, value in data.items()}
