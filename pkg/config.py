"""
Runtime configuration for the clumsy coupon collector toolkit
Values come from the process environment, optionally seeded from a .env file
"""

import os

from dotenv import load_dotenv

load_dotenv()

VERSION = "1.0.0"


def _env_int(key, default, minimum=None):
    raw = os.environ.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{key} must be an integer, got {raw!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{key} must be at least {minimum}, got {value}")
    return value


def _env_float(key, default):
    raw = os.environ.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{key} must be a number, got {raw!r}")


# Monte Carlo batches
DEFAULT_THREADS = _env_int('CLUMSY_THREADS', 1, minimum=1)
MAX_RETAINED_SAMPLES = _env_int('CLUMSY_MAX_RETAINED', 20_000_000, minimum=1)
STEP_CAP = 10**9

# Numerics
DEFAULT_REL_TOL = _env_float('CLUMSY_REL_TOL', 1e-10)
FLOAT_PRECISION_BITS = _env_int('CLUMSY_FLOAT_PRECISION', 113, minimum=64)
EXACT_MODE_MAX_M = 64

# Logging
LOG_LEVEL = os.environ.get('CLUMSY_LOG_LEVEL', 'INFO').upper()
LOG_DIR = os.environ.get('CLUMSY_LOG_DIR') or None
