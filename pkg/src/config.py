# src/config.py
"""
Numerical and I/O defaults shared by every module.

Values are plain module constants; the CLI passes overrides down explicitly.
"""

import os
from pathlib import Path

# Anchor paths at project root (one level above src)
BASE_DIR = Path(__file__).resolve().parents[1]
DATA_DIR = BASE_DIR / "data"
DEFAULT_LEDGER_PATH = Path(os.environ.get("NBT_LEDGER_PATH", BASE_DIR / "nbt_runs.db"))

# -------------------------------------------------------------------
# LINEAR SOLVES
# -------------------------------------------------------------------
DENSE_THRESHOLD = 2000
SOLVE_TOL = 1e-10
ITERATIVE_CAP_FACTOR = 10

# -------------------------------------------------------------------
# SPECTRAL RADIUS
# -------------------------------------------------------------------
POWER_TOL = 1e-8
POWER_MAX_ITER = 10000

# -------------------------------------------------------------------
# SERIES
# -------------------------------------------------------------------
RADIUS_INFLATION = 1.1
SERIES_MAX_TERMS = 10000

# -------------------------------------------------------------------
# ORACLE
# -------------------------------------------------------------------
ORACLE_WALK_LIMIT = 10**7
ORACLE_COUNT_TOL = 1e-12
ORACLE_FUNCTION_TOL = 1e-10

# -------------------------------------------------------------------
# OUTPUT
# -------------------------------------------------------------------
FLOAT_FORMAT = "%.12g"
SIGNIFICANT_DIGITS = 12
TOP_K_DEFAULT = 10
SWEEP_MAX_FRACTION = 0.99
LOG_LEVEL = os.environ.get("NBT_LOG_LEVEL", "WARNING")
