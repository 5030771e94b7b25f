# ═════════════════════════════════════════════════════════════════════════
# PHFRACTAL: AVERAGE PH-FRACTAL BETTI NUMBERS OF SELF-SIMILAR SETS
# Numerical Configuration & Constants
# ═════════════════════════════════════════════════════════════════════════

import os
from pathlib import Path
from dotenv import load_dotenv

from .errors import ArgumentError

# Load environment variables
load_dotenv()

# ── SYSTEM PATHS ──
DEFAULT_OUTPUT_DIR = Path("phfractal_out")

# ── LOGGING ──
LOG_LEVEL = os.getenv("PHFRACTAL_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# ── RESOURCE LIMITS ──
MEMORY_BUDGET_ENV = "PHFRACTAL_MEMORY_BUDGET"
DEFAULT_MEMORY_BUDGET_BYTES = 8 * 1024 ** 3
# Rough per-cell cost of a filtered cubical complex: value, dimension, order
# and rank arrays plus the sparse reduction columns that survive clearing.
BYTES_PER_CELL = 96

# ── SYMBOLIC SUMS ──
SEQUENCE_TOL = 1e-9           # successive-estimate tolerance of the sequence method
SEQUENCE_J_MAX = 60
SERIES_TAIL_TOL = 1e-15       # relative tail bound for the inner dust series
TIE_RTOL = 1e-12              # lifetimes this close to δ are not "> δ"
RATIO_RTOL = 1e-9             # m·r^σ within this of 1 counts as a critical family
MENGER_MAX_STEP = 512

# ── NUMERICAL PIPELINE ──
FLOOR_FACTOR = 2.0            # bars shorter than 2h are below trust
MATCH_FACTOR = 4.0            # symbolic bars longer than 4h must be matched
MATCH_TOL_FACTOR = 2.0        # default matching tolerance 2h
CURVE_POINTS = 200
COMPLEXITY_SAMPLES = 200
LOW_CONFIDENCE_R2 = 0.98
MIN_DISTINCT_COUNTS = 5

# ── OUTPUT ──
CSV_FLOAT_FORMAT = "%.17g"
TABLE_DIGITS = 6


def memory_budget_bytes(override: float | None = None) -> int:
    """Memory budget in bytes: explicit override, then environment, then default."""
    if override is not None:
        value = override
    else:
        raw = os.getenv(MEMORY_BUDGET_ENV)
        if raw is None or not raw.strip():
            return DEFAULT_MEMORY_BUDGET_BYTES
        try:
            value = float(raw)
        except ValueError:
            raise ArgumentError(f"{MEMORY_BUDGET_ENV}={raw!r} is not a number of bytes")
    if value <= 0:
        raise ArgumentError(f"memory budget must be positive, got {value}")
    return int(value)
