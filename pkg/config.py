"""
Runtime Configuration
Defaults come from the environment, the CLI overrides them per run
"""
import os

VERSION = "1.0.0"

# Default worker count for scans and experiments (--threads wins)
DEFAULT_THREADS = int(os.environ.get("BFCS_THREADS", "1"))

LOG_LEVEL = os.environ.get("BFCS_LOG_LEVEL", "INFO").upper()

# Triplets with det(R) at or below this are rejected as singular
DET_FLOOR = float(os.environ.get("BFCS_DET_FLOOR", "1e-12"))

# Correlations may overshoot 1 by rounding; anything beyond this is an error
CORRELATION_SLACK = 1e-12

# Upper bound on triplets evaluated in one scan work unit
SCAN_BLOCK = int(os.environ.get("BFCS_SCAN_BLOCK", "262144"))

# Significant digits for every number written to a table
SIGNIFICANT_DIGITS = 6
