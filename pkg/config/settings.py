"""
Configuration settings for the elliptic curve reduction constants project.
"""
from pathlib import Path

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = PROJECT_ROOT / "data"
OUTPUT_DIR = PROJECT_ROOT / "output"

# Ensure output directory exists
OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

# Euler product settings
DEFAULT_CUTOFF = 10_000_000
LEDGER_PRIME_LIMIT = 100

# Sieving beyond 2^32 is not supported
SIEVE_BUDGET = 2**32

# Enumeration budgets (number of group elements)
GL2_ENUMERATION_BUDGET = 10_000_000
CM_ENUMERATION_BUDGET = 1_000_000

# Factorization: trial division limit before rho
TRIAL_DIVISION_LIMIT = 1_000_000

# Point counting and cyclicity testing
NAIVE_COUNT_LIMIT = 230
MAX_POINT_SAMPLES = 64
DIVISION_POLYNOMIAL_LIMIT = 13
TALLY_BLOCK_SIZE = 50_000
SKIPPED_PRIMES = (2,)

# Imaginary quadratic fields of class number one: d_K -> (h_K, w_K)
CM_FIELDS = {
    -3: (1, 6),
    -4: (1, 4),
    -7: (1, 2),
    -8: (1, 2),
    -11: (1, 2),
    -19: (1, 2),
    -43: (1, 2),
    -67: (1, 2),
    -163: (1, 2),
}
MAX_CM_CONDUCTOR = 3

# Output formats
OUTPUT_FORMATS = ["table", "csv", "kv"]
FLOAT_DIGITS = 6

# Report settings
REPORT_TITLE = "Cyclicity and Koblitz Constants Report"
