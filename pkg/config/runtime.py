"""
Runtime configuration loaded from the environment (.env supported).
"""
import os
from pathlib import Path
from dotenv import load_dotenv

from config.settings import (
    CM_ENUMERATION_BUDGET,
    DEFAULT_CUTOFF,
    GL2_ENUMERATION_BUDGET,
    OUTPUT_DIR,
    SIEVE_BUDGET,
)

# Load environment variables from .env file
env_path = Path(__file__).parent.parent / '.env'
load_dotenv(dotenv_path=env_path)


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name, '')
    if not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        return -1


class RuntimeConfig:
    """Thread count, cutoff and budgets, overridable per process."""

    THREADS = _int_env('ECCONST_THREADS', os.cpu_count() or 1)
    CUTOFF = _int_env('ECCONST_CUTOFF', DEFAULT_CUTOFF)
    OUTPUT_DIR = Path(os.getenv('ECCONST_OUTPUT_DIR', str(OUTPUT_DIR)))

    ENUM_BUDGET = _int_env('ECCONST_ENUM_BUDGET', GL2_ENUMERATION_BUDGET)
    CM_BUDGET = _int_env('ECCONST_CM_BUDGET', CM_ENUMERATION_BUDGET)
    SIEVE_BUDGET = _int_env('ECCONST_SIEVE_BUDGET', SIEVE_BUDGET)

    @classmethod
    def override(cls, threads: int = None, cutoff: int = None, output_dir: Path = None):
        """
        Apply command line overrides on top of the environment values.

        Args:
            threads: Worker process count
            cutoff: Euler product truncation prime
            output_dir: Directory for written reports
        """
        if threads is not None:
            cls.THREADS = threads
        if cutoff is not None:
            cls.CUTOFF = cutoff
        if output_dir is not None:
            cls.OUTPUT_DIR = Path(output_dir)

    @classmethod
    def validate_config(cls) -> tuple[bool, str]:
        """
        Validate runtime configuration.

        Returns:
            Tuple of (is_valid, error_message)
        """
        if cls.THREADS < 1:
            return False, "ECCONST_THREADS must be a positive integer"

        if cls.CUTOFF < 2:
            return False, "ECCONST_CUTOFF must be at least 2"

        if cls.CUTOFF > cls.SIEVE_BUDGET:
            return False, f"cutoff {cls.CUTOFF} exceeds the sieve budget {cls.SIEVE_BUDGET}"

        if cls.ENUM_BUDGET < 1 or cls.CM_BUDGET < 1:
            return False, "enumeration budgets must be positive integers"

        return True, "Configuration is valid"
