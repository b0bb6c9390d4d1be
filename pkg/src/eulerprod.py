"""
Average cyclicity and Koblitz constants as Euler products.

Every constant is an exact rational leading factor times a product over the
primes up to a cutoff, with an analytic bound on the truncated tail.
"""
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Optional

import numpy as np
import pandas as pd

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import LEDGER_PRIME_LIMIT
from src.errors import DomainError
from src.glmatrix import Kind, gl2_order
from src.modarith import euler_phi, prime_divisors, sieve_primes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantValue:
    """A truncated Euler product with its exact leading factor and tail bound."""

    value: float
    cutoff_prime: int
    tail_bound: float
    factor_ledger: Optional[tuple] = None
    exact_factor: Fraction = Fraction(1)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"constant value {self.value} outside [0, 1]")
        if self.tail_bound < 0:
            raise DomainError(f"negative tail bound {self.tail_bound}")

    def scaled(self, factor: Fraction) -> "ConstantValue":
        """The same product with the leading factor multiplied by an exact rational."""
        return replace(self, value=self.value * float(factor), exact_factor=self.exact_factor * factor)


def euler_factor(kind: Kind, l: int) -> Fraction:
    """
    Exact Euler factor of the average constant at the prime l.

    Args:
        kind: Cyclic or Koblitz
        l: Prime

    Returns:
        1 - 1/|GL2(F_l)| for cyclic, 1 - (l^2 - l - 1)/((l - 1)^3 (l + 1)) for Koblitz
    """
    if kind == Kind.CYCLIC:
        return 1 - Fraction(1, gl2_order(l))
    return 1 - Fraction(l * l - l - 1, (l - 1) ** 3 * (l + 1))


def _log_factors(kind: Kind, primes: np.ndarray) -> np.ndarray:
    p = primes.astype(np.float64)
    if kind == Kind.CYCLIC:
        return np.log1p(-1.0 / ((p * p - 1.0) * (p * p - p)))
    return np.log1p(-(p * p - p - 1.0) / ((p - 1.0) ** 3 * (p + 1.0)))


@lru_cache(maxsize=8)
def _log_total(kind: Kind, cutoff: int) -> float:
    logs = _log_factors(kind, sieve_primes(cutoff).primes)
    total = math.fsum(logs.tolist())
    logger.info(f"Summed {len(logs)} {kind.value} Euler factors up to {cutoff}")
    return total


def tail_bound(kind: Kind, cutoff: int) -> float:
    """
    Relative error bound for truncating the product at cutoff.

    The Koblitz log-tail is below sum_{m > P} 2/m^2 <= 2/P and the cyclic one
    below sum_{m > P} 2/m^4 <= 2/(3 P^3).
    """
    P = float(cutoff)
    log_tail = 2.0 / P if kind == Kind.KOBLITZ else 2.0 / (3.0 * P**3)
    return math.expm1(log_tail)


def _product_excluding(kind: Kind, excluded: list[int], cutoff: int) -> float:
    """exp of the summed log factors over primes <= cutoff not in excluded."""
    inside = [l for l in excluded if l <= cutoff]
    total = _log_total(kind, cutoff)
    if inside:
        total -= math.fsum(_log_factors(kind, np.array(inside, dtype=np.uint64)).tolist())
    return math.exp(total)


def _ledger(kind: Kind, excluded: list[int], cutoff: int) -> tuple:
    limit = min(LEDGER_PRIME_LIMIT, cutoff)
    if limit < 2:
        return ()
    return tuple((l, euler_factor(kind, l)) for l in sieve_primes(limit) if l not in excluded)


def assemble_constant(kind: Kind, leading: Fraction, excluded: list[int], cutoff: Optional[int]) -> ConstantValue:
    """Exact leading factor times the Euler product over primes up to cutoff outside excluded."""
    cutoff = RuntimeConfig.CUTOFF if cutoff is None else cutoff
    product = _product_excluding(kind, excluded, cutoff)
    return ConstantValue(
        value=float(leading) * product,
        cutoff_prime=cutoff,
        tail_bound=tail_bound(kind, cutoff),
        factor_ledger=_ledger(kind, excluded, cutoff),
        exact_factor=leading,
    )


def _check_ap(n: int, k: int) -> None:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if gcd(n, k) != 1:
        raise DomainError(f"k = {k} is not coprime to n = {n}")


def avg_cyc(cutoff: Optional[int] = None) -> ConstantValue:
    """Average cyclicity constant, the product of 1 - 1/|GL2(F_l)| over all primes."""
    return assemble_constant(Kind.CYCLIC, Fraction(1), [], cutoff)


def avg_koblitz(cutoff: Optional[int] = None) -> ConstantValue:
    """Average Koblitz constant."""
    return assemble_constant(Kind.KOBLITZ, Fraction(1), [], cutoff)


def cyclic_local_factor(l: int, k: int) -> Fraction:
    """Factor at a prime l | n: 1 - phi(l)/|GL2(F_l)| when k = 1 mod l, else 1."""
    if k % l == 1:
        return 1 - Fraction(l - 1, gl2_order(l))
    return Fraction(1)


def koblitz_local_factor(l: int, k: int) -> Fraction:
    """Factor at a prime l | n: 1 - l/|GL2(F_l)| when k = 1 mod l, else 1 - (l^2 + l)/|GL2(F_l)|."""
    if k % l == 1:
        return 1 - Fraction(l, gl2_order(l))
    return 1 - Fraction(l * l + l, gl2_order(l))


def avg_cyc_ap(n: int, k: int, cutoff: Optional[int] = None) -> ConstantValue:
    """
    Average cyclicity constant for primes p = k (mod n).

    Args:
        n: Modulus of the progression
        k: Residue class coprime to n
        cutoff: Truncation prime (defaults to the runtime cutoff)

    Returns:
        ConstantValue whose exact_factor is (1/phi(n)) times the factors at l | n
    """
    _check_ap(n, k)
    primes = prime_divisors(n) if n > 1 else []
    leading = Fraction(1, euler_phi(n))
    for l in primes:
        leading *= cyclic_local_factor(l, k)
    return assemble_constant(Kind.CYCLIC, leading, primes, cutoff)


def avg_koblitz_ap(n: int, k: int, cutoff: Optional[int] = None) -> ConstantValue:
    """
    Average Koblitz constant for primes p = k (mod n).

    Args:
        n: Modulus of the progression
        k: Residue class coprime to n
        cutoff: Truncation prime (defaults to the runtime cutoff)

    Returns:
        ConstantValue whose exact_factor is (1/phi(n)) times the factors at l | n
    """
    _check_ap(n, k)
    primes = prime_divisors(n) if n > 1 else []
    leading = Fraction(1, euler_phi(n))
    for l in primes:
        leading *= koblitz_local_factor(l, k)
    return assemble_constant(Kind.KOBLITZ, leading, primes, cutoff)


def ap_constant(kind: Kind, n: int, k: int, cutoff: Optional[int] = None) -> ConstantValue:
    """Dispatch to avg_cyc_ap or avg_koblitz_ap."""
    if kind == Kind.CYCLIC:
        return avg_cyc_ap(n, k, cutoff)
    return avg_koblitz_ap(n, k, cutoff)


def average_table(kind: Kind, n_max: int, cutoff: Optional[int] = None) -> pd.DataFrame:
    """
    Table of average constants by modulus n (rows) and class k (columns).

    Args:
        kind: Cyclic or Koblitz
        n_max: Largest modulus, at least 2
        cutoff: Truncation prime

    Returns:
        DataFrame indexed by n with columns k = 1..n_max-1; NaN where gcd(n, k) != 1 or k >= n
    """
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")
    rows = {}
    for n in range(2, n_max + 1):
        rows[n] = {
            k: ap_constant(kind, n, k, cutoff).value if gcd(n, k) == 1 else np.nan
            for k in range(1, n_max)
            if k < n
        }
    df = pd.DataFrame.from_dict(rows, orient="index").reindex(columns=range(1, n_max))
    df.index.name = "n"
    df.columns.name = "k"
    return df


def bias_report(kind: Kind, n: int, cutoff: Optional[int] = None) -> pd.DataFrame:
    """
    Classes mod n with their constants and the position against the k = 1 and k = -1 classes.

    Cyclicity constants satisfy C(n, 1) <= C(n, k) <= C(n, -1) while Koblitz constants
    satisfy the reverse; within_bounds records whether each class obeys its inequality.

    Args:
        kind: Cyclic or Koblitz
        n: Modulus, at least 3
        cutoff: Truncation prime

    Returns:
        DataFrame with columns k, value, exact_factor, within_bounds, sorted by value
    """
    if n < 3:
        raise DomainError(f"bias report needs n >= 3, got {n}")
    constants = {k: ap_constant(kind, n, k, cutoff) for k in range(1, n) if gcd(n, k) == 1}
    one, minus_one = constants[1].exact_factor, constants[n - 1].exact_factor
    low, high = (one, minus_one) if kind == Kind.CYCLIC else (minus_one, one)

    df = pd.DataFrame([
        {
            "k": k,
            "value": c.value,
            "exact_factor": c.exact_factor,
            "within_bounds": low <= c.exact_factor <= high,
        }
        for k, c in constants.items()
    ])
    return df.sort_values("value", kind="stable").reset_index(drop=True)
