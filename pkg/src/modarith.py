"""
Integer and residue arithmetic shared by every constants module.

Sieving, factorization, multiplicative functions, the Kronecker symbol and
the small helpers for v_l(n), rad(m), n^odd and gcd(n, m^infinity).
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, isqrt, prod
from typing import Optional

import numpy as np
import sympy
from sympy.ntheory.residue_ntheory import sqrt_mod

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import TRIAL_DIVISION_LIMIT
from src.errors import DomainError, ResourceError

logger = logging.getLogger(__name__)

SEGMENT_SIZE = 1 << 20

# Deterministic strong-pseudoprime bases by range
_MR_BASES = [
    (2_047, (2,)),
    (1_373_653, (2, 3)),
    (25_326_001, (2, 3, 5)),
    (3_215_031_751, (2, 3, 5, 7)),
    (2_152_302_898_747, (2, 3, 5, 7, 11)),
    (3_474_749_660_383, (2, 3, 5, 7, 11, 13)),
    (341_550_071_728_321, (2, 3, 5, 7, 11, 13, 17)),
    (3_825_123_056_546_413_051, (2, 3, 5, 7, 11, 13, 17, 19, 23)),
    (318_665_857_834_031_151_167_461, (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)),
    (3_317_044_064_679_887_385_961_981, (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)),
]
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


@dataclass(frozen=True)
class Factorization:
    """Signed integer together with its prime factorization."""

    value: int
    factors: tuple = field(default_factory=tuple)

    @property
    def sign(self) -> int:
        return -1 if self.value < 0 else 1

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def exponent(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0

    def __post_init__(self):
        if self.sign * prod(p**e for p, e in self.factors) != self.value:
            raise DomainError(f"factors do not multiply back to {self.value}")


@dataclass(frozen=True)
class PrimeSieve:
    """All primes up to a bound, ascending."""

    bound: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return (int(p) for p in self.primes)


def _strong_probable_prime(n: int, a: int) -> bool:
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """
    Primality test, deterministic below 3.3e24.

    Args:
        n: Integer to test

    Returns:
        True if n is prime
    """
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    for limit, bases in _MR_BASES:
        if n < limit:
            return all(_strong_probable_prime(n, a) for a in bases)
    return bool(sympy.isprime(n))


def _base_primes(limit: int) -> np.ndarray:
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p).astype(np.uint64)


def primes_in_range(lo: int, hi: int) -> np.ndarray:
    """
    Primes in the half-open interval [lo, hi) by a segmented sieve.

    Args:
        lo: Inclusive lower end
        hi: Exclusive upper end

    Returns:
        Ascending uint64 array of primes
    """
    lo = max(lo, 2)
    if hi <= lo:
        return np.zeros(0, dtype=np.uint64)
    base = _base_primes(isqrt(hi - 1) + 1)
    chunks = []
    for seg_lo in range(lo, hi, SEGMENT_SIZE):
        seg_hi = min(seg_lo + SEGMENT_SIZE, hi)
        mark = np.ones(seg_hi - seg_lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= seg_hi:
                break
            start = max(p * p, -(-seg_lo // p) * p)
            mark[start - seg_lo::p] = False
        chunks.append(np.flatnonzero(mark).astype(np.uint64) + np.uint64(seg_lo))
    return np.concatenate(chunks)


@lru_cache(maxsize=8)
def sieve_primes(bound: int, budget: Optional[int] = None) -> PrimeSieve:
    """
    All primes up to and including bound.

    Args:
        bound: Upper bound, at least 2
        budget: Largest admissible bound (defaults to the runtime sieve budget)

    Returns:
        PrimeSieve with ascending primes
    """
    if bound < 2:
        raise DomainError(f"sieve bound must be at least 2, got {bound}")
    budget = RuntimeConfig.SIEVE_BUDGET if budget is None else budget
    if bound > budget:
        raise ResourceError(f"sieve bound {bound} exceeds the configured budget {budget}")

    primes = primes_in_range(2, bound + 1)
    logger.info(f"Sieved {len(primes)} primes up to {bound}")
    return PrimeSieve(bound=bound, primes=primes)


@lru_cache(maxsize=4096)
def factorize(n: int) -> Factorization:
    """
    Complete prime factorization of a nonzero integer.

    Trial division below a cutoff, then Pollard rho; every reported prime is
    certified with the strong-pseudoprime test.

    Args:
        n: Nonzero integer

    Returns:
        Factorization with strictly increasing primes
    """
    if n == 0:
        raise DomainError("cannot factor 0")
    if abs(n) == 1:
        return Factorization(value=n, factors=())

    exponents = Counter()
    # With a limit, factorint stops after trial division and may leave a composite cofactor
    for q, e in sympy.factorint(abs(n), limit=TRIAL_DIVISION_LIMIT).items():
        q, e = int(q), int(e)
        if is_prime(q):
            exponents[q] += e
            continue
        logger.debug(f"Cofactor {q} of {n} survived trial division; switching to rho")
        for r, f in sympy.factorint(q).items():
            exponents[int(r)] += e * int(f)
    factors = tuple(sorted(exponents.items()))
    for p, _ in factors:
        if not is_prime(p):
            raise ArithmeticError(f"factor {p} of {n} failed certification")
    return Factorization(value=n, factors=factors)


def squarefree_part(n: int) -> int:
    """
    The squarefree d with n/d a positive rational square (same sign as n).

    Args:
        n: Nonzero integer

    Returns:
        Squarefree part of n
    """
    f = factorize(n)
    return f.sign * prod(p for p, e in f.factors if e % 2 == 1)


def kronecker_symbol(a: int, n: int) -> int:
    """
    Kronecker symbol (a/n), the completely multiplicative extension of Legendre.

    Args:
        a: Top argument
        n: Bottom argument

    Returns:
        -1, 0 or 1
    """
    if a == 0 and n == 0:
        raise DomainError("kronecker symbol (0/0) is undefined")
    if n == 0:
        return 1 if a in (1, -1) else 0

    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result

    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5) and v % 2 == 1:
            result = -result

    if n == 1:
        return result
    return result * int(sympy.jacobi_symbol(a % n, n))


def legendre_symbol(a: int, p: int) -> int:
    """Legendre symbol for an odd prime p."""
    return kronecker_symbol(a, p)


def euler_phi(n: int) -> int:
    """Euler totient."""
    if n <= 0:
        raise DomainError(f"euler_phi needs n > 0, got {n}")
    return int(sympy.totient(n))


def moebius(n: int) -> int:
    """Moebius function."""
    if n <= 0:
        raise DomainError(f"moebius needs n > 0, got {n}")
    f = factorize(n)
    if any(e > 1 for _, e in f.factors):
        return 0
    return -1 if len(f.factors) % 2 else 1


def valuation(n: int, p: int) -> int:
    """Exponent of the prime p in n."""
    if n == 0:
        raise DomainError("valuation of 0 is infinite")
    if p < 2:
        raise DomainError(f"valuation base must be a prime, got {p}")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def crt_components(m: int) -> list[int]:
    """The prime powers l^a exactly dividing m, ascending by prime."""
    if m <= 0:
        raise DomainError(f"crt_components needs m > 0, got {m}")
    return [p**e for p, e in factorize(m).factors]


def prime_divisors(n: int) -> list[int]:
    """Distinct primes dividing n."""
    return factorize(n).primes


def radical(n: int) -> int:
    """Product of the distinct primes dividing n."""
    return prod(prime_divisors(n))


def odd_part(n: int) -> int:
    """n with every factor 2 removed."""
    if n == 0:
        raise DomainError("odd part of 0 is undefined")
    while n % 2 == 0:
        n //= 2
    return n


def coprime_part(n: int, m: int) -> int:
    """
    The part of n coprime to m, that is n / gcd(n, m^infinity).

    Args:
        n: Positive integer
        m: Positive integer

    Returns:
        Largest divisor of n coprime to m
    """
    if n <= 0 or m <= 0:
        raise DomainError("coprime_part needs positive arguments")
    g = gcd(n, m)
    while g > 1:
        n //= g
        g = gcd(n, g)
    return n


def divisors(n: int) -> list[int]:
    """Positive divisors of n, ascending."""
    if n <= 0:
        raise DomainError(f"divisors needs n > 0, got {n}")
    return [int(d) for d in sympy.divisors(n)]


def sqrt_mod_prime(a: int, p: int) -> Optional[int]:
    """A square root of a modulo the prime p, or None for a non-residue."""
    a %= p
    if a == 0:
        return 0
    root = sqrt_mod(a, p)
    return None if root is None else int(root)
