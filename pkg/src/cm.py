"""
Koblitz constants for CM curves in arithmetic progressions.

The image of a CM curve over its CM field lives in the unit groups (O/mO)^x of
an imaginary quadratic order O = Z[f w], w = (d_K + sqrt(d_K))/2. The constant
is half the constant over K: an exact factor at the level L, local factors at
the other primes of n, and a chi_K-twisted tail evaluated with the class number
formula.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd
from typing import NamedTuple, Optional

import mpmath
import numpy as np

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import CM_FIELDS, LEDGER_PRIME_LIMIT, MAX_CM_CONDUCTOR
from src.errors import DomainError, ResourceError
from src.eulerprod import ConstantValue
from src.fixtures import load_cm_file, parse_cm_file
from src.modarith import coprime_part, factorize, is_prime, kronecker_symbol, prime_divisors, sieve_primes
from src.serre import level_L

logger = logging.getLogger(__name__)


class OrderResidue(NamedTuple):
    """x + y w modulo m."""

    x: int
    y: int
    modulus: int


@dataclass(frozen=True)
class ImQuadOrder:
    """The order of conductor f in the imaginary quadratic field of discriminant d_K."""

    d_K: int
    f: int = 1

    def __post_init__(self):
        if self.d_K not in CM_FIELDS:
            raise DomainError(f"d_K = {self.d_K} is not a class number one discriminant")
        if not 1 <= self.f <= MAX_CM_CONDUCTOR:
            raise DomainError(f"conductor must be between 1 and {MAX_CM_CONDUCTOR}, got {self.f}")

    @property
    def trace(self) -> int:
        """Trace of the basis element f w."""
        return self.f * self.d_K

    @property
    def norm_of_basis(self) -> int:
        """Norm of the basis element f w."""
        return self.f**2 * (self.d_K**2 - self.d_K) // 4

    def mul(self, u: OrderResidue, v: OrderResidue) -> OrderResidue:
        m = u.modulus
        t, nrm = self.trace, self.norm_of_basis
        return OrderResidue(
            (u.x * v.x - nrm * u.y * v.y) % m,
            (u.x * v.y + v.x * u.y + t * u.y * v.y) % m,
            m,
        )

    def norm(self, u: OrderResidue) -> int:
        """Determinant of multiplication by u on the basis {1, f w}."""
        return (u.x * u.x + self.trace * u.x * u.y + self.norm_of_basis * u.y * u.y) % u.modulus

    def norm_array(self, arr: np.ndarray, m: int) -> np.ndarray:
        x, y = arr[:, 0], arr[:, 1]
        return (x * x + self.trace * x * y + self.norm_of_basis * y * y) % m


@dataclass(frozen=True)
class CMImageSpec:
    """Image of a CM curve over K at its level, by generators or as the full unit group."""

    order: ImQuadOrder
    level: int
    generators: tuple = ()
    full_image: bool = False
    label: str = ""

    def __post_init__(self):
        if self.level < 2:
            raise DomainError(f"level must be at least 2, got {self.level}")
        required = 4 * math.prod(l for l in prime_divisors(abs(self.order.d_K)) if l > 2)
        if self.level % required:
            raise DomainError(f"level {self.level} is not divisible by {required} for d_K = {self.order.d_K}")
        if not self.full_image and not self.generators:
            raise DomainError("a CM image needs generators or full_image")
        for g in self.generators:
            if g.modulus != self.level:
                raise DomainError(f"generator {tuple(g)} is not a residue mod {self.level}")
            if gcd(self.order.norm(g), self.level) != 1:
                raise DomainError(f"generator {tuple(g[:2])} is not a unit mod {self.level}")

    @cached_property
    def array(self) -> np.ndarray:
        """Elements at the level as a sorted (order, 2) array of (x, y)."""
        if self.full_image:
            return unit_array(self.order, self.level)
        return _closure(self.order, self.generators, self.level)


@dataclass(frozen=True)
class CMConstant:
    """CM Koblitz constant with its exact pieces."""

    constant: ConstantValue
    count: int
    group_order: int
    leading: Fraction
    L: int


def chi_K(d_K: int, l: int) -> int:
    """Kronecker character of K at l: 1 split, -1 inert, 0 ramified."""
    return kronecker_symbol(d_K, l)


def class_number_l_value(d_K: int) -> float:
    """L(1, chi_K) = 2 pi h / (w sqrt|d_K|)."""
    if d_K not in CM_FIELDS:
        raise DomainError(f"d_K = {d_K} is not a class number one discriminant")
    h, w = CM_FIELDS[d_K]
    return float(2 * mpmath.pi * h / (w * mpmath.sqrt(abs(d_K))))


def _budget_check(m: int, budget: Optional[int]) -> None:
    budget = RuntimeConfig.CM_BUDGET if budget is None else budget
    if m * m > budget:
        raise ResourceError(f"residues of O/{m}O need {m * m} elements, above the budget {budget}")


def _codes(arr: np.ndarray, m: int) -> np.ndarray:
    return arr[:, 0] * m + arr[:, 1]


def unit_array(order: ImQuadOrder, m: int, budget: Optional[int] = None) -> np.ndarray:
    """Units of O/mO as a sorted (N, 2) array."""
    _budget_check(m, budget)
    grid = np.indices((m, m)).reshape(2, -1).T.astype(np.int64)
    return grid[np.gcd(order.norm_array(grid, m), m) == 1]


def unit_group(order: ImQuadOrder, m: int, budget: Optional[int] = None) -> frozenset:
    """
    All units of O/mO.

    Args:
        order: Imaginary quadratic order
        m: Modulus
        budget: Maximum number of residues to scan

    Returns:
        Frozenset of OrderResidue units
    """
    return frozenset(OrderResidue(x, y, m) for x, y in unit_array(order, m, budget).tolist())


def unit_group_order(order: ImQuadOrder, l: int, a: int) -> int:
    """|(O/l^a O)^x| = l^(2(a-1)) (l - 1)(l - chi(l)) for l not dividing f."""
    return l ** (2 * (a - 1)) * (l - 1) * (l - chi_K(order.d_K, l))


def _closure(order: ImQuadOrder, gens: tuple, m: int) -> np.ndarray:
    budget = RuntimeConfig.CM_BUDGET
    one = OrderResidue(1 % m, 0, m)
    seen = {one}
    queue = deque([one])
    while queue:
        u = queue.popleft()
        for g in gens:
            v = order.mul(u, g)
            if v not in seen:
                seen.add(v)
                queue.append(v)
                if len(seen) > budget:
                    raise ResourceError(f"unit subgroup closure mod {m} exceeded the budget {budget}")
    arr = np.array(sorted((u.x, u.y) for u in seen), dtype=np.int64).reshape(-1, 2)
    return arr


def image_at_level(image: CMImageSpec, m: int) -> np.ndarray:
    """The image at level m: reduction of the generated group, or its full-fiber preimage."""
    g = gcd(m, image.level)
    base = np.unique(_codes(image.array % g, g))
    if m == g:
        return np.stack([base // g, base % g], axis=1)
    units = unit_array(image.order, m)
    if g == 1:
        return units
    return units[np.isin(_codes(units % g, g), base)]


def count_cm_closed(l: int, a: int, k: int, split: bool) -> int:
    """
    #{g in (O/l^a O)^x : N(g - 1) a unit mod l, N(g) = k mod l^a} for unramified odd l.

    Args:
        l: Odd prime, split or inert in K
        a: Exponent
        k: Class coprime to l
        split: True when l splits

    Returns:
        l^(a-1)(l - 2) or l^(a-1)(l - 3) when split; l^a or l^(a-1)(l + 1) when inert
    """
    if not is_prime(l) or l == 2:
        raise DomainError(f"{l} is not an odd prime")
    if k % l == 0:
        raise DomainError(f"k = {k} is not coprime to {l}")
    if a < 1:
        raise DomainError(f"exponent must be positive, got {a}")
    lift = l ** (a - 1)
    if split:
        return lift * (l - 2) if k % l == 1 else lift * (l - 3)
    return l**a if k % l == 1 else lift * (l + 1)


def _psi_count(order: ImQuadOrder, arr: np.ndarray, m: int, n: int, k: int) -> int:
    minus_one = arr.copy()
    minus_one[:, 0] -= 1
    mask = np.gcd(order.norm_array(minus_one, m), m) == 1
    g = gcd(m, n)
    if g > 1:
        mask &= order.norm_array(arr, m) % g == k % g
    return int(np.count_nonzero(mask))


def _cm_local_factor(order: ImQuadOrder, l: int, a: int, k: int) -> Fraction:
    chi = chi_K(order.d_K, l)
    if chi == 0:
        raise ArithmeticError(f"ramified prime {l} outside the level")
    count = count_cm_closed(l, a, k, split=chi == 1)
    return Fraction(count, unit_group_order(order, l, a)) * Fraction(l, l - 1)


def tail_correction(d_K: int, l: int) -> float:
    """e_l with the l-th tail factor equal to (1 - chi(l)/l)(1 + e_l)."""
    chi = chi_K(d_K, l)
    if chi == 1:
        return -(2 * l * l - 4 * l + 1) / (l - 1) ** 4
    if chi == -1:
        return -1.0 / (l * l - 1) ** 2
    return 0.0


def tail_factor(d_K: int, l: int) -> Fraction:
    """Exact l-th factor 1 - chi(l)(l^2 - l - 1)/((l - chi(l))(l - 1)^2)."""
    chi = chi_K(d_K, l)
    return 1 - Fraction(chi * (l * l - l - 1), (l - chi) * (l - 1) ** 2)


@lru_cache(maxsize=16)
def _log_correction_total(d_K: int, cutoff: int) -> float:
    primes = sieve_primes(cutoff).primes
    p = primes.astype(np.float64)
    table = np.array([kronecker_symbol(d_K, r) for r in range(abs(d_K))], dtype=np.int64)
    chi = table[(primes % np.uint64(abs(d_K))).astype(np.int64)]
    e = np.where(
        chi == 1,
        -(2.0 * p * p - 4.0 * p + 1.0) / (p - 1.0) ** 4,
        np.where(chi == -1, -1.0 / (p * p - 1.0) ** 2, 0.0),
    )
    total = math.fsum(np.log1p(e).tolist())
    logger.info(f"Summed {len(primes)} CM tail corrections for d_K = {d_K} up to {cutoff}")
    return total


def cm_tail(d_K: int, excluded: list[int], cutoff: Optional[int] = None) -> tuple[float, float]:
    """
    Product of the tail factors over primes outside excluded, and its relative error bound.

    The conditionally convergent part prod(1 - chi(l)/l) comes from the class number
    formula; the absolutely convergent part prod(1 + e_l) is truncated at cutoff.
    """
    cutoff = RuntimeConfig.CUTOFF if cutoff is None else cutoff
    euler_part = 1.0 / class_number_l_value(d_K)
    for l in excluded:
        euler_part /= 1 - chi_K(d_K, l) / l
    log_corr = _log_correction_total(d_K, cutoff)
    log_corr -= math.fsum(math.log1p(tail_correction(d_K, l)) for l in excluded if l <= cutoff)
    bound = math.expm1(4.0 / (cutoff - 1))
    return euler_part * math.exp(log_corr), bound


def _check_level_stable(image: CMImageSpec, L: int, n: int, k: int, delta: Fraction) -> None:
    """The ratio at L must agree with the ratio at lcm(L, level)."""
    top = L * image.level // gcd(L, image.level)
    if top == L:
        return
    upper = image_at_level(image, top)
    upper_delta = Fraction(_psi_count(image.order, upper, top, n, k), len(upper))
    if upper_delta != delta:
        raise ArithmeticError(
            f"CM image {image.label or image.level} is not stable between levels {L} and {top}: "
            f"{delta} != {upper_delta}"
        )
    logger.debug(f"CM ratio {delta} stable between levels {L} and {top}")


def cm_koblitz_ap(image: CMImageSpec, n: int, k: int, cutoff: Optional[int] = None) -> CMConstant:
    """
    Koblitz constant of a CM curve for primes p = k (mod n).

    Args:
        image: CM image over K at its level
        n: Modulus of the progression
        k: Residue class coprime to n
        cutoff: Truncation prime for the absolutely convergent tail

    Returns:
        CMConstant with the exact count at L and the leading factor
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if gcd(n, k) != 1:
        raise DomainError(f"k = {k} is not coprime to n = {n}")
    cutoff = RuntimeConfig.CUTOFF if cutoff is None else cutoff

    order = image.order
    support = order.f * image.level
    L = level_L(support, n)
    group = image_at_level(image, L)
    count = _psi_count(order, group, L, n, k)
    _check_level_stable(image, L, n, k, Fraction(count, len(group)))

    leading = Fraction(1, 2) * Fraction(count, len(group))
    for l in prime_divisors(L):
        leading /= 1 - Fraction(1, l)
    n2 = coprime_part(n, support)
    if n2 > 1:
        for l, a in factorize(n2).factors:
            leading *= _cm_local_factor(order, l, a, k)

    excluded = sorted(set(prime_divisors(support)) | set(prime_divisors(n) if n > 1 else []))
    tail, bound = cm_tail(order.d_K, excluded, cutoff)
    ledger = tuple(
        (l, tail_factor(order.d_K, l))
        for l in sieve_primes(min(LEDGER_PRIME_LIMIT, cutoff))
        if l not in excluded
    )
    constant = ConstantValue(
        value=float(leading) * tail,
        cutoff_prime=cutoff,
        tail_bound=bound,
        factor_ledger=ledger,
        exact_factor=leading,
    )
    logger.info(
        f"CM image {image.label or image.level}: {count} of {len(group)} at level {L}, "
        f"constant for p = {k} mod {n} is {constant.value:.6f}"
    )
    return CMConstant(constant=constant, count=count, group_order=len(group), leading=leading, L=L)


def supersingular_vanishing_classes(image: CMImageSpec, n: int) -> list[int]:
    """
    Classes k mod n made only of primes inert or ramified in K.

    Such primes are supersingular, so |E(F_p)| = p + 1 is even and never prime for p > 2,
    and the Koblitz constant of the class is 0.
    """
    d = abs(image.order.d_K)
    if n % d:
        return []
    return [k for k in range(1, n) if gcd(n, k) == 1 and kronecker_symbol(image.order.d_K, k) == -1]


def _image_from_parsed(parsed) -> CMImageSpec:
    order = ImQuadOrder(d_K=parsed.d_K, f=parsed.f)
    gens = tuple(OrderResidue(x % parsed.level, y % parsed.level, parsed.level) for x, y in parsed.rows)
    return CMImageSpec(
        order=order,
        level=parsed.level,
        generators=gens,
        full_image=parsed.full_image,
        label=parsed.label,
    )


def parse_cm_image(text: str, path: Optional[Path] = None) -> CMImageSpec:
    """Build a CMImageSpec from fixture text."""
    return _image_from_parsed(parse_cm_file(text, path))


def load_cm_image(path) -> CMImageSpec:
    """Load a CMImageSpec from a fixture file."""
    return _image_from_parsed(load_cm_file(path))
