"""
Exact arithmetic and enumeration in GL2(Z/mZ).

Matrices are stored with canonical entries in [0, m). A group keeps its
elements as a sorted (order, 4) integer array of rows (a, b, c, d); every
ratio is an exact Fraction.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from src.errors import DomainError, ResourceError
from src.modarith import crt_components, divisors, factorize, is_prime, legendre_symbol, moebius, prime_divisors

logger = logging.getLogger(__name__)


class Kind(str, Enum):
    """Reduction property a constant counts."""

    CYCLIC = "cyclic"
    KOBLITZ = "koblitz"


class ResidueMatrix(NamedTuple):
    """2x2 matrix [[a, b], [c, d]] over Z/mZ."""

    a: int
    b: int
    c: int
    d: int
    modulus: int

    @classmethod
    def of(cls, rows, modulus: int) -> "ResidueMatrix":
        """Build from [[a, b], [c, d]] reducing entries mod modulus."""
        (a, b), (c, d) = rows
        m = modulus
        return cls(a % m, b % m, c % m, d % m, m)

    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.modulus

    def trace(self) -> int:
        return (self.a + self.d) % self.modulus

    def det_minus_identity(self) -> int:
        """det(M - I) mod m, which equals det(I - M) for 2x2 matrices."""
        return ((self.a - 1) * (self.d - 1) - self.b * self.c) % self.modulus

    def __matmul__(self, other: "ResidueMatrix") -> "ResidueMatrix":
        m = self.modulus
        return ResidueMatrix(
            (self.a * other.a + self.b * other.c) % m,
            (self.a * other.b + self.b * other.d) % m,
            (self.c * other.a + self.d * other.c) % m,
            (self.c * other.b + self.d * other.d) % m,
            m,
        )

    def reduce(self, d: int) -> "ResidueMatrix":
        """Reduction mod a divisor d of the modulus."""
        if self.modulus % d:
            raise DomainError(f"{d} does not divide the modulus {self.modulus}")
        return ResidueMatrix(self.a % d, self.b % d, self.c % d, self.d % d, d)

    def is_identity_mod(self, l: int) -> bool:
        return (self.a - 1) % l == 0 and self.b % l == 0 and self.c % l == 0 and (self.d - 1) % l == 0

    def is_invertible(self) -> bool:
        return gcd(self.det(), self.modulus) == 1


@dataclass(frozen=True)
class PsiKind:
    """Selects the Psi-set: cyclic or Koblitz membership plus det = k (mod gcd(m, n))."""

    kind: Kind
    n: int = 1
    k: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if gcd(self.n, self.k) != 1:
            raise DomainError(f"k = {self.k} is not coprime to n = {self.n}")


def matrix_codes(arr: np.ndarray, m: int) -> np.ndarray:
    """Integer code ((a m + b) m + c) m + d of each row."""
    return ((arr[:, 0] * m + arr[:, 1]) * m + arr[:, 2]) * m + arr[:, 3]


def _canonical(arr: np.ndarray, m: int) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64).reshape(-1, 4) % m
    _, first = np.unique(matrix_codes(arr, m), return_index=True)
    return arr[first]


@dataclass(frozen=True, eq=False)
class MatrixGroup:
    """An explicit finite subgroup of GL2(Z/mZ), stored as sorted unique rows."""

    modulus: int
    array: np.ndarray
    generators: tuple = field(default_factory=tuple)

    @classmethod
    def from_elements(cls, modulus: int, elements: Iterable, generators: Iterable = ()) -> "MatrixGroup":
        rows = [tuple(M[:4]) for M in elements]
        return cls(modulus=modulus, array=_canonical(rows, modulus), generators=tuple(generators))

    @classmethod
    def from_array(cls, modulus: int, arr: np.ndarray, generators: Iterable = ()) -> "MatrixGroup":
        return cls(modulus=modulus, array=_canonical(arr, modulus), generators=tuple(generators))

    @property
    def order(self) -> int:
        return len(self.array)

    @cached_property
    def elements(self) -> frozenset:
        m = self.modulus
        return frozenset(ResidueMatrix(a, b, c, d, m) for a, b, c, d in self.array.tolist())

    @cached_property
    def codes(self) -> np.ndarray:
        return matrix_codes(self.array, self.modulus)

    def same_elements(self, other: "MatrixGroup") -> bool:
        return self.modulus == other.modulus and np.array_equal(self.codes, other.codes)

    def __len__(self) -> int:
        return self.order

    def __contains__(self, item) -> bool:
        return item in self.elements

    def __iter__(self):
        return iter(self.elements)


def identity(m: int) -> ResidueMatrix:
    return ResidueMatrix(1 % m, 0, 0, 1 % m, m)


def gl2_order(m: int) -> int:
    """|GL2(Z/mZ)| = prod over l^a || m of l^(4(a-1)) (l^2 - 1)(l^2 - l)."""
    if m < 1:
        raise DomainError(f"modulus must be positive, got {m}")
    order = 1
    for l, a in factorize(m).factors:
        order *= l ** (4 * (a - 1)) * (l * l - 1) * (l * l - l)
    return order


def _check_budget(size: int, budget: Optional[int], what: str) -> None:
    budget = RuntimeConfig.ENUM_BUDGET if budget is None else budget
    if size > budget:
        raise ResourceError(f"{what} needs {size} elements, above the enumeration budget {budget}")


def _prime_power_block(q: int) -> np.ndarray:
    # For each top-left entry, vectorize over the other three
    rest = np.indices((q, q, q)).reshape(3, -1).T.astype(np.int64)
    blocks = []
    for a in range(q):
        det = (a * rest[:, 2] - rest[:, 0] * rest[:, 1]) % q
        keep = rest[np.gcd(det, q) == 1]
        blocks.append(np.column_stack([np.full(len(keep), a, dtype=np.int64), keep]))
    return np.concatenate(blocks)


def _crt_combine(A: np.ndarray, m1: int, B: np.ndarray, m2: int) -> np.ndarray:
    e1 = m2 * pow(m2, -1, m1)
    e2 = m1 * pow(m1, -1, m2)
    combined = (A[:, None, :] * e1 + B[None, :, :] * e2) % (m1 * m2)
    return combined.reshape(-1, 4)


@lru_cache(maxsize=16)
def _gl2_array(m: int) -> np.ndarray:
    arr, modulus = np.zeros((1, 4), dtype=np.int64), 1
    for q in crt_components(m):
        arr = _crt_combine(arr, modulus, _prime_power_block(q), q)
        modulus *= q
    arr = _canonical(arr, m)
    arr.flags.writeable = False
    logger.debug(f"Enumerated GL2(Z/{m}Z) with {len(arr)} elements")
    return arr


def full_group(m: int, budget: Optional[int] = None) -> MatrixGroup:
    """
    All invertible 2x2 matrices mod m.

    Args:
        m: Modulus, at least 2
        budget: Maximum number of elements to enumerate

    Returns:
        MatrixGroup equal to GL2(Z/mZ)
    """
    if m < 2:
        raise DomainError(f"modulus must be at least 2, got {m}")
    _check_budget(gl2_order(m), budget, f"GL2(Z/{m}Z)")
    return MatrixGroup(modulus=m, array=_gl2_array(m))


def subgroup_closure(
    gens: Iterable[ResidueMatrix],
    m: int,
    budget: Optional[int] = None,
) -> MatrixGroup:
    """
    Smallest subgroup of GL2(Z/mZ) containing the generators.

    Args:
        gens: Generator matrices, all with modulus m
        m: Modulus
        budget: Maximum group size before giving up

    Returns:
        MatrixGroup generated by gens
    """
    gens = tuple(gens)
    for g in gens:
        if g.modulus != m:
            raise DomainError(f"generator {tuple(g)} is not a matrix mod {m}")
        if not g.is_invertible():
            raise DomainError(f"generator {tuple(g[:4])} is not invertible mod {m}")

    budget = RuntimeConfig.ENUM_BUDGET if budget is None else budget
    one = identity(m)
    seen = {one}
    queue = deque([one])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = x @ g
            if y not in seen:
                seen.add(y)
                queue.append(y)
                if len(seen) > budget:
                    raise ResourceError(
                        f"subgroup closure mod {m} exceeded the enumeration budget {budget}"
                    )

    return MatrixGroup.from_elements(m, seen, gens)


def reduce_group(group: MatrixGroup, d: int) -> MatrixGroup:
    """Image of the group under reduction mod a divisor d of its modulus."""
    if d == group.modulus:
        return group
    if group.modulus % d:
        raise DomainError(f"{d} does not divide the modulus {group.modulus}")
    return MatrixGroup.from_array(d, group.array, (g.reduce(d) for g in group.generators))


def preimage_group(group: MatrixGroup, level: int, budget: Optional[int] = None) -> MatrixGroup:
    """
    The group at another level: reduction when level | m, full-fiber preimage otherwise.

    For a group G of modulus m and any level L, the result is the set of
    M in GL2(Z/LZ) whose reduction mod gcd(L, m) lies in the reduction of G.

    Args:
        group: Group at its own modulus
        level: Target level
        budget: Enumeration budget for GL2 at the target level

    Returns:
        MatrixGroup at the requested level
    """
    g = gcd(level, group.modulus)
    base = reduce_group(group, g)
    if level == g:
        return base

    whole = full_group(level, budget).array
    if g == 1:
        return MatrixGroup(modulus=level, array=whole)
    keep = np.isin(matrix_codes(whole % g, g), base.codes)
    logger.debug(f"Lifted a group of order {base.order} mod {g} to order {int(keep.sum())} mod {level}")
    return MatrixGroup(modulus=level, array=whole[keep])


def sign_mod2(M: ResidueMatrix) -> int:
    """Sign of M mod 2 as a permutation of the three nonzero vectors of F_2^2."""
    if M.modulus % 2:
        raise DomainError(f"sign_mod2 needs an even modulus, got {M.modulus}")
    vectors = [(1, 0), (0, 1), (1, 1)]
    a, b, c, d = M.a % 2, M.b % 2, M.c % 2, M.d % 2
    image = [((a * x + b * y) % 2, (c * x + d * y) % 2) for x, y in vectors]
    perm = [vectors.index(v) for v in image]
    inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=1)
def _sign_table() -> np.ndarray:
    table = np.zeros(16, dtype=np.int64)
    for row in _gl2_array(2).tolist():
        table[matrix_codes(np.array([row]), 2)[0]] = sign_mod2(ResidueMatrix(*row, 2))
    return table


def sign_mod2_array(arr: np.ndarray) -> np.ndarray:
    """sign_mod2 for every row of an (N, 4) array with an even modulus."""
    return _sign_table()[matrix_codes(arr % 2, 2)]


def psi_predicate(m: int, psi: PsiKind) -> Callable[[ResidueMatrix], bool]:
    """Membership test for the Psi-set of psi at modulus m."""
    g = gcd(m, psi.n)
    k = psi.k % g if g > 1 else 0
    if psi.kind == Kind.KOBLITZ:
        def member(M: ResidueMatrix) -> bool:
            if gcd(M.det_minus_identity(), m) != 1:
                return False
            return g == 1 or M.det() % g == k
    else:
        primes = prime_divisors(m) if m > 1 else []

        def member(M: ResidueMatrix) -> bool:
            if any(M.is_identity_mod(l) for l in primes):
                return False
            return g == 1 or M.det() % g == k
    return member


def psi_mask(arr: np.ndarray, m: int, psi: PsiKind) -> np.ndarray:
    """Vectorized Psi membership over an (N, 4) array of matrices mod m."""
    a, b, c, d = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    if psi.kind == Kind.KOBLITZ:
        mask = np.gcd(((a - 1) * (d - 1) - b * c) % m, m) == 1
    else:
        mask = np.ones(len(arr), dtype=bool)
        for l in (prime_divisors(m) if m > 1 else []):
            at_identity = ((a - 1) % l == 0) & (b % l == 0) & (c % l == 0) & ((d - 1) % l == 0)
            mask &= ~at_identity
    g = gcd(m, psi.n)
    if g > 1:
        mask &= (a * d - b * c) % g == psi.k % g
    return mask


def psi_members(m: int, psi: PsiKind, budget: Optional[int] = None) -> frozenset:
    """
    Exact member set of the Psi-set inside GL2(Z/mZ).

    Args:
        m: Modulus
        psi: Cyclic or Koblitz selector with (n, k)
        budget: Enumeration budget

    Returns:
        Frozenset of ResidueMatrix members
    """
    whole = full_group(m, budget).array
    return MatrixGroup(modulus=m, array=whole[psi_mask(whole, m, psi)]).elements


def intersection_count(group: MatrixGroup, psi: PsiKind) -> int:
    """|G intersect Psi|."""
    if group.order == 0:
        return 0
    return int(np.count_nonzero(psi_mask(group.array, group.modulus, psi)))


def delta_ratio(group: MatrixGroup, psi: PsiKind) -> Fraction:
    """|G intersect Psi| / |G| as an exact rational."""
    if group.order == 0:
        raise DomainError("delta ratio of an empty group")
    return Fraction(intersection_count(group, psi), group.order)


def _check_prime_power_args(l: int, a: int, k: int) -> None:
    if not is_prime(l):
        raise DomainError(f"{l} is not prime")
    if a < 1:
        raise DomainError(f"exponent must be positive, got {a}")
    if k % l == 0:
        raise DomainError(f"k = {k} is not coprime to {l}")


def count_cyclic_closed(l: int, a: int, k: int) -> int:
    """#{M in GL2(Z/l^aZ) : M != I mod l, det M = k mod l^a}."""
    _check_prime_power_args(l, a, k)
    lift = l ** (3 * (a - 1))
    if k % l == 1:
        return lift * (l**3 - l - 1)
    return lift * (l**3 - l)


def count_koblitz_closed(l: int, a: int, k: int) -> int:
    """#{M in GL2(Z/l^aZ) : det(M - I) a unit, det M = k mod l^a}."""
    _check_prime_power_args(l, a, k)
    lift = l ** (3 * (a - 1))
    if k % l == 1:
        return lift * (l**3 - l**2 - l)
    return lift * (l**3 - l**2 - 2 * l)


def count_det_trace(l: int, d: int, t: int) -> int:
    """
    #{M in GL2(F_l) : det M = d, tr M = t}.

    The odd case is l^2 + l * Legendre(t^2 - 4d, l); for l = 2 the count is 4 when t is
    even and 2 when t is odd.
    """
    if not is_prime(l):
        raise DomainError(f"{l} is not prime")
    if d % l == 0:
        raise DomainError(f"determinant {d} is not a unit mod {l}")
    if l == 2:
        return 4 if t % 2 == 0 else 2
    return l * l + l * legendre_symbol(t * t - 4 * d, l)


def moebius_delta_cyc(family: dict, R: int) -> Fraction:
    """
    Sum over d | R of mu(d) / |G(d)| for a squarefree R.

    Args:
        family: Mapping d -> MatrixGroup for every divisor d of R (d = 1 may be omitted)
        R: Squarefree level

    Returns:
        Exact rational equal to the cyclic delta ratio of family[R] with n = 1
    """
    if moebius(R) == 0:
        raise DomainError(f"{R} is not squarefree")
    top = family.get(R)
    if top is None:
        raise DomainError(f"family is missing the group at level {R}")

    total = Fraction(0)
    for d in divisors(R):
        if d == 1:
            total += 1
            continue
        group = family.get(d)
        if group is None:
            raise DomainError(f"family is missing the group at level {d}")
        if not reduce_group(top, d).same_elements(group):
            raise DomainError(f"group at level {d} is not the reduction of the group at level {R}")
        total += Fraction(moebius(d), group.order)
    return total
