"""
Empirical verification: reduction type of every good prime up to a bound.

Group orders come from baby-step giant-step over the Hasse interval (with the
quadratic twist to pin down a unique value), cyclicity from division polynomials
over F_p for small primes and certified point sampling with the Weil pairing
above them, and tallies by residue class are compared with
the conjectured counts C x / log x and C x / log^2 x.
"""
import hashlib
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, isqrt, lcm
from multiprocessing import Pool
from typing import Optional

import mpmath
import numpy as np
import pandas as pd
from sympy.ntheory.modular import solve_congruence
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_degree,
    gf_from_int_poly,
    gf_gcd,
    gf_mul,
    gf_mul_ground,
    gf_pow_mod,
    gf_sub,
)

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.runtime import RuntimeConfig
from config.settings import (
    DIVISION_POLYNOMIAL_LIMIT,
    MAX_POINT_SAMPLES,
    NAIVE_COUNT_LIMIT,
    SKIPPED_PRIMES,
    TALLY_BLOCK_SIZE,
)
from src.errors import DomainError
from src.eulerprod import ConstantValue, ap_constant
from src.glmatrix import Kind
from src.modarith import factorize, is_prime, sieve_primes, sqrt_mod_prime, valuation
from src.serre import build_serre_data, serre_correction

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["p", "N", "a_p", "cyclic", "koblitz", "class"]


@dataclass(frozen=True)
class CurveModel:
    """Y^2 = X^3 + aX + b over Q, with an optional explicit set of bad primes."""

    a: int
    b: int
    bad_primes: Optional[frozenset] = None

    def __post_init__(self):
        if self.discriminant == 0:
            raise DomainError(f"the model ({self.a}, {self.b}) is singular")

    @property
    def discriminant(self) -> int:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    def is_bad(self, p: int) -> bool:
        if self.bad_primes is not None:
            return p in self.bad_primes
        return self.discriminant % p == 0


@dataclass(frozen=True)
class ReductionRecord:
    """Reduction data of one good prime."""

    p: int
    N: int
    cyclic: bool
    koblitz: bool
    residue_class: int

    def __post_init__(self):
        if abs(self.a_p) > isqrt(4 * self.p):
            raise ArithmeticError(f"|E(F_{self.p})| = {self.N} violates the Hasse bound")
        if self.koblitz and not self.cyclic:
            raise ArithmeticError(f"p = {self.p} is Koblitz but not cyclic")

    @property
    def a_p(self) -> int:
        return self.p + 1 - self.N


@dataclass(frozen=True)
class ReductionTally:
    """Counts per class k mod n of good primes, cyclic primes and Koblitz primes up to x."""

    x: int
    n: int
    counts: pd.DataFrame
    skipped: tuple

    def count(self, k: int, column: str = "primes") -> int:
        return int(self.counts.loc[k, column])

    @property
    def totals(self) -> pd.Series:
        return self.counts.sum()


@dataclass(frozen=True)
class MomentResult:
    """Average of Serre-curve constants over a set of curves against the average constant."""

    average: float
    reference: ConstantValue
    deviation: float
    mean_correction: Fraction
    curves: int


# Point arithmetic on Y^2 = X^3 + aX + b over F_p; None is the point at infinity.

def ec_add(P, Q, a: int, p: int):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def ec_neg(P, p: int):
    if P is None:
        return None
    return P[0], -P[1] % p


def ec_mul(k: int, P, a: int, p: int):
    if k < 0:
        return ec_mul(-k, ec_neg(P, p), a, p)
    result = None
    addend = P
    while k:
        if k & 1:
            result = ec_add(result, addend, a, p)
        addend = ec_add(addend, addend, a, p)
        k >>= 1
    return result


def _is_square(v: int, p: int) -> bool:
    return v % p == 0 or pow(v, (p - 1) // 2, p) == 1


def _point_rng(curve: CurveModel, p: int) -> np.random.Generator:
    """Counter-based generator keyed by (a, b, p)."""
    digest = hashlib.blake2b(f"{curve.a}:{curve.b}:{p}".encode(), digest_size=16).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))


def _random_point(a: int, b: int, p: int, rng: np.random.Generator):
    while True:
        x = int(rng.integers(p))
        rhs = (x * x * x + a * x + b) % p
        if rhs == 0:
            return x, 0
        if pow(rhs, (p - 1) // 2, p) == 1:
            y = sqrt_mod_prime(rhs, p)
            return (x, p - y) if rng.integers(2) else (x, y)


def hasse_interval(p: int) -> tuple[int, int]:
    """[p + 1 - floor(2 sqrt p), p + 1 + floor(2 sqrt p)]."""
    s = isqrt(4 * p)
    return p + 1 - s, p + 1 + s


def twist(curve: CurveModel, p: int) -> tuple[int, int]:
    """Coefficients (a g^2, b g^3) mod p of the quadratic twist by the least non-residue g."""
    g = 2
    while _is_square(g, p):
        g += 1
    return curve.a * g * g % p, curve.b * g**3 % p


def _check_good(curve: CurveModel, p: int) -> None:
    if p < 3 or not is_prime(p):
        raise DomainError(f"p = {p} must be an odd prime")
    if curve.discriminant % p == 0:
        raise DomainError(f"p = {p} divides the discriminant {curve.discriminant}")


def naive_group_order(curve: CurveModel, p: int) -> int:
    """1 + #{(x, y)} by counting square roots of x^3 + ax + b for every x."""
    xs = np.arange(p, dtype=np.int64)
    roots = np.bincount(xs * xs % p, minlength=p)
    rhs = (xs * xs % p * xs + curve.a % p * xs + curve.b % p) % p
    return 1 + int(roots[rhs].sum())


def order_of_point(P, multiple: int, a: int, p: int) -> int:
    """Exact order of P given a positive multiple of it."""
    order = multiple
    for q, _ in factorize(multiple).factors:
        while order % q == 0 and ec_mul(order // q, P, a, p) is None:
            order //= q
    return order


def _bsgs_multiple(P, start: int, step: int, count: int, a: int, p: int) -> Optional[int]:
    """Least j in [0, count] with (start + j step) P = O."""
    Q = ec_mul(start, P, a, p)
    R = ec_mul(step, P, a, p)
    m = isqrt(count) + 1
    baby = {}
    T = None
    for i in range(m):
        baby.setdefault(T, i)
        T = ec_add(T, R, a, p)
    giant = T
    current = Q
    for t in range(m + 1):
        i = baby.get(ec_neg(current, p))
        if i is not None:
            j = t * m + i
            return j if j <= count else None
        current = ec_add(current, giant, a, p)
    return None


def _candidate_count(lo: int, hi: int, M: int, M_twist: int, p: int) -> tuple[int, int]:
    """Number of N in [lo, hi] with M | N and M_twist | 2p + 2 - N, and the least one."""
    solution = solve_congruence((0, M), ((2 * p + 2) % M_twist, M_twist))
    if solution is None:
        return 0, 0
    r, modulus = int(solution[0]), int(solution[1])
    first = lo + (r - lo) % modulus
    if first > hi:
        return 0, 0
    return (hi - first) // modulus + 1, first


def group_order(curve: CurveModel, p: int, rng: Optional[np.random.Generator] = None) -> int:
    """
    |E(F_p)| for a good odd prime p.

    Small primes are counted directly. Otherwise random points on E and its twist
    give orders M and M' with M | N and M' | 2p + 2 - N, until a single N in the
    Hasse interval remains.

    Args:
        curve: Curve model
        p: Good odd prime
        rng: Point sampler (defaults to the generator keyed by (a, b, p))

    Returns:
        The group order N
    """
    _check_good(curve, p)
    if p < NAIVE_COUNT_LIMIT:
        return naive_group_order(curve, p)

    rng = _point_rng(curve, p) if rng is None else rng
    lo, hi = hasse_interval(p)
    a, b = curve.a % p, curve.b % p
    a_twist, b_twist = twist(curve, p)
    M, M_twist = 1, 1
    for attempt in range(MAX_POINT_SAMPLES):
        on_twist = attempt % 2 == 1
        ca, cb = (a_twist, b_twist) if on_twist else (a, b)
        modulus = M_twist if on_twist else M
        P = _random_point(ca, cb, p, rng)
        start = -(-lo // modulus) * modulus
        j = _bsgs_multiple(P, start, modulus, (hi - start) // modulus, ca, p)
        if j is None:
            raise ArithmeticError(f"no multiple of the point order in the Hasse interval for p = {p}")
        order = order_of_point(P, start + j * modulus, ca, p)
        if on_twist:
            M_twist = lcm(M_twist, order)
        else:
            M = lcm(M, order)
        count, first = _candidate_count(lo, hi, M, M_twist, p)
        if count == 1:
            return first
    logger.warning(f"Point orders did not determine |E(F_{p})|; counting directly")
    return naive_group_order(curve, p)


def _line_value(U, V, Q, a: int, p: int) -> Optional[int]:
    """Line through U and V over the vertical at U + V, evaluated at Q; None at a zero or pole."""
    xU, yU = U
    xV, yV = V
    xQ, yQ = Q
    if xU == xV and (yU + yV) % p == 0:
        value = (xQ - xU) % p
        return value or None
    if U == V:
        lam = (3 * xU * xU + a) * pow(2 * yU, -1, p) % p
    else:
        lam = (yV - yU) * pow(xV - xU, -1, p) % p
    x3 = (lam * lam - xU - xV) % p
    num = (yQ - yU - lam * (xQ - xU)) % p
    den = (xQ - x3) % p
    if num == 0 or den == 0:
        return None
    return num * pow(den, -1, p) % p


def _miller(P, Q, l: int, a: int, p: int) -> Optional[int]:
    """f_{l,P}(Q) with divisor l(P) - l(O) for l P = O, by Miller's double-and-add."""
    f, T = 1, P
    for bit in bin(l)[3:]:
        # Lines through O contribute nothing
        g = 1 if T is None else _line_value(T, T, Q, a, p)
        if g is None:
            return None
        f = f * f * g % p
        T = ec_add(T, T, a, p)
        if bit == "1":
            g = 1 if T is None else _line_value(T, P, Q, a, p)
            if g is None:
                return None
            f = f * g % p
            T = ec_add(T, P, a, p)
    if T is not None:
        raise DomainError(f"{l} P is not the identity")
    return f


def weil_pairing(
    P,
    Q,
    l: int,
    a: int,
    b: int,
    p: int,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """
    e_l(P, Q) for points P, Q of E(F_p) killed by l, where P has order exactly l.

    Evaluated as f_P(Q + S) f_Q(-S) / (f_P(S) f_Q(P - S)) with an auxiliary point S,
    drawn again whenever a Miller evaluation meets a zero or a pole.

    Args:
        P: Point of order l
        Q: Point with l Q = O
        l: Pairing level
        a, b: Curve coefficients mod p
        p: Prime
        rng: Sampler for the auxiliary point

    Returns:
        An l-th root of unity in F_p, equal to 1 when Q lies in the subgroup generated by P
    """
    if P is None or Q is None:
        return 1
    rng = np.random.Generator(np.random.Philox(key=p)) if rng is None else rng
    for _ in range(MAX_POINT_SAMPLES):
        S = _random_point(a, b, p, rng)
        points = (ec_add(Q, S, a, p), S, ec_add(P, ec_neg(S, p), a, p), ec_neg(S, p))
        if any(T is None for T in points):
            continue
        values = [_miller(P, points[0], l, a, p), _miller(P, points[1], l, a, p),
                  _miller(Q, points[2], l, a, p), _miller(Q, points[3], l, a, p)]
        if any(v is None for v in values):
            continue
        f_pqs, f_ps, f_qps, f_qs = values
        value = f_pqs * f_qs * pow(f_ps * f_qps, -1, p) % p
        if pow(value, l, p) != 1:
            raise ArithmeticError(f"e_{l} on E(F_{p}) is not an {l}-th root of unity")
        return value
    raise ArithmeticError(f"no auxiliary point avoids the divisors of e_{l} on E(F_{p})")


def division_polynomial(l: int, a: int, b: int, p: int) -> list:
    """
    The l-division polynomial of Y^2 = X^3 + aX + b over F_p, for odd l.

    Coefficients are dense, leading first. Even-index terms of the recursion are
    kept divided by Y so that every term is a polynomial in X.
    """
    if l < 1 or l % 2 == 0:
        raise DomainError(f"division polynomials are computed for odd l, got {l}")
    R = gf_from_int_poly([1, 0, a, b], p)
    R2 = gf_mul(R, R, p, ZZ)
    half = pow(2, -1, p)

    def mul(*fs):
        return reduce(lambda f, g: gf_mul(f, g, p, ZZ), fs)

    psi = [
        [],
        [1],
        [2],
        gf_from_int_poly([3, 0, 6 * a, 12 * b, -a * a], p),
        gf_from_int_poly([4, 0, 20 * a, 80 * b, -20 * a * a, -16 * a * b, -32 * b * b - 4 * a**3], p),
    ]
    for n in range(5, l + 1):
        m = n // 2
        if n % 2 == 0:
            inner = gf_sub(
                mul(psi[m + 2], psi[m - 1], psi[m - 1]),
                mul(psi[m - 2], psi[m + 1], psi[m + 1]),
                p, ZZ,
            )
            psi.append(gf_mul_ground(mul(psi[m], inner), half, p, ZZ))
        elif m % 2 == 0:
            psi.append(gf_sub(
                mul(R2, psi[m + 2], psi[m], psi[m], psi[m]),
                mul(psi[m - 1], psi[m + 1], psi[m + 1], psi[m + 1]),
                p, ZZ,
            ))
        else:
            psi.append(gf_sub(
                mul(psi[m + 2], psi[m], psi[m], psi[m]),
                mul(R2, psi[m - 1], psi[m + 1], psi[m + 1], psi[m + 1]),
                p, ZZ,
            ))
    return psi[l]


def has_full_torsion(curve: CurveModel, p: int, l: int) -> bool:
    """
    Whether E[l] is contained in E(F_p), for an odd prime l different from p.

    True exactly when the l-division polynomial splits over F_p and
    X^3 + aX + b is a square at each of its roots.
    """
    a, b = curve.a % p, curve.b % p
    psi = division_polynomial(l, a, b, p)
    frobenius = gf_sub(gf_pow_mod([1, 0], p, psi, p, ZZ), [1, 0], p, ZZ)
    split = gf_gcd(psi, frobenius, p, ZZ)
    if gf_degree(split) < (l * l - 1) // 2:
        return False
    rhs = gf_from_int_poly([1, 0, a, b], p)
    return gf_pow_mod(rhs, (p - 1) // 2, split, p, ZZ) == [1]


def _l_power_order(P, l: int, a: int, p: int) -> int:
    order = 1
    while P is not None:
        P = ec_mul(l, P, a, p)
        order *= l
    return order


def _cyclic_at(curve: CurveModel, p: int, N: int, l: int, rng: np.random.Generator) -> bool:
    """
    Whether the l-part of E(F_p) is cyclic, for an odd prime l with l^2 | N and l | p - 1.

    Small l are decided by the division polynomial. Above DIVISION_POLYNOMIAL_LIMIT,
    a point of order l^v(N) proves cyclicity and a nontrivial pairing between a
    point of largest order l^e and another point of the l-part proves the opposite.
    """
    if l <= DIVISION_POLYNOMIAL_LIMIT:
        return not has_full_torsion(curve, p, l)

    a, b = curve.a % p, curve.b % p
    full = l ** valuation(N, l)
    cofactor = N // full
    generator, order = None, 1
    for _ in range(MAX_POINT_SAMPLES):
        Q = ec_mul(cofactor, _random_point(a, b, p, rng), a, p)
        m = _l_power_order(Q, l, a, p)
        if m == full:
            return True
        if m > order:
            generator, order = Q, m
        elif m > 1 and weil_pairing(generator, Q, order, a, b, p, rng) != 1:
            return False
    raise ArithmeticError(f"could not decide the {l}-torsion rank of E(F_{p}) in {MAX_POINT_SAMPLES} samples")


def is_cyclic(curve: CurveModel, p: int, N: int, rng: Optional[np.random.Generator] = None) -> bool:
    """
    Whether E(F_p) is cyclic.

    Only primes l with l^2 | N and l | p - 1 can obstruct. At l = 2 the group is
    non-cyclic exactly when X^3 + aX + b splits, i.e. when 4 | N and the
    discriminant is a square mod p. Odd l obstruct exactly when E[l] is rational.

    Args:
        curve: Curve model
        p: Good prime
        N: |E(F_p)|
        rng: Point sampler (defaults to the generator keyed by (a, b, p))

    Returns:
        True if the group is cyclic
    """
    obstructing = [l for l, e in factorize(N).factors if e >= 2 and (p - 1) % l == 0]
    if not obstructing:
        return True
    rng = _point_rng(curve, p) if rng is None else rng
    for l in obstructing:
        if l == 2:
            if _is_square(curve.discriminant, p):
                return False
        elif not _cyclic_at(curve, p, N, l, rng):
            return False
    return True


def naive_group_structure(curve: CurveModel, p: int) -> tuple[int, int]:
    """
    (N, exponent) of E(F_p) by listing every point.

    Args:
        curve: Curve model
        p: Good prime

    Returns:
        Group order and group exponent
    """
    _check_good(curve, p)
    a, b = curve.a % p, curve.b % p
    roots = {}
    for y in range(p):
        roots.setdefault(y * y % p, []).append(y)
    points = [(x, y) for x in range(p) for y in roots.get((x * x * x + a * x + b) % p, [])]
    N = len(points) + 1
    exponent = 1
    for P in points:
        exponent = lcm(exponent, order_of_point(P, N, a, p))
    return N, exponent


def residue_class(p: int, n: int) -> int:
    return p % n if n > 1 else 1


def classify_prime(curve: CurveModel, p: int, n: int = 1) -> ReductionRecord:
    """Group order, cyclicity and primality of the order at one good prime."""
    rng = _point_rng(curve, p)
    N = group_order(curve, p, rng)
    cyclic = is_cyclic(curve, p, N, rng)
    return ReductionRecord(p=p, N=N, cyclic=cyclic, koblitz=is_prime(N), residue_class=residue_class(p, n))


def _good_primes(curve: CurveModel, x: int, n: int) -> tuple[list[int], list[int]]:
    good, skipped = [], []
    for p in sieve_primes(x):
        if p in SKIPPED_PRIMES or curve.is_bad(p):
            skipped.append(p)
        elif n % p:
            good.append(p)
    return good, skipped


def _record_block(task) -> list[tuple]:
    a, b, bad, n, primes = task
    curve = CurveModel(a, b, bad)
    rows = []
    for p in primes:
        r = classify_prime(curve, p, n)
        rows.append((r.p, r.N, r.a_p, r.cyclic, r.koblitz, r.residue_class))
    return rows


def _tally_block(task) -> dict:
    counts = {}
    for _, _, _, cyclic, koblitz, k in _record_block(task):
        entry = counts.setdefault(k, [0, 0, 0])
        entry[0] += 1
        entry[1] += cyclic
        entry[2] += koblitz
    return counts


def _run_blocks(worker, curve: CurveModel, primes: list[int], n: int, threads: Optional[int]) -> list:
    threads = RuntimeConfig.THREADS if threads is None else threads
    tasks = [
        (curve.a, curve.b, curve.bad_primes, n, primes[i:i + TALLY_BLOCK_SIZE])
        for i in range(0, len(primes), TALLY_BLOCK_SIZE)
    ]
    if threads <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with Pool(min(threads, len(tasks))) as pool:
        return pool.map(worker, tasks)


def tally(
    curve: CurveModel,
    x: int,
    n: int = 1,
    threads: Optional[int] = None,
) -> ReductionTally:
    """
    Count good primes p <= x by class mod n, with how many are cyclic and Koblitz.

    Args:
        curve: Curve model
        x: Bound
        n: Modulus for the classes
        threads: Worker processes (defaults to the runtime setting)

    Returns:
        ReductionTally with one row per class k coprime to n
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    good, skipped = _good_primes(curve, x, n)
    logger.info(f"Classifying {len(good)} primes up to {x} for ({curve.a}, {curve.b})")

    classes = [k for k in range(1, n + 1) if gcd(n, k) == 1] if n > 1 else [1]
    merged = {k: [0, 0, 0] for k in classes}
    for block in _run_blocks(_tally_block, curve, good, n, threads):
        for k, (primes, cyclic, koblitz) in block.items():
            merged[k][0] += primes
            merged[k][1] += cyclic
            merged[k][2] += koblitz

    counts = pd.DataFrame.from_dict(merged, orient="index", columns=["primes", "cyclic", "koblitz"])
    counts.index.name = "k"
    logger.info(f"Tally done: {int(counts['cyclic'].sum())} cyclic, {int(counts['koblitz'].sum())} Koblitz")
    return ReductionTally(x=x, n=n, counts=counts, skipped=tuple(skipped))


def records(curve: CurveModel, x: int, n: int = 1, threads: Optional[int] = None) -> pd.DataFrame:
    """Per-prime dump with columns p, N, a_p, cyclic, koblitz, class."""
    good, _ = _good_primes(curve, x, n)
    rows = [row for block in _run_blocks(_record_block, curve, good, n, threads) for row in block]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def li_integral(x: float) -> float:
    """Integral of 1/log t from 2 to x."""
    return float(mpmath.li(x) - mpmath.li(2))


def li2_integral(x: float) -> float:
    """Integral of 1/log^2 t from 2 to x."""
    x = mpmath.mpf(x)
    return float(mpmath.li(x) - x / mpmath.log(x) - (mpmath.li(2) - 2 / mpmath.log(2)))


def _ratio(observed: int, predicted: float) -> float:
    if predicted == 0:
        return 1.0 if observed == 0 else math.inf
    return observed / predicted


def compare(tally_result: ReductionTally, constants: dict, kind: Kind) -> pd.DataFrame:
    """
    Observed counts against the conjectured asymptotics for every class.

    Args:
        tally_result: Tally to compare
        constants: Map k -> ConstantValue covering every class
        kind: Cyclic or Koblitz

    Returns:
        DataFrame with columns k, observed, constant, predicted, predicted_integral,
        ratio, ratio_integral
    """
    missing = [k for k in tally_result.counts.index if k not in constants]
    if missing:
        raise DomainError(f"no constants for classes {missing}")

    x = tally_result.x
    column = "cyclic" if kind == Kind.CYCLIC else "koblitz"
    if kind == Kind.CYCLIC:
        scale, integral = x / math.log(x), li_integral(x)
    else:
        scale, integral = x / math.log(x) ** 2, li2_integral(x)

    rows = []
    for k in tally_result.counts.index:
        c = constants[k].value
        observed = tally_result.count(k, column)
        rows.append({
            "k": k,
            "observed": observed,
            "constant": c,
            "predicted": c * scale,
            "predicted_integral": c * integral,
            "ratio": _ratio(observed, c * scale),
            "ratio_integral": _ratio(observed, c * integral),
        })
    return pd.DataFrame(rows)


def curve_box(A: int, B: int) -> pd.DataFrame:
    """All nonsingular (a, b) with |a| <= A, |b| <= B."""
    if A < 0 or B < 0:
        raise DomainError(f"box bounds must be non-negative, got ({A}, {B})")
    a, b = np.meshgrid(np.arange(-A, A + 1), np.arange(-B, B + 1), indexing="ij")
    df = pd.DataFrame({"a": a.ravel(), "b": b.ravel()})
    return df[4 * df["a"] ** 3 + 27 * df["b"] ** 2 != 0].reset_index(drop=True)


def moment_average(
    curves: pd.DataFrame,
    n: int,
    k: int,
    kind: Kind,
    cutoff: Optional[int] = None,
) -> MomentResult:
    """
    Average of the Serre-curve constants of the given curves.

    Every curve is treated as a Serre curve. All constants share the average
    constant as a factor, so the average is that constant times the mean
    exact correction.

    Args:
        curves: DataFrame with columns a and b
        n: Modulus of the progression
        k: Residue class coprime to n
        kind: Cyclic or Koblitz
        cutoff: Truncation prime

    Returns:
        MomentResult with the deviation from the average constant
    """
    if curves.empty:
        raise DomainError("no curves to average over")
    reference = ap_constant(kind, n, k, cutoff)
    total = Fraction(0)
    for a, b in curves[["a", "b"]].itertuples(index=False):
        correction, _, _ = serre_correction(build_serre_data(int(a), int(b)), n, k, kind)
        total += correction
    mean = total / len(curves)
    average = reference.value * float(mean)
    deviation = abs(average - reference.value)
    logger.info(f"Average over {len(curves)} curves: {average:.6f} (deviation {deviation:.2e})")
    return MomentResult(
        average=average,
        reference=reference,
        deviation=deviation,
        mean_correction=mean,
        curves=len(curves),
    )


def moment_experiment(A: int, B: int, n: int, k: int, kind: Kind, cutoff: Optional[int] = None) -> MomentResult:
    """moment_average over every nonsingular curve in the box |a| <= A, |b| <= B."""
    return moment_average(curve_box(A, B), n, k, kind, cutoff)
