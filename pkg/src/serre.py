"""
Closed-form constants for Serre curves.

A Serre curve's image is the kernel of an explicit index-2 character psi_m at
levels divisible by m_E, so the constants are the average ones times a rational
correction determined by the squarefree part of the discriminant.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod
from typing import Optional

import numpy as np

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.errors import DomainError
from src.eulerprod import ConstantValue, ap_constant
from src.glmatrix import Kind, MatrixGroup, full_group, sign_mod2_array
from src.modarith import kronecker_symbol, odd_part, prime_divisors, squarefree_part, valuation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SerreCurveData:
    """Short Weierstrass model Y^2 = X^3 + aX + b with its Serre-curve invariants."""

    a: int
    b: int
    discriminant: int
    delta_prime: int
    m_E: int
    serre_assumed: bool = True


@dataclass(frozen=True)
class TauSigns:
    """Signs of the Serre correction; all None when m_E does not divide L."""

    tau: Optional[int]
    tau_cyc: Optional[int]
    tau_prime: Optional[int]
    defined: bool


@dataclass(frozen=True)
class SerreConstant:
    """A Serre-curve constant, its exact correction and the average constant it corrects."""

    constant: ConstantValue
    correction: Fraction
    reference: ConstantValue
    signs: TauSigns
    L: int


def serre_level(delta_prime: int) -> int:
    """m_E = 2|D| when D = 1 (mod 4), otherwise 4|D|."""
    if delta_prime == 0:
        raise DomainError("squarefree part must be nonzero")
    return 2 * abs(delta_prime) if delta_prime % 4 == 1 else 4 * abs(delta_prime)


def build_serre_data(a: int, b: int) -> SerreCurveData:
    """
    Invariants of Y^2 = X^3 + aX + b assumed to be a Serre curve.

    Args:
        a: Coefficient of X
        b: Constant coefficient

    Returns:
        SerreCurveData with discriminant, squarefree part and m_E
    """
    disc = -16 * (4 * a**3 + 27 * b**2)
    if disc == 0:
        raise DomainError(f"the model ({a}, {b}) is singular")
    delta_prime = squarefree_part(disc)
    return SerreCurveData(
        a=a,
        b=b,
        discriminant=disc,
        delta_prime=delta_prime,
        m_E=serre_level(delta_prime),
    )


def level_L(m_E: int, n: int) -> int:
    """
    The level L = prod over l | m_E of l^alpha, alpha = v_l(n) if l | n else 1.

    Args:
        m_E: Adelic level, at least 2
        n: Modulus of the progression

    Returns:
        L
    """
    if m_E < 2:
        raise DomainError(f"m_E must be at least 2, got {m_E}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return prod(l ** (valuation(n, l) if n % l == 0 else 1) for l in prime_divisors(m_E))


def divides_L_rule(delta_prime: int, n: int) -> bool:
    """m_E | L, decided from the residue of the squarefree part and the 2-adic size of n."""
    if delta_prime % 4 == 3 and n % 4:
        return False
    if delta_prime % 4 == 2 and n % 8:
        return False
    return True


def _base_tau(delta_prime: int, k: int) -> int:
    if delta_prime % 4 == 1:
        return -1
    if delta_prime % 4 == 3:
        return -1 if k % 4 == 1 else 1
    if delta_prime % 8 == 2:
        return -1 if k % 8 in (1, 7) else 1
    return -1 if k % 8 in (1, 3) else 1


def tau_signs(delta_prime: int, n: int, k: int, L: int) -> TauSigns:
    """
    The signs tau, tau_cyc and tau_prime for the class k mod n at level L.

    Args:
        delta_prime: Squarefree part of the discriminant
        n: Modulus of the progression
        k: Residue class coprime to n
        L: Level from level_L

    Returns:
        TauSigns, with defined=False and no signs when m_E does not divide L
    """
    m_E = serre_level(delta_prime)
    if L % m_E:
        return TauSigns(tau=None, tau_cyc=None, tau_prime=None, defined=False)

    tau = _base_tau(delta_prime, k)
    L_odd = odd_part(L)
    odd_primes = prime_divisors(L_odd) if L_odd > 1 else []
    twist = prod(kronecker_symbol(k, l) for l in odd_primes if n % l == 0 and (k - 1) % l)
    outside = sum(1 for l in odd_primes if n % l)
    return TauSigns(
        tau=tau,
        tau_cyc=tau * (-1) ** outside * twist,
        tau_prime=-tau * twist,
        defined=True,
    )


def serre_correction(curve: SerreCurveData, n: int, k: int, kind: Kind) -> tuple[Fraction, TauSigns, int]:
    """Exact correction factor relative to the average constant, with its signs and level."""
    L = level_L(curve.m_E, n)
    direct = L % curve.m_E == 0
    if direct != divides_L_rule(curve.delta_prime, n):
        raise ArithmeticError(
            f"divisibility rule disagrees with m_E = {curve.m_E}, L = {L} for n = {n}"
        )

    signs = tau_signs(curve.delta_prime, n, k, L)
    if not signs.defined:
        return Fraction(1), signs, L

    extra = [l for l in prime_divisors(L) if (2 * n) % l]
    if kind == Kind.CYCLIC:
        weight = prod((Fraction(1, l**4 - l**3 - l**2 + l - 1) for l in extra), start=Fraction(1))
        return 1 + signs.tau_cyc * Fraction(1, 5) * weight, signs, L
    weight = prod((Fraction(1, l**3 - 2 * l**2 - l + 3) for l in extra), start=Fraction(1))
    return 1 + signs.tau_prime * weight, signs, L


def serre_constant(
    curve: SerreCurveData,
    n: int,
    k: int,
    kind: Kind,
    cutoff: Optional[int] = None,
) -> SerreConstant:
    """
    Cyclicity or Koblitz constant of a Serre curve for primes p = k (mod n).

    Args:
        curve: Serre curve invariants
        n: Modulus of the progression
        k: Residue class coprime to n
        kind: Cyclic or Koblitz
        cutoff: Truncation prime

    Returns:
        SerreConstant; the constant is the average constant times the exact correction
    """
    if gcd(n, k) != 1:
        raise DomainError(f"k = {k} is not coprime to n = {n}")
    reference = ap_constant(kind, n, k, cutoff)
    correction, signs, L = serre_correction(curve, n, k, kind)
    logger.debug(f"Serre correction {correction} for D' = {curve.delta_prime}, n = {n}, k = {k}")
    return SerreConstant(
        constant=reference.scaled(correction),
        correction=correction,
        reference=reference,
        signs=signs,
        L=L,
    )


def serre_constants_for_n(
    curve: SerreCurveData,
    n: int,
    kind: Kind,
    cutoff: Optional[int] = None,
) -> dict[int, SerreConstant]:
    """serre_constant for every class k mod n coprime to n."""
    return {
        k: serre_constant(curve, n, k, kind, cutoff)
        for k in range(1, n + 1)
        if gcd(n, k) == 1
    }


@lru_cache(maxsize=32)
def _character_kernel(delta_prime: int, m: int) -> np.ndarray:
    whole = full_group(m).array
    m_E = serre_level(delta_prime)
    alpha = np.array([kronecker_symbol(delta_prime, u) for u in range(m_E)], dtype=np.int64)
    dets = (whole[:, 0] * whole[:, 3] - whole[:, 1] * whole[:, 2]) % m_E
    kernel = whole[sign_mod2_array(whole) * alpha[dets] == 1]
    kernel.flags.writeable = False
    return kernel


def psi_character_image(delta_prime: int, m: int) -> MatrixGroup:
    """
    The Serre-curve image at level m as an explicit group.

    When m_E | m this is the kernel of psi_m(M) = sign(M mod 2) * alpha(det M), with alpha
    the quadratic character attached to the squarefree part; otherwise it is all of GL2.

    Args:
        delta_prime: Squarefree part of the discriminant
        m: Level

    Returns:
        MatrixGroup at level m
    """
    m_E = serre_level(delta_prime)
    if m % m_E:
        return full_group(m)
    kernel = _character_kernel(delta_prime, m)
    logger.info(f"Serre image for D' = {delta_prime} at level {m} has order {len(kernel)}")
    return MatrixGroup(modulus=m, array=kernel)
