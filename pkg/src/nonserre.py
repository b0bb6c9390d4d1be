"""
Constants for non-CM curves from a supplied adelic image.

The image is given by generators at its level m_E. A constant is the exact
ratio at the level L, the local factors at primes of n coprime to m_E, and the
average Euler factors at every other prime.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Optional

import numpy as np

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.errors import DomainError
from src.eulerprod import ConstantValue, assemble_constant
from src.glmatrix import (
    Kind,
    MatrixGroup,
    PsiKind,
    ResidueMatrix,
    count_cyclic_closed,
    count_koblitz_closed,
    delta_ratio,
    gl2_order,
    preimage_group,
    subgroup_closure,
)
from src.fixtures import load_generator_file, parse_generator_file
from src.modarith import coprime_part, factorize, prime_divisors
from src.serre import level_L

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdelicImageSpec:
    """Generators of the image mod its adelic level, checked for surjective determinant."""

    level: int
    generators: tuple
    label: str = ""
    group_override: Optional[MatrixGroup] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.level < 2:
            raise DomainError(f"image level must be at least 2, got {self.level}")
        arr = self.group.array
        dets = set(np.unique((arr[:, 0] * arr[:, 3] - arr[:, 1] * arr[:, 2]) % self.level).tolist())
        units = {u for u in range(1, self.level) if gcd(u, self.level) == 1}
        if dets != units:
            missing = sorted(units - dets)
            raise DomainError(
                f"image {self.label or '(unlabelled)'} does not have surjective determinant; "
                f"missing {missing}"
            )

    @cached_property
    def group(self) -> MatrixGroup:
        if self.group_override is not None:
            return self.group_override
        return subgroup_closure(self.generators, self.level)

    @classmethod
    def from_group(cls, group: MatrixGroup, label: str = "") -> "AdelicImageSpec":
        """Wrap an already enumerated group."""
        return cls(level=group.modulus, generators=group.generators, label=label, group_override=group)


@dataclass(frozen=True)
class APSplit:
    """n = n1 * n2 with n1 = gcd(n, m_E^infinity), and the level L."""

    n: int
    n1: int
    n2: int
    L: int


@dataclass(frozen=True)
class ImageConstant:
    """Constant from an adelic image with its exact pieces."""

    constant: ConstantValue
    delta: Fraction
    leading: Fraction
    split: APSplit


def split_ap(n: int, m_E: int) -> APSplit:
    """
    Split n into its part supported on m_E and the rest.

    Args:
        n: Modulus of the progression
        m_E: Adelic level

    Returns:
        APSplit with n1 * n2 = n, gcd(n2, m_E) = 1 and L from level_L
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    n2 = coprime_part(n, m_E)
    return APSplit(n=n, n1=n // n2, n2=n2, L=level_L(m_E, n))


def image_group_at(image: AdelicImageSpec, m: int) -> MatrixGroup:
    """The image at level m, reducing or lifting through full fibers."""
    return preimage_group(image.group, m)


def normalization(kind: Kind, primes) -> Fraction:
    """1 / prod(1 - 1/l) for Koblitz constants, 1 for cyclic ones."""
    if kind == Kind.CYCLIC:
        return Fraction(1)
    result = Fraction(1)
    for l in primes:
        result /= 1 - Fraction(1, l)
    return result


def local_factor(kind: Kind, l: int, a: int, k: int) -> Fraction:
    """Factor at l^a || n with l coprime to the level, from the closed-form counts."""
    counter = count_cyclic_closed if kind == Kind.CYCLIC else count_koblitz_closed
    return Fraction(counter(l, a, k), gl2_order(l**a)) * normalization(kind, [l])


def constant_from_image(
    image: AdelicImageSpec,
    n: int,
    k: int,
    kind: Kind,
    cutoff: Optional[int] = None,
) -> ImageConstant:
    """
    Cyclicity or Koblitz constant for primes p = k (mod n) from an adelic image.

    Args:
        image: Image generators at level m_E
        n: Modulus of the progression
        k: Residue class coprime to n
        kind: Cyclic or Koblitz
        cutoff: Truncation prime

    Returns:
        ImageConstant whose leading factor is exact
    """
    psi = PsiKind(kind, n=n, k=k)
    split = split_ap(n, image.level)
    group = image_group_at(image, split.L)
    delta = delta_ratio(group, psi)

    leading = delta * normalization(kind, prime_divisors(split.L))
    if split.n2 > 1:
        for l, a in factorize(split.n2).factors:
            leading *= local_factor(kind, l, a, k)

    excluded = sorted(set(prime_divisors(image.level)) | set(prime_divisors(n) if n > 1 else []))
    constant = assemble_constant(kind, leading, excluded, cutoff)
    logger.info(
        f"Image {image.label or image.level}: delta({split.L}) = {delta}, "
        f"{kind.value} constant for p = {k} mod {n} is {constant.value:.6f}"
    )
    return ImageConstant(constant=constant, delta=delta, leading=leading, split=split)


def trace_spectrum(image: AdelicImageSpec, m: int, k: int) -> set[int]:
    """
    Traces of the image elements at level m whose determinant is k mod m.

    Args:
        image: Image generators
        m: Level, a divisor or multiple of the image level
        k: Determinant class

    Returns:
        Set of trace residues mod m (empty when no element has that determinant)
    """
    group = image_group_at(image, m)
    arr = group.array
    dets = (arr[:, 0] * arr[:, 3] - arr[:, 1] * arr[:, 2]) % m
    traces = set(np.unique((arr[:, 0] + arr[:, 3])[dets == k % m] % m).tolist())
    if not traces:
        logger.warning(f"No element of the image at level {m} has determinant {k % m}")
    return traces


def image_from_rows(level: int, rows: list, label: str = "") -> AdelicImageSpec:
    """Build an image from generator rows (a, b, c, d)."""
    gens = tuple(ResidueMatrix.of([[a, b], [c, d]], level) for a, b, c, d in rows)
    return AdelicImageSpec(level=level, generators=gens, label=label)


def parse_image(text: str, path: Optional[Path] = None) -> AdelicImageSpec:
    """Build an image from the text of a generator file."""
    parsed = parse_generator_file(text, path)
    return image_from_rows(parsed.level, list(parsed.rows), parsed.label)


def load_image(path) -> AdelicImageSpec:
    """
    Load an image from a generator file.

    Args:
        path: Path to a .gens file (relative paths also tried under the data directory)

    Returns:
        AdelicImageSpec with its group enumerated and checked
    """
    parsed = load_generator_file(path)
    label = parsed.label or Path(path).stem
    return image_from_rows(parsed.level, list(parsed.rows), label)
