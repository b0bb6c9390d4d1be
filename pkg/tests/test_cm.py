"""
Unit tests for CM orders and the CM Koblitz constant.
"""
import pytest
from fractions import Fraction

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cm import (
    CMImageSpec,
    ImQuadOrder,
    OrderResidue,
    chi_K,
    class_number_l_value,
    cm_koblitz_ap,
    cm_tail,
    count_cm_closed,
    image_at_level,
    load_cm_image,
    parse_cm_image,
    supersingular_vanishing_classes,
    tail_factor,
    unit_group,
    unit_group_order,
)
from src.errors import DomainError, FixtureParseError
from src.modarith import sieve_primes

FULL_CUTOFF = 10_000_000
QUICK_CUTOFF = 100_000


@pytest.fixture(scope="module")
def eisenstein():
    """The maximal order of Q(sqrt(-3))."""
    return ImQuadOrder(d_K=-3)


@pytest.fixture(scope="module")
def curve_432d1():
    """Image over K of 432.d1 stored at level 12."""
    return load_cm_image("432d1.cm")


def brute_cm_count(order: ImQuadOrder, l: int, a: int, k: int) -> int:
    """Units g mod l^a with N(g - 1) a unit and N(g) = k, by enumeration."""
    m = l**a
    count = 0
    for g in unit_group(order, m):
        shifted = OrderResidue((g.x - 1) % m, g.y, m)
        if order.norm(shifted) % l and order.norm(g) == k % m:
            count += 1
    return count


class TestImQuadOrder:
    """Tests for order arithmetic."""

    def test_eisenstein_basis(self, eisenstein):
        assert eisenstein.trace == -3
        assert eisenstein.norm_of_basis == 3

    def test_multiplication_matches_norm(self, eisenstein):
        m = 13
        u = OrderResidue(2, 5, m)
        v = OrderResidue(7, 11, m)
        assert eisenstein.norm(eisenstein.mul(u, v)) == eisenstein.norm(u) * eisenstein.norm(v) % m

    def test_basis_squared(self, eisenstein):
        w = OrderResidue(0, 1, 100)
        assert eisenstein.mul(w, w) == OrderResidue(97, 97, 100)

    def test_unknown_field(self):
        with pytest.raises(DomainError):
            ImQuadOrder(d_K=-5)
        with pytest.raises(DomainError):
            ImQuadOrder(d_K=-4, f=4)


class TestUnitGroup:
    """Tests for unit_group and unit_group_order."""

    @pytest.mark.parametrize("m,size", [(4, 12), (3, 6), (6, 18), (12, 72), (7, 36)])
    def test_sizes(self, eisenstein, m, size):
        assert len(unit_group(eisenstein, m)) == size

    @pytest.mark.parametrize("l,a", [(5, 1), (5, 2), (7, 1), (7, 2), (11, 1), (13, 1)])
    def test_closed_form(self, eisenstein, l, a):
        assert len(unit_group(eisenstein, l**a)) == unit_group_order(eisenstein, l, a)

    def test_gaussian_integers(self):
        assert len(unit_group(ImQuadOrder(d_K=-4), 5)) == 16

    def test_budget(self, eisenstein):
        from src.errors import ResourceError
        with pytest.raises(ResourceError):
            unit_group(eisenstein, 50, budget=100)


class TestCountCMClosed:
    """Closed-form CM counts against enumeration."""

    @pytest.mark.parametrize("l,a", [(5, 1), (5, 2), (7, 1), (7, 2), (11, 1), (13, 1)])
    def test_matches_enumeration(self, eisenstein, l, a):
        split = chi_K(-3, l) == 1
        m = l**a
        for k in range(1, m):
            if k % l:
                assert count_cm_closed(l, a, k, split) == brute_cm_count(eisenstein, l, a, k), (l, a, k)

    def test_spot_values(self):
        assert count_cm_closed(7, 1, 1, split=True) == 5
        assert count_cm_closed(7, 1, 3, split=True) == 4
        assert count_cm_closed(5, 1, 1, split=False) == 5
        assert count_cm_closed(5, 2, 2, split=False) == 30

    def test_invalid_arguments(self):
        with pytest.raises(DomainError):
            count_cm_closed(2, 1, 1, split=False)
        with pytest.raises(DomainError):
            count_cm_closed(7, 1, 7, split=True)


class TestCharacter:
    """Tests for chi_K and the class number formula."""

    def test_splitting(self):
        assert chi_K(-3, 7) == 1
        assert chi_K(-3, 5) == -1
        assert chi_K(-3, 3) == 0
        assert chi_K(-4, 5) == 1
        assert chi_K(-7, 2) == 1

    def test_l_value_eisenstein(self):
        assert class_number_l_value(-3) == pytest.approx(0.604599788, abs=1e-9)

    def test_l_value_gaussian(self):
        assert class_number_l_value(-4) == pytest.approx(0.785398163, abs=1e-9)

    def test_tail_matches_direct_product(self):
        cutoff = 2000
        exact_part = 1.0
        for l in sieve_primes(cutoff):
            if l not in (2, 3):
                exact_part *= float(tail_factor(-3, l))
        tail, bound = cm_tail(-3, [2, 3], cutoff)
        # the direct product converges only conditionally
        assert tail == pytest.approx(exact_part, rel=5e-2)
        assert bound > 0

    @pytest.mark.parametrize("d_K", [-3, -4, -7, -8, -11, -163])
    def test_tail_factor_exceeds_one_exactly_at_inert_primes(self, d_K):
        for l in sieve_primes(1000):
            chi = chi_K(d_K, l)
            factor = tail_factor(d_K, l)
            if chi == -1:
                assert factor > 1, l
            elif chi == 1:
                assert factor < 1, l
            else:
                assert factor == 1, l


class Test432d1:
    """Constants of 432.d1."""

    def test_fixture(self, curve_432d1):
        assert curve_432d1.label == "432.d1"
        assert curve_432d1.level == 12
        assert len(curve_432d1.array) == 24

    def test_image_mod_six(self, curve_432d1):
        assert len(image_at_level(curve_432d1, 6)) == 6

    def test_class_one(self, curve_432d1):
        result = cm_koblitz_ap(curve_432d1, 6, 1, FULL_CUTOFF)
        assert result.count == 2
        assert result.group_order == 6
        assert result.L == 6
        assert result.leading == Fraction(1, 2)
        assert result.constant.value == pytest.approx(0.505448, abs=1e-5)

    def test_class_five_vanishes(self, curve_432d1):
        result = cm_koblitz_ap(curve_432d1, 6, 5, QUICK_CUTOFF)
        assert result.count == 0
        assert result.constant.value == 0

    def test_full_units_give_same_constant(self, curve_432d1):
        full = load_cm_image("432d1_full.cm")
        assert full.full_image
        a = cm_koblitz_ap(curve_432d1, 6, 1, QUICK_CUTOFF)
        b = cm_koblitz_ap(full, 6, 1, QUICK_CUTOFF)
        assert a.leading == b.leading
        assert a.constant.value == pytest.approx(b.constant.value, rel=1e-12)

    def test_classes_sum_to_full_progression(self, curve_432d1):
        whole = cm_koblitz_ap(curve_432d1, 1, 1, QUICK_CUTOFF).constant.value
        parts = sum(cm_koblitz_ap(curve_432d1, 6, k, QUICK_CUTOFF).constant.value for k in (1, 5))
        assert parts == pytest.approx(whole, rel=1e-9)

    def test_modulus_coprime_to_level(self, curve_432d1):
        classes = [cm_koblitz_ap(curve_432d1, 7, k, QUICK_CUTOFF).constant.value for k in range(1, 7)]
        whole = cm_koblitz_ap(curve_432d1, 1, 1, QUICK_CUTOFF).constant.value
        assert sum(classes) == pytest.approx(whole, rel=1e-9)
        assert classes[0] > classes[1]

    def test_vanishing_classes(self, curve_432d1):
        assert supersingular_vanishing_classes(curve_432d1, 6) == [5]
        assert supersingular_vanishing_classes(curve_432d1, 12) == [5, 11]
        assert supersingular_vanishing_classes(curve_432d1, 4) == []

    def test_k_not_coprime(self, curve_432d1):
        with pytest.raises(DomainError):
            cm_koblitz_ap(curve_432d1, 6, 3, QUICK_CUTOFF)


class TestCMImageSpec:
    """Tests for CM image validation and parsing."""

    def test_level_must_carry_ramified_primes(self, eisenstein):
        with pytest.raises(DomainError):
            CMImageSpec(order=eisenstein, level=6, full_image=True)

    def test_non_unit_generator(self, eisenstein):
        with pytest.raises(DomainError):
            CMImageSpec(order=eisenstein, level=12, generators=(OrderResidue(3, 0, 12),))

    def test_parse(self):
        image = parse_cm_image("d_K: -4\nlevel: 4\nfull: yes\n")
        assert image.order.d_K == -4
        assert len(image.array) == 8

    def test_missing_header(self):
        with pytest.raises(FixtureParseError):
            parse_cm_image("level: 12\n2 5\n")
