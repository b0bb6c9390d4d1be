"""
Unit tests for point counting, cyclicity and prime tallies.
"""
import math
import os

import numpy as np
import pandas as pd
import pytest

# Add parent directory to path for imports
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import DATA_DIR
from src.empirics import (
    CurveModel,
    ReductionRecord,
    classify_prime,
    compare,
    curve_box,
    division_polynomial,
    ec_mul,
    group_order,
    has_full_torsion,
    hasse_interval,
    is_cyclic,
    li2_integral,
    li_integral,
    moment_average,
    moment_experiment,
    naive_group_order,
    naive_group_structure,
    records,
    tally,
    twist,
    weil_pairing,
)
from src.errors import DomainError
from src.fixtures import load_curve_list
from src.glmatrix import Kind
from src.modarith import factorize, primes_in_range, sieve_primes, sqrt_mod_prime
from src.serre import build_serre_data, serre_constants_for_n

QUICK_CUTOFF = 100_000

SLOW = os.getenv("ECCONST_SLOW_TESTS") == "1"


@pytest.fixture(scope="module")
def curve_5_m10():
    """Y^2 = X^3 + 5X - 10."""
    return CurveModel(5, -10)


@pytest.fixture(scope="module")
def curve_6_m2():
    """Y^2 = X^3 + 6X - 2."""
    return CurveModel(6, -2)


@pytest.fixture(scope="module")
def boxes():
    """The curve boxes of half-widths 10 and 40."""
    return {box: curve_box(box, box) for box in (10, 40)}


def good_primes(curve: CurveModel, lo: int, hi: int) -> list[int]:
    return [int(p) for p in primes_in_range(lo, hi) if not curve.is_bad(int(p))]


class TestCurveModel:
    """Tests for CurveModel and ReductionRecord."""

    def test_discriminant(self, curve_5_m10):
        assert curve_5_m10.discriminant == -51200
        assert curve_5_m10.is_bad(5)
        assert not curve_5_m10.is_bad(7)

    def test_explicit_bad_primes(self):
        curve = CurveModel(5, -10, frozenset({2, 5, 11}))
        assert curve.is_bad(11)
        assert not curve.is_bad(7)

    def test_singular(self):
        with pytest.raises(DomainError):
            CurveModel(-3, 2)

    def test_record_rejects_hasse_violation(self):
        with pytest.raises(ArithmeticError):
            ReductionRecord(p=101, N=200, cyclic=True, koblitz=False, residue_class=1)

    def test_record_rejects_koblitz_without_cyclic(self):
        with pytest.raises(ArithmeticError):
            ReductionRecord(p=101, N=101, cyclic=False, koblitz=True, residue_class=1)


class TestGroupOrder:
    """Tests for group_order against direct counting."""

    def test_hasse_interval(self):
        assert hasse_interval(101) == (82, 122)

    @pytest.mark.parametrize("curve", [CurveModel(5, -10), CurveModel(6, -2), CurveModel(0, -4)])
    def test_bsgs_matches_naive(self, curve):
        for p in good_primes(curve, 230, 10_000):
            assert group_order(curve, p) == naive_group_order(curve, p), p

    def test_twist_orders_sum(self, curve_5_m10):
        for p in good_primes(curve_5_m10, 5, 600):
            a, b = twist(curve_5_m10, p)
            N = naive_group_order(curve_5_m10, p)
            assert N + naive_group_order(CurveModel(a, b), p) == 2 * p + 2, p

    def test_within_hasse_bound(self, curve_6_m2):
        for p in good_primes(curve_6_m2, 5, 3000):
            lo, hi = hasse_interval(p)
            assert lo <= group_order(curve_6_m2, p) <= hi

    def test_bad_prime(self, curve_5_m10, curve_6_m2):
        with pytest.raises(DomainError):
            group_order(curve_5_m10, 5)
        with pytest.raises(DomainError):
            group_order(curve_5_m10, 2)
        with pytest.raises(DomainError):
            group_order(curve_6_m2, 3)

    def test_order_at_three(self, curve_5_m10):
        # y^2 = x^3 + 2x + 2 has no points over F_3
        assert group_order(curve_5_m10, 3) == 1
        assert naive_group_order(curve_5_m10, 3) == 1

    def test_supersingular_class(self):
        curve = CurveModel(0, -4)
        for p in good_primes(curve, 5, 3000):
            if p % 3 == 2:
                assert group_order(curve, p) == p + 1


def affine_points(curve: CurveModel, p: int) -> list:
    """Every affine point of E(F_p), read off a table of square roots."""
    xs = np.arange(p, dtype=np.int64)
    root = np.full(p, -1, dtype=np.int64)
    root[xs * xs % p] = xs
    rhs = (xs * xs % p * xs + curve.a % p * xs + curve.b % p) % p
    points = []
    for x in np.flatnonzero(root[rhs] >= 0):
        y = int(root[rhs[x]])
        points.append((int(x), y))
        if y:
            points.append((int(x), p - y))
    return points


def cyclic_by_torsion_count(curve: CurveModel, p: int, N: int) -> bool:
    """Non-cyclic exactly when some l with l^2 | N and l | p - 1 has l^2 points killed by l."""
    a = curve.a % p
    points = None
    for l, e in factorize(N).factors:
        if e < 2 or (p - 1) % l:
            continue
        points = affine_points(curve, p) if points is None else points
        if l == 2:
            killed = 1 + sum(1 for _, y in points if y == 0)
        else:
            killed = 1 + sum(1 for P in points if P[1] and ec_mul(l, P, a, p) is None)
        if killed == l * l:
            return False
    return True


def evaluate(poly: list, x: int, p: int) -> int:
    value = 0
    for c in poly:
        value = (value * x + c) % p
    return value


class ScriptedRng:
    """Replays fixed draws before deferring to a seeded generator."""

    def __init__(self, draws):
        self.draws = list(draws)
        self.rng = np.random.default_rng(0)

    def integers(self, *args, **kwargs):
        if self.draws:
            return self.draws.pop(0)
        return self.rng.integers(*args, **kwargs)


# (a, b, p, N) with E[l] rational for some odd l
NON_CYCLIC_CASES = [
    (5, -10, 16069, 16038),
    (5, -10, 27481, 27459),
    (6, -2, 5011, 5103),
    (5, -10, 3571, 3625),
    (6, -2, 1171, 1225),
]

# (a, b, p, N) where an odd l has l^2 | N and l | p - 1 but E[l] is not rational
CYCLIC_CANDIDATES = [
    (5, -10, 151, 150),
    (5, -10, 1481, 1475),
    (5, -10, 2689, 2695),
]


class TestCyclicity:
    """Tests for is_cyclic against the group exponent and torsion counts."""

    @pytest.mark.parametrize("curve", [CurveModel(5, -10), CurveModel(6, -2), CurveModel(0, -4)])
    def test_matches_exponent(self, curve):
        for p in good_primes(curve, 5, 500):
            N, exponent = naive_group_structure(curve, p)
            assert is_cyclic(curve, p, N) == (N == exponent), p

    @pytest.mark.parametrize("curve", [CurveModel(5, -10), CurveModel(6, -2)])
    def test_matches_torsion_count_below_ten_thousand(self, curve):
        for p in good_primes(curve, 5, 10_000):
            N = naive_group_order(curve, p)
            assert is_cyclic(curve, p, N) == cyclic_by_torsion_count(curve, p, N), p

    @pytest.mark.parametrize("a,b,p,N", NON_CYCLIC_CASES)
    def test_rational_odd_torsion_is_not_cyclic(self, a, b, p, N):
        curve = CurveModel(a, b)
        assert group_order(curve, p) == N
        assert not is_cyclic(curve, p, N)
        record = classify_prime(curve, p)
        assert not record.cyclic
        assert not record.koblitz

    def test_full_three_torsion_structure(self, curve_6_m2):
        assert naive_group_structure(curve_6_m2, 5011) == (5103, 1701)

    @pytest.mark.parametrize("a,b,p,N,expected", [
        *[(a, b, p, N, False) for a, b, p, N in NON_CYCLIC_CASES],
        *[(a, b, p, N, True) for a, b, p, N in CYCLIC_CANDIDATES],
    ])
    def test_sampling_route_agrees(self, monkeypatch, a, b, p, N, expected):
        monkeypatch.setattr("src.empirics.DIVISION_POLYNOMIAL_LIMIT", 1)
        curve = CurveModel(a, b)
        for seed in range(20):
            assert is_cyclic(curve, p, N, np.random.default_rng(seed)) == expected, seed

    def test_prime_order_is_cyclic(self, curve_5_m10):
        for p in good_primes(curve_5_m10, 5, 400):
            record = classify_prime(curve_5_m10, p)
            if record.koblitz:
                assert record.cyclic


class TestDivisionPolynomial:
    """Tests for division_polynomial and has_full_torsion."""

    def test_three_division_polynomial(self):
        assert division_polynomial(3, 5, -10 % 101, 101) == [3, 0, 30, 82, 76]

    @pytest.mark.parametrize("l", [5, 7, 11, 13])
    def test_degree_and_leading_coefficient(self, l):
        psi = division_polynomial(l, 5, -10 % 1009, 1009)
        assert len(psi) == (l * l - 1) // 2 + 1
        assert psi[0] == l

    def test_even_index_rejected(self):
        with pytest.raises(DomainError):
            division_polynomial(4, 1, 1, 101)

    def test_roots_are_seven_torsion(self, curve_5_m10):
        p = 197
        a = curve_5_m10.a % p
        psi = division_polynomial(7, a, curve_5_m10.b % p, p)
        torsion = []
        for P in affine_points(curve_5_m10, p):
            if ec_mul(7, P, a, p) is None:
                torsion.append(P)
                assert evaluate(psi, P[0], p) == 0, P
            else:
                assert evaluate(psi, P[0], p) != 0, P
        assert len(torsion) == 48

    @pytest.mark.parametrize("a,b,p,l,full", [
        (5, -10, 103, 3, True),
        (5, -10, 16069, 3, True),
        (5, -10, 27481, 3, True),
        (6, -2, 5011, 3, True),
        (5, -10, 197, 7, True),
        (5, -10, 3571, 5, True),
        (6, -2, 1171, 5, True),
        (5, -10, 163, 3, False),
        (6, -2, 337, 3, False),
        (5, -10, 151, 5, False),
        (5, -10, 1583, 7, False),
        (5, -10, 11617, 11, False),
        (5, -10, 4603, 13, False),
    ])
    def test_has_full_torsion(self, a, b, p, l, full):
        assert has_full_torsion(CurveModel(a, b), p, l) == full


class TestWeilPairing:
    """Tests for weil_pairing on the full 7-torsion of (5, -10) mod 197."""

    @pytest.fixture(scope="class")
    def torsion_basis(self):
        curve = CurveModel(5, -10)
        p = 197
        a, b = curve.a % p, curve.b % p
        torsion = [P for P in affine_points(curve, p) if ec_mul(7, P, a, p) is None]
        P = torsion[0]
        multiples = {ec_mul(i, P, a, p) for i in range(1, 7)}
        Q = next(T for T in torsion if T not in multiples)
        return P, Q, a, b, p

    def test_root_of_unity(self, torsion_basis):
        P, Q, a, b, p = torsion_basis
        zeta = weil_pairing(P, Q, 7, a, b, p)
        assert zeta != 1
        assert pow(zeta, 7, p) == 1

    def test_bilinear_and_alternating(self, torsion_basis):
        P, Q, a, b, p = torsion_basis
        zeta = weil_pairing(P, Q, 7, a, b, p)
        assert weil_pairing(P, ec_mul(3, P, a, p), 7, a, b, p) == 1
        assert weil_pairing(P, ec_mul(2, Q, a, p), 7, a, b, p) == zeta * zeta % p
        assert weil_pairing(Q, P, 7, a, b, p) == pow(zeta, -1, p)

    def test_identity_pairs_trivially(self, torsion_basis):
        P, _, a, b, p = torsion_basis
        assert weil_pairing(P, None, 7, a, b, p) == 1

    def test_degenerate_auxiliary_point_is_redrawn(self, torsion_basis):
        P, Q, a, b, p = torsion_basis
        x, y = ec_mul(2, P, a, p)
        # 2P lies on the lines of the Miller loop for P
        rng = ScriptedRng([x, 0 if y == sqrt_mod_prime(x**3 + a * x + b, p) else 1])
        value = weil_pairing(P, Q, 7, a, b, p, rng)
        assert not rng.draws
        assert value == weil_pairing(P, Q, 7, a, b, p)
        assert value != 1


class TestTally:
    """Tests for tally and records."""

    def test_koblitz_classes_vanish_mod_eight(self, curve_5_m10):
        result = tally(curve_5_m10, 20_000, n=8, threads=1)
        assert list(result.counts.index) == [1, 3, 5, 7]
        assert result.count(5, "koblitz") == 0
        assert result.count(7, "koblitz") == 0
        assert result.count(1, "koblitz") > 0
        assert result.count(3, "koblitz") > 0
        assert 2 in result.skipped and 5 in result.skipped

    def test_curve_6_m2_class_five(self, curve_6_m2):
        result = tally(curve_6_m2, 20_000, n=6, threads=1)
        assert result.count(5, "koblitz") == 0
        assert result.count(1, "koblitz") > 0

    def test_supersingular_class_mod_six(self):
        result = tally(CurveModel(0, -4), 20_000, n=6, threads=1)
        assert result.count(5, "koblitz") == 0
        assert result.count(5, "cyclic") > 0

    def test_counts_are_consistent(self, curve_5_m10):
        result = tally(curve_5_m10, 5000, n=1, threads=1)
        totals = result.totals
        assert totals["koblitz"] <= totals["cyclic"] <= totals["primes"]
        assert totals["primes"] == len(sieve_primes(5000)) - len(result.skipped)

    def test_threads_do_not_change_records(self, curve_5_m10, monkeypatch):
        monkeypatch.setattr("src.empirics.TALLY_BLOCK_SIZE", 100)
        serial = records(curve_5_m10, 5000, n=8, threads=1)
        parallel = records(curve_5_m10, 5000, n=8, threads=2)
        assert serial.equals(parallel)
        assert list(serial.columns) == ["p", "N", "a_p", "cyclic", "koblitz", "class"]

    def test_three_is_counted_when_good(self, curve_5_m10, curve_6_m2):
        result = tally(curve_5_m10, 10, n=8, threads=1)
        assert result.skipped == (2, 5)
        assert result.count(3, "primes") == 1
        assert result.count(3, "cyclic") == 1
        assert result.count(3, "koblitz") == 0
        assert 3 in tally(curve_6_m2, 10, n=6, threads=1).skipped

    def test_matches_recorded_baselines(self):
        baselines = pd.read_csv(DATA_DIR / "baselines.csv")
        tallies = baselines[baselines["kind"] == "tally"]
        assert len(tallies) == 8
        for (a, b, x, n), rows in tallies.groupby(["a", "b", "x", "n"]):
            result = tally(CurveModel(int(a), int(b)), int(x), int(n), threads=2)
            for row in rows.itertuples(index=False):
                for column in ("primes", "cyclic", "koblitz"):
                    assert result.count(int(row.k), column) == int(getattr(row, column)), (a, b, row.k, column)

    @pytest.mark.skipif(not SLOW, reason="set ECCONST_SLOW_TESTS=1 to run")
    def test_counts_to_ten_million(self, curve_5_m10):
        result = tally(curve_5_m10, 10_000_000, n=8)
        assert [result.count(k, "koblitz") for k in (1, 3, 5, 7)] == [11114, 11259, 0, 0]
        assert [result.count(k, "cyclic") for k in (1, 3, 5, 7)] == [108096, 108251, 162234, 162286]

    def test_invalid_modulus(self, curve_5_m10):
        with pytest.raises(DomainError):
            tally(curve_5_m10, 100, n=0)


class TestCompare:
    """Tests for compare and the logarithmic integrals."""

    def test_li_integral(self):
        assert li_integral(2) == pytest.approx(0.0, abs=1e-12)
        assert li_integral(1e6) == pytest.approx(78626.504, rel=1e-6)

    def test_li2_integral_derivative(self):
        x, h = 1e5, 1.0
        slope = (li2_integral(x + h) - li2_integral(x)) / h
        assert slope == pytest.approx(1 / math.log(x) ** 2, rel=1e-4)
        assert li2_integral(2) == pytest.approx(0.0, abs=1e-12)

    def test_zero_constant_gives_unit_ratio(self, curve_5_m10):
        result = tally(curve_5_m10, 5000, n=8, threads=1)
        serre = build_serre_data(5, -10)
        constants = {k: c.constant for k, c in serre_constants_for_n(serre, 8, Kind.KOBLITZ, QUICK_CUTOFF).items()}
        df = compare(result, constants, Kind.KOBLITZ)
        assert list(df["k"]) == [1, 3, 5, 7]
        row = df.set_index("k").loc[5]
        assert row["predicted"] == 0
        assert row["ratio"] == 1.0
        assert df.set_index("k").loc[1, "ratio_integral"] > 0

    def test_missing_class(self, curve_5_m10):
        result = tally(curve_5_m10, 1000, n=8, threads=1)
        serre = build_serre_data(5, -10)
        constants = {1: serre_constants_for_n(serre, 8, Kind.CYCLIC, QUICK_CUTOFF)[1].constant}
        with pytest.raises(DomainError):
            compare(result, constants, Kind.CYCLIC)

    @pytest.mark.skipif(not SLOW, reason="set ECCONST_SLOW_TESTS=1 to run")
    def test_koblitz_counts_near_prediction(self, curve_5_m10):
        result = tally(curve_5_m10, 1_000_000, n=8)
        serre = build_serre_data(5, -10)
        constants = {k: c.constant for k, c in serre_constants_for_n(serre, 8, Kind.KOBLITZ, QUICK_CUTOFF).items()}
        df = compare(result, constants, Kind.KOBLITZ).set_index("k")
        for k in (1, 3):
            assert df.loc[k, "ratio_integral"] == pytest.approx(1.0, abs=0.25)


class TestMoments:
    """Tests for the average over a box of curves."""

    def test_box_size(self):
        assert len(curve_box(10, 10)) == 438
        assert curve_box(0, 0).empty

    def test_fixture_matches_box(self):
        curves = load_curve_list(Path(__file__).parent.parent / "data" / "moment_curves_10.csv")
        assert len(curves) == 438

    def test_modulus_two_matches_all_primes(self):
        curves = curve_box(5, 5)
        whole = moment_average(curves, 1, 1, Kind.KOBLITZ, QUICK_CUTOFF)
        odd = moment_average(curves, 2, 1, Kind.KOBLITZ, QUICK_CUTOFF)
        assert whole.mean_correction == odd.mean_correction
        assert whole.average == pytest.approx(odd.average, rel=1e-12)

    def test_average_is_reference_times_correction(self):
        result = moment_experiment(4, 4, 8, 1, Kind.CYCLIC, QUICK_CUTOFF)
        assert result.curves == len(curve_box(4, 4))
        assert result.average == pytest.approx(result.reference.value * float(result.mean_correction), rel=1e-12)
        assert result.deviation == pytest.approx(abs(result.average - result.reference.value))

    def test_empty(self):
        with pytest.raises(DomainError):
            moment_average(curve_box(0, 0), 1, 1, Kind.CYCLIC, QUICK_CUTOFF)

    @pytest.mark.parametrize("kind", [Kind.CYCLIC, Kind.KOBLITZ])
    @pytest.mark.parametrize("n,k", [(1, 1), (3, 1), (3, 2)])
    def test_deviation_shrinks_with_the_box(self, boxes, kind, n, k):
        baselines = pd.read_csv(DATA_DIR / "baselines.csv")
        rows = baselines[(baselines["kind"] == f"moment_{kind.value}") & (baselines["n"] == n) & (baselines["k"] == k)]
        recorded = {int(row.box): row for row in rows.itertuples(index=False)}

        small = moment_average(boxes[10], n, k, kind, QUICK_CUTOFF)
        large = moment_average(boxes[40], n, k, kind, QUICK_CUTOFF)
        assert large.deviation < small.deviation
        for box, result in ((10, small), (40, large)):
            assert result.curves == int(recorded[box].curves)
            assert result.deviation == pytest.approx(recorded[box].deviation, rel=1e-3)
