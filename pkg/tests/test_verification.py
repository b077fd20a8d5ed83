import itertools
import math
from fractions import Fraction

import pytest

from approxmaj.amplification import FanInProfile, lemma1_check
from approxmaj.circuit import Circuit, sample_circuit
from approxmaj.construction import explore
from approxmaj.numerics import TriBool, to_fraction
from approxmaj.verification import (
    exact_disagreement,
    expected_error,
    expected_error_exact,
    middle_band,
    monte_carlo_disagreement,
    stirling_check,
    weight_profile_csv,
    weight_slice_consistency,
)


def P(text: str) -> FanInProfile:
    return FanInProfile.parse(text)


def brute_disagreement(c: Circuit) -> Fraction:
    from approxmaj.circuit import evaluate, majority

    n = c.n
    wrong = 0
    for b in range(1 << n):
        x = [(b >> i) & 1 for i in range(n)]
        wrong += evaluate(c, x) != majority(x)
    return Fraction(wrong, 1 << n)


def family_average(profile: FanInProfile, n: int) -> Fraction:
    total = Fraction(0)
    count = 0
    for leaves in itertools.product(range(n), repeat=profile.leaves()):
        total += exact_disagreement(Circuit(n, profile, list(leaves)))
        count += 1
    return total / count


class TestExact:
    def test_examples(self):
        assert exact_disagreement(Circuit(3, P(""), [0])) == Fraction(1, 4)
        assert exact_disagreement(Circuit(2, P("2"), [0, 1])) == Fraction(1, 2)
        assert exact_disagreement(Circuit(2, P("2,2"), [0, 0, 1, 1])) == 0  # OR(x0, x1) is Maj_2

    @pytest.mark.parametrize("profile,n,seed", [("2,2", 5, 1), ("3,2", 9, 2), ("2,3,2", 11, 3), ("5", 7, 4)])
    def test_against_scalar(self, profile, n, seed):
        c = sample_circuit(P(profile), n, seed)
        value = exact_disagreement(c)
        assert value == brute_disagreement(c)
        assert value.denominator <= 1 << n and 0 <= value <= 1


class TestExpected:
    def test_single_leaf(self):
        assert expected_error(P(""), 3).contains(Fraction(1, 4))
        assert expected_error(P(""), 1).contains(0)

    def test_single_leaf_closed_form(self):
        for n in range(1, 11):
            num = sum(math.comb(n, m) * m for m in range(n + 1) if 2 * m < n)
            num += sum(math.comb(n, m) * (n - m) for m in range(n + 1) if 2 * m >= n)
            want = Fraction(num, n * 2**n)
            assert expected_error_exact(P(""), n) == want
            assert expected_error(P(""), n).contains(want)

    @pytest.mark.parametrize(
        "profile,n",
        [("2", 2), ("2,2", 2), ("3", 2), ("3", 3), ("2,3", 3), ("2,2", 3), ("3,2", 3), ("2", 5), ("2,2", 4), ("4", 4)],
    )
    def test_family_average_oracle(self, profile, n):
        avg = family_average(P(profile), n)
        assert expected_error_exact(P(profile), n) == avg
        assert expected_error(P(profile), n).contains(avg)

    def test_two_leaf_and_value(self):
        assert expected_error_exact(P("2"), 2) == Fraction(3, 8)

    def test_two_by_two_value(self):
        # weight 1 is a tie for n=2, so it errs with A0 = 1 - 7/16 = 9/16
        assert expected_error_exact(P("2,2"), 2) == Fraction(9, 32)

    def test_csv(self):
        text = weight_profile_csv(P("2,2"), 4)
        lines = text.strip().splitlines()
        assert lines[0] == "m,count,maj,err_lo,err_hi,err_width"
        assert len(lines) == 6
        assert lines[3].startswith("2,6,1,")

    def test_lemma1_chain(self):
        eps = Fraction(2, 5)
        for n in (16, 25, 36):
            result = explore(n, 3, eps)
            assert lemma1_check(result.profile, n, eps).certified
            band = middle_band(n, eps)
            err = expected_error(result.profile, n)
            limit = eps + Fraction(band.count, 2**n)
            assert to_fraction(err.linear().hi) <= limit <= 3 * eps


class TestMiddleBand:
    def test_one_weight(self):
        band = middle_band(16, Fraction(1, 4))
        assert band.weights == (8,) and band.count == 12870
        assert band.paper_bound.contains(25740)
        assert band.bound_holds is TriBool.CERT_TRUE

    def test_counter_case(self):
        band = middle_band(4, Fraction(1, 10))
        assert band.weights == (2,) and band.count == 6
        assert band.paper_bound.contains(Fraction(12, 5))
        assert band.bound_holds is TriBool.CERT_FALSE

    def test_empty_band(self):
        # eps sqrt(n) = 0.3 and n/2 = 4.5 is 0.5 from every integer weight
        band = middle_band(9, Fraction(1, 10))
        assert band.count == 0 and band.bound_holds is TriBool.CERT_TRUE

    def test_band_is_strict(self):
        # eps sqrt(n) = 1 exactly, so weights 7 and 9 sit on the edge and are excluded
        assert middle_band(16, Fraction(1, 4)).weights == (8,)


class TestStirling:
    def test_range(self):
        assert all(stirling_check(n) is TriBool.CERT_TRUE for n in range(1, 513))

    def test_small(self):
        assert stirling_check(1) is TriBool.CERT_TRUE and stirling_check(2) is TriBool.CERT_TRUE


class TestMonteCarlo:
    def test_single_leaf(self):
        c = Circuit(3, P(""), [0])
        r = monte_carlo_disagreement(c, 100_000, 1)
        sigma = math.sqrt(0.25 * 0.75 / 100_000)
        assert abs(r.disagreement - 0.25) <= 3 * sigma
        assert r.half_width == pytest.approx(1.959964 * math.sqrt(r.disagreement * (1 - r.disagreement) / 100_000), rel=1e-5)

    def test_constant_zero(self):
        c = Circuit(1, P("3"), [0, 0, 0])
        assert monte_carlo_disagreement(c, 5000, 2).disagreement == 0

    def test_deterministic(self):
        c = sample_circuit(P("3,4"), 12, 3)
        a = monte_carlo_disagreement(c, 20_000, 8)
        assert a == monte_carlo_disagreement(c, 20_000, 8)
        assert a == monte_carlo_disagreement(c, 20_000, 8, block_words=7, workers=4)

    def test_sample_count_not_multiple_of_64(self):
        c = sample_circuit(P("2,2"), 6, 3)
        r = monte_carlo_disagreement(c, 1001, 4)
        assert r.extra["errors"] <= 1001 and r.samples == 1001

    def test_calibration(self):
        # 95% intervals should cover the exact value in at least 95% of 200 seeds
        c = sample_circuit(P("2,3"), 10, 17)
        exact = float(exact_disagreement(c))
        hits = 0
        for seed in range(200):
            r = monte_carlo_disagreement(c, 4000, seed)
            lo, hi = r.extra["interval"]
            hits += lo <= exact <= hi
        assert hits / 200 >= 0.95

    def test_bad_args(self):
        c = Circuit(1, P(""), [0])
        with pytest.raises(ValueError):
            monte_carlo_disagreement(c, 0, 1)
        with pytest.raises(ValueError):
            monte_carlo_disagreement(c, 10, 1, confidence=1.5)


class TestSlice:
    def test_edges(self):
        assert weight_slice_consistency(P("2,2"), 4, 0, 500, 1).empirical == 0
        assert weight_slice_consistency(P("2,2"), 4, 4, 500, 1).empirical == 1

    def test_two_by_two(self):
        r = weight_slice_consistency(P("2,2"), 4, 2, 10_000, 5)
        assert r.predicted.contains(Fraction(7, 16))
        assert abs(r.empirical - 0.4375) <= 0.015

    def test_deterministic(self):
        a = weight_slice_consistency(P("3,2"), 7, 3, 2000, 9)
        assert a.ones == weight_slice_consistency(P("3,2"), 7, 3, 2000, 9).ones

    def test_bad_weight(self):
        with pytest.raises(ValueError):
            weight_slice_consistency(P("2"), 4, 5, 10, 1)
