import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxmaj.amplification import (
    FanInProfile,
    ProfileError,
    amplify,
    amplify_exact,
    boundary_A,
    gate_count,
    hypothesis_bound,
    lemma1_check,
    lemma3_check,
    lemma4_check,
    lemma_sweep,
    size_bound,
    step_fanin,
    threshold_points,
)
from approxmaj.numerics import TriBool, certify_leq, iv_from_ratio, iv_from_rational, iv_sqrt, to_fraction

T, F, U = TriBool.CERT_TRUE, TriBool.CERT_FALSE, TriBool.UNKNOWN

small_profiles = st.lists(st.integers(min_value=2, max_value=5), min_size=0, max_size=4).map(lambda w: FanInProfile(tuple(w)))
probabilities = st.fractions(min_value=0, max_value=1, max_denominator=1000)


def _alpha(prec=128):
    return (iv_sqrt(iv_from_ratio(5, 1, prec)) - 1) / 2


def _mp(x):
    f = to_fraction(x)
    return mpmath.mpf(f.numerator) / f.denominator


class TestProfile:
    def test_parse_and_index(self):
        p = FanInProfile.parse("5,111,23")
        assert p.fanins == (5, 111, 23)
        assert p.depth == 3 and p[1] == 5 and p[3] == 23
        assert str(p) == "5,111,23"
        assert p.leaves() == 5 * 111 * 23

    def test_empty(self):
        p = FanInProfile.parse("")
        assert p.depth == 0 and p.leaves() == 1

    def test_rejects_small_fanin(self):
        with pytest.raises(ProfileError):
            FanInProfile((2, 1))
        with pytest.raises(ProfileError):
            FanInProfile.parse("2,x")

    def test_gate_types(self):
        assert FanInProfile.gate(1) == "AND" and FanInProfile.gate(2) == "OR"


class TestRecursion:
    def test_half_through_two_two(self):
        t = amplify(FanInProfile((2, 2)), Fraction(1, 2))
        assert t.rows[1].a1.contains(Fraction(1, 4))
        assert t.rows[2].a0.contains(Fraction(9, 16))
        assert t.rows[2].a1.contains(Fraction(7, 16))
        for r in t.rows:
            assert r.a1.width() < 1e-37

    def test_degenerate_profile_is_identity(self):
        t = amplify(FanInProfile(()), Fraction(3, 7))
        assert t.a1.contains(Fraction(3, 7)) and t.a0.contains(Fraction(4, 7))

    @settings(max_examples=150)
    @given(small_profiles, probabilities)
    def test_matches_exact_recursion(self, profile, p):
        table = amplify(profile, p)
        for row, (a1, a0) in zip(table.rows, amplify_exact(profile, p)):
            assert row.a1.contains(a1) and row.a0.contains(a0)

    def test_complement_law_on_grid(self):
        for profile in (FanInProfile((2, 2)), FanInProfile((3, 5, 2)), FanInProfile((5, 111, 23))):
            for i in range(101):
                for row in amplify(profile, Fraction(i, 100)).rows:
                    total = row.a1.linear() + row.a0.linear()
                    assert total.contains(1)

    def test_monotone_in_p(self):
        profile = FanInProfile((3, 4, 2))
        tables = [amplify(profile, Fraction(i, 100)).a1 for i in range(101)]
        for lo, hi in zip(tables, tables[1:]):
            # separated enclosures must be ordered with p
            assert certify_leq(lo, hi) is not F

    def test_valiant_fixed_point(self):
        alpha = _alpha(128)
        a = amplify(FanInProfile((2, 2)), alpha, 128).a1
        with mpmath.workprec(300):
            exact = (mpmath.sqrt(5) - 1) / 2
            assert _mp(a.linear().lo) <= exact <= _mp(a.linear().hi)
            assert abs(_mp(a.midpoint()) - exact) <= mpmath.mpf("1e-12")
        assert a.width() <= 1e-30

    def test_huge_fanin_stays_nonzero(self):
        # 2^-(10^7) is below even the MPFR linear floor
        t = amplify(FanInProfile((10**7,)), Fraction(1, 2))
        assert t.a1.log_domain
        with mpmath.workprec(200):
            exact = -(10**7) * mpmath.ln2
            assert _mp(t.a1.lo) <= exact <= _mp(t.a1.hi)


class TestSizes:
    def brute_gates(self, profile):
        return sum(math.prod(profile.fanins[k:]) for k in range(1, profile.depth + 1))

    @given(st.lists(st.integers(2, 9), min_size=1, max_size=5))
    def test_gate_count_oracle(self, w):
        profile = FanInProfile(tuple(w))
        g = gate_count(profile)
        assert g.exact == self.brute_gates(profile)
        assert g.bound == size_bound(profile) == 2 * math.prod(w[1:])
        assert g.exact <= g.bound

    def test_known(self):
        assert gate_count(FanInProfile((2, 3, 4))) == (17, 24, 24)

    def test_depth_zero(self):
        with pytest.raises(ProfileError):
            gate_count(FanInProfile(()))


class TestLemma1:
    def test_threshold_points(self):
        lo, hi = threshold_points(16, Fraction(2, 5))
        assert lo.contains(Fraction(2, 5)) and hi.contains(Fraction(3, 5))

    def test_recipe_profile_certifies(self):
        r = lemma1_check(FanInProfile((5, 111, 23)), 16, Fraction(2, 5))
        assert (r.cond1, r.cond2) == (T, T)
        assert r.certified and r.size_bound == 2 * 111 * 23

    def test_weak_profile_fails(self):
        r = lemma1_check(FanInProfile((2, 2)), 100, Fraction(1, 100))
        assert r.verdict is F
        assert r.a1_low.linear().lo > Fraction(4, 10)

    def test_weak_approximation_is_easy(self):
        r = lemma1_check(FanInProfile((4, 20)), 4, Fraction(49, 100))
        assert r.certified

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            lemma1_check(FanInProfile((2,)), 4, Fraction(0))


class TestStepLemmas:
    d, level, c, eps = 4, 2, Fraction(1), Fraction(1, 4)

    def test_step_fanin(self):
        w = step_fanin(5)
        with mpmath.workprec(200):
            assert _mp(w.lo) <= mpmath.ln2 * 160 <= _mp(w.hi)

    def test_boundary_on_safe_side(self):
        for lemma in (3, 4):
            A = boundary_A(lemma, 16, self.c, self.level, self.d, 4096)
            b = hypothesis_bound(lemma, 16, self.c, self.level, self.d, 4096)
            assert (certify_leq(b, A) if lemma == 3 else certify_leq(A, b)) is T

    def test_large_n_certifies(self):
        for n in (4096, 2**16):
            (row,) = lemma_sweep(self.d, self.level, self.c, self.eps, [n])
            assert tuple(row.lemma3) == (T, T) and tuple(row.lemma4) == (T, T)
            assert row.lemma3.branch == "interior"

    def test_hypothesis_violated(self):
        n, w1 = 4096, 16
        below = iv_from_rational(Fraction(1, 2**w1))
        check = lemma3_check(w1, below, self.c, self.level, self.d, n, self.eps)
        assert check.hypothesis is F and not check.applicable
        above = iv_from_rational(Fraction(2, 2**w1))
        assert lemma4_check(w1, above, self.c, self.level, self.d, n, self.eps).hypothesis is F

    def test_top_branch(self):
        (row,) = lemma_sweep(self.d, self.d - 1, self.c, self.eps, [4096])
        assert row.lemma3.branch == "top" and row.lemma4.branch == "top"
        assert row.certified

    def test_level_index_range(self):
        with pytest.raises(ValueError):
            lemma3_check(5, iv_from_ratio(1, 32), 1, 1, 4, 16, Fraction(1, 4))
        with pytest.raises(ValueError):
            lemma4_check(5, iv_from_ratio(1, 32), 1, 4, 4, 16, Fraction(1, 4))

    def test_small_n_does_not_certify(self):
        (row,) = lemma_sweep(self.d, self.level, self.c, self.eps, [2])
        assert not row.certified
