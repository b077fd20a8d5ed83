from fractions import Fraction

import gmpy2
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxmaj.numerics import (
    CertInterval,
    NumericsError,
    TriBool,
    adaptive,
    certify_leq,
    iv_arith,
    iv_complement,
    iv_e,
    iv_exp,
    iv_expm1,
    iv_from_ratio,
    iv_from_rational,
    iv_ln2,
    iv_log,
    iv_log1p,
    iv_pow,
    iv_pow_rational,
    iv_sqrt,
    to_fraction,
)

rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)
unit = st.fractions(min_value=Fraction(1, 10**6), max_value=1, max_denominator=10**6)


def _contains_mp(iv: CertInterval, value: mpmath.mpf) -> bool:
    lin = iv.linear()
    return _mp(lin.lo) <= value <= _mp(lin.hi)


def _mp(x) -> mpmath.mpf:
    f = to_fraction(x)
    return mpmath.mpf(f.numerator) / f.denominator


class TestFromRatio:
    def test_dyadic_is_exact(self):
        x = iv_from_ratio(1, 2, 64)
        assert x.lo == x.hi == gmpy2.mpfr("0.5")

    def test_third_width(self):
        x = iv_from_ratio(1, 3, 64)
        assert x.contains(Fraction(1, 3))
        assert to_fraction(x.width()) <= Fraction(1, 2**62)

    def test_negative(self):
        assert iv_from_ratio(-1, 3, 64).contains(Fraction(-1, 3))

    def test_zero_denominator(self):
        with pytest.raises(NumericsError):
            iv_from_ratio(1, 0)

    @given(rationals, st.integers(min_value=24, max_value=300))
    def test_width_contract(self, q, prec):
        x = iv_from_rational(q, prec)
        assert x.contains(q)
        if q:
            assert to_fraction(x.width()) <= Fraction(2) ** (1 - prec) * abs(q)


class TestArith:
    def test_examples(self):
        one = iv_from_ratio(1, 1)
        d = iv_arith(one, one, "sub")
        assert d.lo == d.hi == 0
        assert iv_arith(iv_from_ratio(1, 2), iv_from_ratio(1, 3), "mul").contains(Fraction(1, 6))
        box = CertInterval(gmpy2.mpfr(0), gmpy2.mpfr(1))
        s = iv_arith(box, box, "sub")
        assert (s.lo, s.hi) == (-1, 1)

    def test_div_by_zero_interval(self):
        with pytest.raises(NumericsError):
            iv_arith(iv_from_ratio(1, 1), CertInterval(gmpy2.mpfr(-1), gmpy2.mpfr(1)), "div")

    @settings(max_examples=300)
    @given(rationals, rationals, st.sampled_from(["add", "sub", "mul", "div"]), st.integers(min_value=20, max_value=200))
    def test_containment_against_exact(self, a, b, op, prec):
        if op == "div" and b == 0:
            return
        exact = {"add": a + b, "sub": a - b, "mul": a * b, "div": a / b if b else None}[op]
        assert iv_arith(iv_from_rational(a, prec), iv_from_rational(b, prec), op).contains(exact)

    @given(rationals, rationals)
    def test_refinement_narrows(self, a, b):
        lo = iv_from_rational(a, 40) * iv_from_rational(b, 40)
        hi = iv_from_rational(a, 160) * iv_from_rational(b, 160)
        assert hi.width() <= lo.width()
        assert hi.lo >= lo.lo and hi.hi <= lo.hi


class TestPow:
    def test_half_cubed(self):
        x = iv_pow(iv_from_ratio(1, 2), 3)
        assert x.lo == x.hi == gmpy2.mpfr("0.125")

    def test_three_quarters_squared(self):
        assert iv_pow(iv_from_ratio(3, 4), 2).contains(Fraction(9, 16))

    def test_tiny_result_goes_log_domain(self):
        # (1 - 2^-10)^(2^20) is about e^-1024, far below double range
        x = iv_pow(iv_from_ratio(1023, 1024), 2**20)
        with mpmath.workprec(400):
            oracle = mpmath.mpf(2**20) * mpmath.log(mpmath.mpf(1023) / 1024)
            assert _mp(x.log().lo) <= oracle <= _mp(x.log().hi)
        assert x.linear().hi > 0
        assert float(oracle) == pytest.approx(-1024.5, abs=0.1)

    def test_astronomical_exponent_no_silent_underflow(self):
        k = 1 << 200
        x = iv_pow(iv_from_ratio(1, 2), k)
        assert x.log_domain
        assert x.lo > -gmpy2.inf(1)
        assert x.log().contains(Fraction(0)) is False

    def test_negative_base_rejected(self):
        with pytest.raises(NumericsError):
            iv_pow(iv_from_ratio(-1, 2), 2)

    @settings(max_examples=100)
    @given(unit, st.integers(min_value=1, max_value=60))
    def test_matches_exact_power(self, q, k):
        assert iv_pow(iv_from_rational(q, 96), k).contains(q**k)

    @given(unit, st.integers(min_value=1, max_value=40))
    def test_rational_integer_path_agrees(self, q, k):
        a = iv_pow(iv_from_rational(q), k)
        b = iv_pow_rational(iv_from_rational(q), Fraction(k))
        assert a == b


class TestElementary:
    @settings(max_examples=100)
    @given(st.fractions(min_value=-50, max_value=50, max_denominator=1000))
    def test_exp_expm1(self, q):
        with mpmath.workprec(300):
            assert _contains_mp(iv_exp(iv_from_rational(q)), mpmath.exp(mpmath.mpf(q.numerator) / q.denominator))
            assert _contains_mp(iv_expm1(iv_from_rational(q)), mpmath.expm1(mpmath.mpf(q.numerator) / q.denominator))

    @settings(max_examples=100)
    @given(unit)
    def test_log_family(self, q):
        x = iv_from_rational(q)
        with mpmath.workprec(300):
            v = mpmath.mpf(q.numerator) / q.denominator
            assert _contains_mp(iv_log(x), mpmath.log(v))
            assert _contains_mp(iv_log1p(x), mpmath.log1p(v))
            assert _contains_mp(iv_sqrt(x), mpmath.sqrt(v))
        assert iv_complement(x).contains(1 - q)

    def test_constants(self):
        with mpmath.workprec(400):
            assert _contains_mp(iv_ln2(256), mpmath.ln2)
            assert _contains_mp(iv_e(256), mpmath.e)


class TestCertify:
    def test_verdicts(self):
        a, b = iv_from_ratio(1, 3), iv_from_ratio(1, 2)
        assert certify_leq(a, b) is TriBool.CERT_TRUE
        assert certify_leq(b, a) is TriBool.CERT_FALSE
        wide = CertInterval(gmpy2.mpfr(0), gmpy2.mpfr(1))
        assert certify_leq(wide, b) is TriBool.UNKNOWN

    def test_log_vs_linear(self):
        tiny = iv_pow(iv_from_ratio(1, 2), 1 << 100)
        assert certify_leq(tiny, iv_from_ratio(1, 10**100)) is TriBool.CERT_TRUE
        assert certify_leq(iv_from_ratio(1, 10**100), tiny) is TriBool.CERT_FALSE

    def test_adaptive_raises_precision(self):
        # 1/3 vs 1/3 + 2^-200 separates only past 200 bits
        target = Fraction(1, 3) + Fraction(1, 2**200)

        def build(prec):
            return certify_leq(iv_from_ratio(1, 3, prec), iv_from_rational(target, prec))

        verdict, prec = adaptive(build, lambda v: v, 64, 4096)
        assert verdict is TriBool.CERT_TRUE
        assert prec > 200

    def test_adaptive_gives_up_at_cap(self):
        verdict, prec = adaptive(lambda p: certify_leq(iv_from_ratio(1, 3, p), iv_from_ratio(1, 3, p)), lambda v: v, 64, 512)
        assert verdict is TriBool.UNKNOWN and prec == 512

    def test_tribool_algebra(self):
        t, f, u = TriBool.CERT_TRUE, TriBool.CERT_FALSE, TriBool.UNKNOWN
        assert (t & f) is f and (t & u) is u and (t & t) is t
        assert ~t is f and ~u is u
        assert str(t) == "CertTrue"
