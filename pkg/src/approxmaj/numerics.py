"""Certified real arithmetic for probabilities.

Every quantity is carried as an outward-rounded enclosure ``[lo, hi]`` built on
MPFR (through gmpy2) with directed rounding.  Values too small for the linear
range are kept in *log domain*, where ``lo``/``hi`` bound ``ln(x)`` instead of
``x``; this keeps ``(1/2)^(2^w)``-scale numbers strictly positive instead of
letting them flush to zero.

Exponents are Python integers and are never converted to floats.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, TypeVar, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

DEFAULT_PRECISION = 128
PRECISION_CAP = 4096

# Values below 2^-(10^6) switch to log domain.
LINEAR_FLOOR_LOG2 = 10**6

_EMIN = gmpy2.get_emin_min()
_EMAX = gmpy2.get_emax_max()

Rational = Union[int, Fraction]
T = TypeVar("T")


class TriBool(enum.Enum):
    """Outcome of a certified comparison."""

    CERT_TRUE = "CertTrue"
    CERT_FALSE = "CertFalse"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value

    @property
    def decisive(self) -> bool:
        return self is not TriBool.UNKNOWN

    @classmethod
    def of(cls, flag: bool) -> "TriBool":
        return cls.CERT_TRUE if flag else cls.CERT_FALSE

    def __and__(self, other: "TriBool") -> "TriBool":
        if TriBool.CERT_FALSE in (self, other):
            return TriBool.CERT_FALSE
        if TriBool.UNKNOWN in (self, other):
            return TriBool.UNKNOWN
        return TriBool.CERT_TRUE

    def __invert__(self) -> "TriBool":
        if self is TriBool.CERT_TRUE:
            return TriBool.CERT_FALSE
        if self is TriBool.CERT_FALSE:
            return TriBool.CERT_TRUE
        return self


class NumericsError(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def _context(prec: int, rnd: int) -> gmpy2.context:
    return gmpy2.context(
        precision=prec,
        round=rnd,
        emin=_EMIN,
        emax=_EMAX,
        subnormalize=False,
        trap_underflow=False,
        trap_overflow=False,
        trap_invalid=False,
        trap_divzero=False,
    )


def _down(prec: int, fn: Callable[[], T]) -> T:
    with _context(prec, gmpy2.RoundDown):
        return fn()


def _up(prec: int, fn: Callable[[], T]) -> T:
    with _context(prec, gmpy2.RoundUp):
        return fn()


def _log_floor(prec: int) -> mpfr:
    # switch threshold only; its rounding does not affect soundness
    return _down(prec, lambda: -gmpy2.const_log2() * LINEAR_FLOOR_LOG2)


def _as_mpq(value: Rational) -> mpq:
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


@dataclass(frozen=True)
class CertInterval:
    """Enclosure ``lo <= x <= hi``; with ``log_domain`` set the bounds enclose ``ln x``."""

    lo: mpfr
    hi: mpfr
    precision_bits: int = DEFAULT_PRECISION
    log_domain: bool = False

    def __post_init__(self):
        if gmpy2.is_nan(self.lo) or gmpy2.is_nan(self.hi):
            raise NumericsError("NaN bound in enclosure")
        if self.lo > self.hi:
            raise NumericsError(f"inverted enclosure [{self.lo}, {self.hi}]")

    # -- views -------------------------------------------------------------

    def linear(self) -> "CertInterval":
        """Explicit conversion to linear domain; a lower bound below range becomes 0."""
        if not self.log_domain:
            return self
        p = self.precision_bits
        return CertInterval(_down(p, lambda: gmpy2.exp(self.lo)), _up(p, lambda: gmpy2.exp(self.hi)), p)

    def log(self) -> "CertInterval":
        """Enclosure of ``ln x`` as an ordinary (linear) interval."""
        if self.log_domain:
            return CertInterval(self.lo, self.hi, self.precision_bits)
        if self.lo < 0:
            raise NumericsError("log of an enclosure reaching below zero")
        p = self.precision_bits
        return CertInterval(_down(p, lambda: gmpy2.log(self.lo)), _up(p, lambda: gmpy2.log(self.hi)), p)

    def width(self) -> mpfr:
        lin = self.linear()
        return _up(self.precision_bits, lambda: lin.hi - lin.lo)

    def midpoint(self) -> mpfr:
        lin = self.linear()
        with _context(self.precision_bits, gmpy2.RoundToNearest):
            return (lin.lo + lin.hi) / 2

    def __float__(self) -> float:
        return float(self.midpoint())

    def contains(self, value: Rational) -> bool:
        q = _as_mpq(value)
        if not self.log_domain:
            return self.lo <= q <= self.hi
        if q <= 0:
            return False
        ln = iv_log(iv_from_ratio(q.numerator, q.denominator, self.precision_bits))
        return not (ln.hi < self.lo or ln.lo > self.hi)

    def intersect(self, other: "CertInterval") -> "CertInterval":
        p = max(self.precision_bits, other.precision_bits)
        if self.log_domain != other.log_domain:
            a, b = self.log(), other.log()
            lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
            if lo > hi:
                raise NumericsError("disjoint enclosures of the same quantity")
            return _from_log(CertInterval(lo, hi, p))
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise NumericsError("disjoint enclosures of the same quantity")
        return CertInterval(lo, hi, p, self.log_domain)

    def with_precision(self, precision_bits: int) -> "CertInterval":
        return CertInterval(self.lo, self.hi, precision_bits, self.log_domain)

    def to_json(self) -> dict:
        out = {
            "lo": _fmt(self.lo),
            "hi": _fmt(self.hi),
            "width": _fmt(self.width()) if not self.log_domain else None,
            "precision_bits": self.precision_bits,
        }
        if self.log_domain:
            out["domain"] = "log"
        return out

    def __repr__(self) -> str:
        tag = "ln " if self.log_domain else ""
        return f"CertInterval({tag}[{_fmt(self.lo, 20)}, {_fmt(self.hi, 20)}])"

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return iv_arith(self, _coerce(other, self.precision_bits), "add")

    def __radd__(self, other):
        return iv_arith(_coerce(other, self.precision_bits), self, "add")

    def __sub__(self, other):
        return iv_arith(self, _coerce(other, self.precision_bits), "sub")

    def __rsub__(self, other):
        return iv_arith(_coerce(other, self.precision_bits), self, "sub")

    def __mul__(self, other):
        return iv_arith(self, _coerce(other, self.precision_bits), "mul")

    def __rmul__(self, other):
        return iv_arith(_coerce(other, self.precision_bits), self, "mul")

    def __truediv__(self, other):
        return iv_arith(self, _coerce(other, self.precision_bits), "div")

    def __rtruediv__(self, other):
        return iv_arith(_coerce(other, self.precision_bits), self, "div")

    def __neg__(self):
        lin = self.linear()
        p = self.precision_bits
        return CertInterval(_down(p, lambda: -lin.hi), _up(p, lambda: -lin.lo), p)


def _fmt(x: mpfr, digits: int | None = None) -> str:
    if gmpy2.is_infinite(x):
        return "-inf" if x < 0 else "inf"
    if digits is None:
        return x.__format__(".25g")
    return x.__format__(f".{digits}g")


def _coerce(value, prec: int) -> CertInterval:
    if isinstance(value, CertInterval):
        return value
    if isinstance(value, (int, Fraction)):
        q = _as_mpq(value)
        return iv_from_ratio(int(q.numerator), int(q.denominator), prec)
    raise TypeError(f"cannot combine CertInterval with {type(value).__name__}")


# -- construction --------------------------------------------------------


def iv_point(value: mpfr, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    return CertInterval(value, value, precision_bits)


def iv_from_ratio(numerator: int, denominator: int, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """Enclosure of ``numerator / denominator``; exact (width 0) for dyadic values."""
    if denominator == 0:
        raise NumericsError("zero denominator")
    if denominator < 0:
        numerator, denominator = -numerator, -denominator
    q = mpq(numerator, denominator)
    p = precision_bits
    return CertInterval(_down(p, lambda: mpfr(q)), _up(p, lambda: mpfr(q)), p)


def iv_from_rational(value: Rational, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    q = _as_mpq(value)
    return iv_from_ratio(int(q.numerator), int(q.denominator), precision_bits)


def iv_ln2(precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    p = precision_bits
    return CertInterval(_down(p, gmpy2.const_log2), _up(p, gmpy2.const_log2), p)


def iv_e(precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    p = precision_bits
    return CertInterval(_down(p, lambda: gmpy2.exp(1)), _up(p, lambda: gmpy2.exp(1)), p)


# -- arithmetic ----------------------------------------------------------


def iv_arith(a: CertInterval, b: CertInterval, op: str) -> CertInterval:
    """Outward-rounded ``a op b`` for ``op`` in add/sub/mul/div."""
    p = max(a.precision_bits, b.precision_bits)
    if op == "mul" and a.log_domain and b.log_domain:
        return CertInterval(_down(p, lambda: a.lo + b.lo), _up(p, lambda: a.hi + b.hi), p, True)
    if op == "mul" and (a.log_domain or b.log_domain):
        other = b if a.log_domain else a
        if other.lo > 0:
            la, lb = a.log(), b.log()
            return _from_log(CertInterval(_down(p, lambda: la.lo + lb.lo), _up(p, lambda: la.hi + lb.hi), p))
    a, b = a.linear(), b.linear()
    if op == "add":
        return CertInterval(_down(p, lambda: a.lo + b.lo), _up(p, lambda: a.hi + b.hi), p)
    if op == "sub":
        return CertInterval(_down(p, lambda: a.lo - b.hi), _up(p, lambda: a.hi - b.lo), p)
    if op == "mul":
        pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)]
        lo = _down(p, lambda: min(x * y for x, y in pairs))
        hi = _up(p, lambda: max(x * y for x, y in pairs))
        return CertInterval(lo, hi, p)
    if op == "div":
        if b.lo <= 0 <= b.hi:
            raise NumericsError("division by an enclosure containing zero")
        pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)]
        lo = _down(p, lambda: min(x / y for x, y in pairs))
        hi = _up(p, lambda: max(x / y for x, y in pairs))
        return CertInterval(lo, hi, p)
    raise NumericsError(f"unknown operation {op!r}")


def iv_scale(x: CertInterval, k: int) -> CertInterval:
    """``k * x`` for an exact (possibly huge) integer ``k``; linear domain only."""
    x = x.linear()
    p = x.precision_bits
    z = mpz(k)
    lo = _down(p, lambda: min(x.lo * z, x.hi * z))
    hi = _up(p, lambda: max(x.lo * z, x.hi * z))
    return CertInterval(lo, hi, p)


def _monotone(x: CertInterval, fn) -> CertInterval:
    p = x.precision_bits
    return CertInterval(_down(p, lambda: fn(x.lo)), _up(p, lambda: fn(x.hi)), p)


def iv_sqrt(x: CertInterval) -> CertInterval:
    x = x.linear()
    if x.lo < 0:
        raise NumericsError("sqrt of an enclosure reaching below zero")
    return _monotone(x, gmpy2.sqrt)


def iv_exp(x: CertInterval) -> CertInterval:
    """``exp`` of a linear enclosure, switching to log domain when the result is tiny."""
    return _from_log(x.linear())


def iv_expm1(x: CertInterval) -> CertInterval:
    return _monotone(x.linear(), gmpy2.expm1)


def iv_log(x: CertInterval) -> CertInterval:
    return x.log()


def iv_log1p(x: CertInterval) -> CertInterval:
    x = x.linear()
    if x.lo < -1:
        raise NumericsError("log1p of an enclosure reaching below -1")
    return _monotone(x, gmpy2.log1p)


def _from_log(ln: CertInterval) -> CertInterval:
    """Turn an enclosure of ``ln x`` into an enclosure of ``x`` in the fitting domain."""
    p = ln.precision_bits
    if gmpy2.is_infinite(ln.lo) or ln.lo >= _log_floor(p):
        return CertInterval(_down(p, lambda: gmpy2.exp(ln.lo)), _up(p, lambda: gmpy2.exp(ln.hi)), p)
    return CertInterval(ln.lo, ln.hi, p, True)


def iv_complement(x: CertInterval) -> CertInterval:
    """``1 - x``; tight for log-domain ``x`` through ``-expm1(ln x)``."""
    p = x.precision_bits
    if x.log_domain:
        return CertInterval(
            -_up(p, lambda: gmpy2.expm1(x.hi)),
            -_down(p, lambda: gmpy2.expm1(x.lo)),
            p,
        )
    return CertInterval(_down(p, lambda: 1 - x.hi), _up(p, lambda: 1 - x.lo), p)


def iv_log_complement(x: CertInterval) -> CertInterval:
    """Enclosure of ``ln(1 - x)`` for ``0 <= x <= 1``, accurate when ``x`` is tiny."""
    p = x.precision_bits
    if x.log_domain:
        # 1 - x lies in (0, 1); -x/(1-x) <= ln(1-x) <= -x
        lin = x.linear()
        if lin.hi < 1:
            return iv_log1p(-lin)
        return CertInterval(mpfr("-inf"), _up(p, lambda: -lin.lo), p)
    if x.hi > 1:
        raise NumericsError("ln(1 - x) needs x <= 1")
    return CertInterval(_down(p, lambda: gmpy2.log1p(-x.hi)), _up(p, lambda: gmpy2.log1p(-x.lo)), p)


def iv_pow(x: CertInterval, k: int) -> CertInterval:
    """Enclosure of ``x**k`` for ``x >= 0`` and an exact integer ``k >= 1``.

    Both ``exp(k ln x)`` and correctly rounded integer powering are evaluated
    and intersected.
    """
    if k < 1:
        raise NumericsError("exponent must be a positive integer")
    if not x.log_domain and x.lo < 0:
        raise NumericsError("power of an enclosure reaching below zero")
    p = x.precision_bits
    if x.log_domain:
        return CertInterval(_down(p, lambda: x.lo * mpz(k)), _up(p, lambda: x.hi * mpz(k)), p, True)
    via_log = _from_log(iv_scale(x.log(), k)) if x.lo > 0 else None
    z = mpz(k)
    direct = CertInterval(_down(p, lambda: x.lo**z), _up(p, lambda: x.hi**z), p)
    if via_log is None:
        return direct
    if via_log.log_domain:
        return via_log
    return direct.intersect(via_log)


def iv_pow_real(x: CertInterval, r: CertInterval) -> CertInterval:
    """``x**r`` for real ``r`` via ``exp(r ln x)``; ``x`` may touch 0 only when ``r > 0``."""
    if not x.log_domain and x.lo == 0 and r.lo <= 0:
        raise NumericsError("0 ** r needs r > 0")
    return _from_log(iv_arith(x.log(), r, "mul"))


def iv_pow_rational(x: CertInterval, r: Rational) -> CertInterval:
    """``x**r`` for rational ``r``; integer exponents go through exact integer powering."""
    r = Fraction(r)
    if r.denominator == 1 and r > 0:
        return iv_pow(x, int(r))
    if r == 0:
        return iv_from_ratio(1, 1, x.precision_bits)
    return iv_pow_real(x, iv_from_rational(r, x.precision_bits))


def iv_hull(*xs: CertInterval) -> CertInterval:
    lins = [x.linear() for x in xs]
    p = max(x.precision_bits for x in xs)
    return CertInterval(min(x.lo for x in lins), max(x.hi for x in lins), p)


def iv_clamp_unit(x: CertInterval) -> CertInterval:
    """Intersect with [0, 1]; only for quantities known to be probabilities."""
    if x.log_domain:
        return x if x.hi <= 0 else CertInterval(x.lo, min(x.hi, mpfr(0)), x.precision_bits, True)
    return CertInterval(max(x.lo, mpfr(0)), min(x.hi, mpfr(1)), x.precision_bits)


# -- comparison ----------------------------------------------------------


def _bound_le(u: mpfr, u_log: bool, v: mpfr, v_log: bool, prec: int, strict: bool) -> bool:
    """Certified ``u <= v`` (or ``<``) where a flagged bound is the log of a positive value."""
    if u_log == v_log:
        return u < v if strict else u <= v
    if u_log:
        if v <= 0:
            return False
        lv = _down(prec, lambda: gmpy2.log(v))
        return u < lv if strict else u <= lv
    if u <= 0:
        return True
    lu = _up(prec, lambda: gmpy2.log(u))
    return lu < v if strict else lu <= v


def certify_leq(a: CertInterval, b: CertInterval) -> TriBool:
    """CertTrue iff ``a.hi <= b.lo``; CertFalse iff ``a.lo > b.hi``; Unknown otherwise."""
    p = max(a.precision_bits, b.precision_bits)
    if _bound_le(a.hi, a.log_domain, b.lo, b.log_domain, p, strict=False):
        return TriBool.CERT_TRUE
    if _bound_le(b.hi, b.log_domain, a.lo, a.log_domain, p, strict=True):
        return TriBool.CERT_FALSE
    return TriBool.UNKNOWN


def certify_geq(a: CertInterval, b: CertInterval) -> TriBool:
    return certify_leq(b, a)


def adaptive(
    build: Callable[[int], T],
    verdict: Callable[[T], TriBool],
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = PRECISION_CAP,
) -> tuple[T, int]:
    """Rebuild with doubled precision while the verdict is Unknown, up to ``cap`` bits.

    Returns the last result and the precision that produced it.
    """
    prec = precision_bits
    while True:
        result = build(prec)
        if verdict(result).decisive or prec >= cap:
            return result, prec
        prec = min(2 * prec, cap)


def to_fraction(x: mpfr) -> Fraction:
    num, den = x.as_integer_ratio()
    return Fraction(int(num), int(den))
