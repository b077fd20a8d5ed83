"""Certified checks of the elementary inequalities behind the amplification bounds.

Each check takes concrete ``q`` (and ``r`` where needed) and decides the
inequality with interval arithmetic, raising precision while undecided.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, NamedTuple

from .numerics import (
    DEFAULT_PRECISION,
    PRECISION_CAP,
    CertInterval,
    TriBool,
    adaptive,
    certify_leq,
    iv_e,
    iv_exp,
    iv_from_ratio,
    iv_from_rational,
    iv_log,
    iv_log1p,
    iv_pow_rational,
)


class Inequality(NamedTuple):
    key: str
    text: str
    needs_r: bool
    domain: Callable[[Fraction, Fraction | None], bool]


def _q(q, prec: int) -> CertInterval:
    return q.with_precision(max(prec, q.precision_bits)) if isinstance(q, CertInterval) else iv_from_rational(q, prec)


def _lower(q):
    return q.linear().lo if isinstance(q, CertInterval) else q


def _upper(q):
    return q.linear().hi if isinstance(q, CertInterval) else q


INEQUALITIES = (
    Inequality("i", "(1-q)^(1/q) <= 1/e, 0<q<1", False, lambda q, r: 0 < _lower(q) and _upper(q) < 1),
    Inequality("ii", "(1+q)^r >= 1+qr, q>0, r>=1", True, lambda q, r: _lower(q) > 0 and r >= 1),
    Inequality("iii", "(1-q)^r >= 1-qr, q<1, r>=1", True, lambda q, r: _upper(q) < 1 and r >= 1),
    Inequality("iv", "(1-1/q)^q >= (1-1/q)/e, q>1", False, lambda q, r: _lower(q) > 1),
    Inequality("v", "(1/2)^(2q) <= 1-q, 0<=q<=1/2", False, lambda q, r: 0 <= _lower(q) and _upper(q) <= Fraction(1, 2)),
    Inequality("vi", "q^q >= (1/e)^(1/e), q>0", False, lambda q, r: _lower(q) > 0),
    Inequality("vii", "(1-q)^r <= e^(-qr), q<=1, r>=0", True, lambda q, r: _upper(q) <= 1 and r >= 0),
)

_BY_KEY = {ineq.key: ineq for ineq in INEQUALITIES}


def _pow_rational_or_real(x: CertInterval, r) -> CertInterval:
    if isinstance(r, CertInterval):
        return iv_exp(iv_log(x) * r)
    return iv_pow_rational(x, Fraction(r))


def _phi_range(t: CertInterval) -> CertInterval:
    """Range of ``t ln t - t + 1`` over ``t``; it falls on (0, 1], rises after, and is 0 at 1."""
    prec = t.precision_bits

    def at(v) -> CertInterval:
        pt = CertInterval(v, v, prec)
        return pt * iv_log(pt) - pt + 1

    t = t.linear()
    if t.hi <= 1:
        return CertInterval(at(t.hi).lo, at(t.lo).hi, prec)
    if t.lo >= 1:
        return CertInterval(at(t.lo).lo, at(t.hi).hi, prec)
    top = max(at(t.lo).hi, at(t.hi).hi)
    return CertInterval(iv_from_ratio(0, 1, prec).lo, top, prec)


_EXACT_POWER_LIMIT = 256


def _exact_verdict(key: str, q, r) -> TriBool | None:
    # small integer powers of rationals are decided exactly, which also settles r = 1 equality
    if key not in ("ii", "iii") or isinstance(q, CertInterval):
        return None
    if r.denominator != 1 or r > _EXACT_POWER_LIMIT:
        return None
    base = 1 + q if key == "ii" else 1 - q
    return TriBool.of(base ** int(r) >= 1 + (q * r if key == "ii" else -q * r))


def _evaluate(key: str, q, r, prec: int) -> TriBool:
    one = iv_from_ratio(1, 1, prec)
    Q = _q(q, prec)
    R = iv_from_rational(r, prec) if r is not None else None
    if key == "i":
        # ln(1-q)/q <= -1
        return certify_leq(iv_log1p(-Q) / Q, -one)
    if key == "ii":
        return certify_leq(one + Q * R, _pow_rational_or_real(one + Q, r))
    if key == "iii":
        return certify_leq(one - Q * R, _pow_rational_or_real(one - Q, r))
    if key == "iv":
        base = one - one / Q
        return certify_leq(base / iv_e(prec), iv_exp(iv_log(base) * Q))
    if key == "v":
        lhs = iv_pow_rational(iv_from_ratio(1, 2, prec), 2 * Fraction(q)) if not isinstance(q, CertInterval) else iv_exp(iv_log(iv_from_ratio(1, 2, prec)) * (Q * 2))
        return certify_leq(lhs, one - Q)
    if key == "vi":
        # q^q >= e^(-1/e)  <=>  phi(e q) >= 0
        return certify_leq(iv_from_ratio(0, 1, prec), _phi_range(iv_e(prec) * Q))
    if key == "vii":
        if _lower(q) == 1 and _upper(q) == 1:
            lhs = one if r == 0 else iv_from_ratio(0, 1, prec)
        else:
            lhs = iv_exp(iv_log1p(-Q) * R)
        return certify_leq(lhs, iv_exp(-(Q * R)))
    raise KeyError(key)


def check_inequality(
    key: str,
    q,
    r: Fraction | None = None,
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = PRECISION_CAP,
) -> TriBool | None:
    """Certified verdict of one inequality, or None when ``(q, r)`` is out of its domain."""
    ineq = _BY_KEY[key]
    if not isinstance(q, CertInterval):
        q = Fraction(q)
    if r is not None:
        r = Fraction(r)
    if ineq.needs_r and r is None:
        return None
    if not ineq.domain(q, r):
        return None
    exact = _exact_verdict(key, q, r)
    if exact is not None:
        return exact
    verdict, _ = adaptive(lambda prec: _evaluate(key, q, r, prec), lambda v: v, precision_bits, cap)
    return verdict


def inequality_suite(q, r: Fraction | None = None, precision_bits: int = DEFAULT_PRECISION) -> list[tuple[str, TriBool]]:
    """Verdicts for every inequality whose domain contains ``(q, r)``."""
    out = []
    for ineq in INEQUALITIES:
        verdict = check_inequality(ineq.key, q, r, precision_bits)
        if verdict is not None:
            out.append((f"{ineq.key}: {ineq.text}", verdict))
    return out


def reciprocal_e(precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """Enclosure of ``1/e``, the minimiser of ``q^q``."""
    return iv_from_ratio(1, 1, precision_bits) / iv_e(precision_bits)
