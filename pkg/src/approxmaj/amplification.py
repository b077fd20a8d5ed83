"""Fan-in profiles and the amplification recursion of the random AND/OR formula family.

``A1[k](p)`` is the probability that a random level-``k`` subformula outputs 1
when every leaf is independently 1 with probability ``p``; ``A0[k] = 1 - A1[k]``.
Level 1 (just above the leaves) is AND, levels alternate upward, so odd levels
raise ``A1`` to the fan-in and even levels raise ``A0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

from .numerics import (
    DEFAULT_PRECISION,
    PRECISION_CAP,
    CertInterval,
    TriBool,
    adaptive,
    certify_leq,
    iv_arith,
    iv_clamp_unit,
    iv_complement,
    iv_exp,
    iv_expm1,
    iv_from_ratio,
    iv_from_rational,
    iv_ln2,
    iv_log_complement,
    iv_pow,
    iv_pow_rational,
    iv_scale,
    iv_sqrt,
)

VALIANT_ALPHA_TEXT = "(sqrt(5)-1)/2"


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class FanInProfile:
    """Gate fan-ins ``(w_1, ..., w_d)``, level 1 at the bottom.

    The empty profile is the bare leaf (depth 0).
    """

    fanins: tuple[int, ...] = ()

    def __post_init__(self):
        fanins = tuple(self.fanins)
        for w in fanins:
            if isinstance(w, bool) or not isinstance(w, int):
                raise ProfileError(f"fan-in {w!r} is not an integer")
            if w < 2:
                raise ProfileError(f"fan-in {w} is below 2")
        object.__setattr__(self, "fanins", fanins)

    @classmethod
    def parse(cls, text: str) -> "FanInProfile":
        text = text.strip().strip("()[]")
        if not text:
            return cls(())
        try:
            return cls(tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok))
        except ValueError as exc:
            raise ProfileError(f"bad profile {text!r}: {exc}") from None

    @property
    def depth(self) -> int:
        return len(self.fanins)

    def __len__(self) -> int:
        return len(self.fanins)

    def __iter__(self) -> Iterator[int]:
        return iter(self.fanins)

    def __getitem__(self, k: int) -> int:
        """1-based level access, ``profile[k] == w_k``."""
        if not 1 <= k <= len(self.fanins):
            raise IndexError(k)
        return self.fanins[k - 1]

    @staticmethod
    def gate(k: int) -> str:
        return "AND" if k % 2 == 1 else "OR"

    def leaves(self) -> int:
        return math.prod(self.fanins)

    def __str__(self) -> str:
        return ",".join(str(w) for w in self.fanins)


class LevelRow(NamedTuple):
    a1: CertInterval
    a0: CertInterval


@dataclass(frozen=True)
class AmplificationTable:
    profile: FanInProfile
    input_p: CertInterval
    rows: tuple[LevelRow, ...]

    @property
    def a1(self) -> CertInterval:
        return self.rows[-1].a1

    @property
    def a0(self) -> CertInterval:
        return self.rows[-1].a0

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile.fanins),
            "p": self.input_p.to_json(),
            "rows": [
                {"k": k, "gate": FanInProfile.gate(k) if k else "LEAF", "a1": r.a1.to_json(), "a0": r.a0.to_json()}
                for k, r in enumerate(self.rows)
            ],
        }


def _exp_pair(ln: CertInterval) -> tuple[CertInterval, CertInterval]:
    """``(exp(L), 1 - exp(L))`` with the complement taken through ``expm1``."""
    return iv_clamp_unit(iv_exp(ln)), iv_clamp_unit(-iv_expm1(ln))


def _log_of(value: CertInterval, complement: CertInterval) -> CertInterval:
    """Enclosure of ``ln(value)`` using both ``value`` and its complement."""
    via_comp = iv_log_complement(complement)
    if value.log_domain or value.lo > 0:
        return via_comp.intersect(value.log())
    return via_comp


def amplify(profile: FanInProfile, p: CertInterval | Fraction | int, precision_bits: int = DEFAULT_PRECISION) -> AmplificationTable:
    """Per-level enclosures of ``(A1[k](p), A0[k](p))`` for ``k = 0..d``."""
    if not isinstance(p, CertInterval):
        p = iv_from_rational(Fraction(p), precision_bits)
    p = p.with_precision(max(precision_bits, p.precision_bits))
    if p.linear().lo < 0 or p.linear().hi > 1:
        # a fuzzy enclosure of a probability may poke out of [0, 1] by rounding only
        if p.linear().hi < 0 or p.linear().lo > 1:
            raise ValueError("p must lie in [0, 1]")
    a1 = iv_clamp_unit(p)
    a0 = iv_clamp_unit(iv_complement(a1))
    rows = [LevelRow(a1, a0)]
    for k, w in enumerate(profile.fanins, start=1):
        if k % 2 == 1:
            a1, a0 = _exp_pair(iv_scale(_log_of(a1, a0), w))
        else:
            a0, a1 = _exp_pair(iv_scale(_log_of(a0, a1), w))
        rows.append(LevelRow(a1, a0))
    return AmplificationTable(profile, p, tuple(rows))


def amplify_exact(profile: FanInProfile, p: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Exact rational recursion; practical only for small fan-ins."""
    a1 = Fraction(p)
    rows = [(a1, 1 - a1)]
    for k, w in enumerate(profile.fanins, start=1):
        if k % 2 == 1:
            a1 = a1**w
        else:
            a1 = 1 - (1 - a1) ** w
        rows.append((a1, 1 - a1))
    return rows


# -- sizes -----------------------------------------------------------------


class GateCount(NamedTuple):
    exact: int
    bound: int
    leaves: int


def gate_count(profile: FanInProfile) -> GateCount:
    """Exact gate count ``1 + w_d + w_{d-1} w_d + ... + prod_{k>=2} w_k``, its bound and leaf count."""
    d = profile.depth
    if d < 1:
        raise ProfileError("gate count needs depth >= 1")
    exact, block = 0, 1
    for k in range(d, 0, -1):
        exact += block
        block *= profile[k]
    upper = math.prod(profile.fanins[1:])
    return GateCount(exact, 2 * upper, profile.leaves())


def size_bound(profile: FanInProfile) -> int:
    return 2 * math.prod(profile.fanins[1:])


# -- gap conditions ----------------------------------------------------


def threshold_points(n: int, epsilon: Fraction, precision_bits: int = DEFAULT_PRECISION) -> tuple[CertInterval, CertInterval]:
    """``(p_low, p_high) = 1/2 -+ epsilon/sqrt(n)`` as enclosures."""
    half = iv_from_ratio(1, 2, precision_bits)
    delta = iv_from_rational(epsilon, precision_bits) / iv_sqrt(iv_from_ratio(n, 1, precision_bits))
    return half - delta, half + delta


@dataclass(frozen=True)
class Lemma1Report:
    profile: FanInProfile
    n: int
    epsilon: Fraction
    cond1: TriBool
    cond2: TriBool
    a1_low: CertInterval
    a0_high: CertInterval
    size_bound: int
    precision_bits: int

    @property
    def certified(self) -> bool:
        return self.cond1 is TriBool.CERT_TRUE and self.cond2 is TriBool.CERT_TRUE

    @property
    def verdict(self) -> TriBool:
        return self.cond1 & self.cond2

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile.fanins),
            "n": self.n,
            "epsilon": str(self.epsilon),
            "cond1": str(self.cond1),
            "cond2": str(self.cond2),
            "a1_low": self.a1_low.to_json(),
            "a0_high": self.a0_high.to_json(),
            "size_bound": str(self.size_bound),
            "approximation": str(3 * self.epsilon),
            "precision_bits": self.precision_bits,
        }


def lemma1_check(
    profile: FanInProfile,
    n: int,
    epsilon: Fraction,
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = PRECISION_CAP,
) -> Lemma1Report:
    """Certify ``A1[d](p_low) <= eps`` and ``A0[d](p_high) <= eps``.

    Precision is doubled while either verdict is Unknown, up to ``cap``.
    """
    epsilon = Fraction(epsilon)
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")

    def build(prec: int) -> Lemma1Report:
        p_low, p_high = threshold_points(n, epsilon, prec)
        eps = iv_from_rational(epsilon, prec)
        a1_low = amplify(profile, p_low, prec).a1
        a0_high = amplify(profile, p_high, prec).a0
        return Lemma1Report(
            profile,
            n,
            epsilon,
            certify_leq(a1_low, eps),
            certify_leq(a0_high, eps),
            a1_low,
            a0_high,
            size_bound(profile),
            prec,
        )

    report, _ = adaptive(build, lambda r: TriBool.UNKNOWN if TriBool.UNKNOWN in (r.cond1, r.cond2) else TriBool.CERT_TRUE, precision_bits, cap)
    return report


# -- Lemmas 3 and 4 ----------------------------------------------------------


@dataclass(frozen=True)
class LemmaCheck:
    """Verdicts for one concrete instance of an amplification step lemma.

    Iterating yields ``(hypothesis, conclusion)``.  ``conclusion`` is always
    evaluated, but only ``applicable`` when the hypothesis certified.
    """

    lemma: int
    branch: str
    hypothesis: TriBool
    conclusion: TriBool
    lhs: CertInterval
    rhs: CertInterval
    precision_bits: int

    @property
    def applicable(self) -> bool:
        return self.hypothesis is TriBool.CERT_TRUE

    def __iter__(self):
        return iter((self.hypothesis, self.conclusion))

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "branch": self.branch,
            "hypothesis": str(self.hypothesis),
            "conclusion": str(self.conclusion),
            "applicable": self.applicable,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "precision_bits": self.precision_bits,
        }


def _check_level_index(level_index: int, d: int) -> None:
    if not 2 <= level_index <= d - 1:
        raise ValueError(f"level_index must lie in 2..{d - 1}, got {level_index}")


def _n_power(n: int, num: int, den: int, prec: int) -> CertInterval:
    return iv_pow_rational(iv_from_ratio(n, 1, prec), Fraction(num, den))


def step_fanin(w1: int, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """The real fan-in ``(ln 2) 2^w1 w1`` used by the step lemmas."""
    return iv_scale(iv_ln2(precision_bits), (1 << w1) * w1)


def step_power(A: CertInterval, w1: int, precision_bits: int) -> CertInterval:
    """``(1 - A)^w`` with the real exponent ``w = (ln 2) 2^w1 w1``."""
    A = A.with_precision(max(precision_bits, A.precision_bits))
    ln = iv_arith(iv_log_complement(A), step_fanin(w1, precision_bits), "mul")
    return iv_exp(ln)


def hypothesis_bound(lemma: int, w1: int, c: Fraction, level_index: int, d: int, n: int, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """``(1/2)^w1 (1 +- c n^((level_index - d)/(2(d-1))))``; ``+`` for ``lemma3_check``, ``-`` for ``lemma4_check``."""
    prec = precision_bits
    base = iv_pow(iv_from_ratio(1, 2, prec), w1)
    shift = iv_from_rational(Fraction(c), prec) * _n_power(n, level_index - d, 2 * (d - 1), prec)
    one = iv_from_ratio(1, 1, prec)
    return base * (one + shift if lemma == 3 else one - shift)


def boundary_A(lemma: int, w1: int, c: Fraction, level_index: int, d: int, n: int, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """A point enclosure on the safe side of the hypothesis boundary, within its rounding width."""
    bound = hypothesis_bound(lemma, w1, c, level_index, d, n, precision_bits)
    edge = bound.hi if lemma == 3 else bound.lo
    return CertInterval(edge, edge, precision_bits)


def _lemma_check(
    lemma: int,
    w1: int,
    A: CertInterval,
    c: Fraction,
    level_index: int,
    d: int,
    n: int,
    epsilon: Fraction,
    precision_bits: int,
    cap: int,
) -> LemmaCheck:
    _check_level_index(level_index, d)
    c, epsilon = Fraction(c), Fraction(epsilon)
    if c <= 0:
        raise ValueError("c must be positive")

    def build(prec: int) -> LemmaCheck:
        half = iv_from_ratio(1, 2, prec)
        base = iv_pow(half, w1)
        bound = hypothesis_bound(lemma, w1, c, level_index, d, n, prec)
        lhs = step_power(A, w1, prec)
        if lemma == 3:
            hyp = certify_leq(bound, A)
        else:
            hyp = certify_leq(A, bound)
        if level_index < d - 1:
            branch = "interior"
            u = _n_power(n, level_index + 1 - d, 2 * (d - 1), prec)
            shift = iv_from_rational(c / (2 * epsilon), prec) * u
            one = iv_from_ratio(1, 1, prec)
            rhs = base * (one - shift if lemma == 3 else one + shift)
        else:
            branch = "top"
            expo = c / epsilon if lemma == 3 else -c / (Fraction(11, 10) * epsilon)
            rhs = base * iv_pow_rational(half, expo)
        concl = certify_leq(lhs, rhs) if lemma == 3 else certify_leq(rhs, lhs)
        return LemmaCheck(lemma, branch, hyp, concl, lhs, rhs, prec)

    result, _ = adaptive(
        build,
        lambda r: TriBool.UNKNOWN if TriBool.UNKNOWN in (r.hypothesis, r.conclusion) else TriBool.CERT_TRUE,
        precision_bits,
        cap,
    )
    return result


def lemma3_check(w1, A, c, level_index, d, n, epsilon, precision_bits=DEFAULT_PRECISION, cap=PRECISION_CAP) -> LemmaCheck:
    """Check ``A >= bound  =>  (1 - A)^w <= ...`` for one concrete instance."""
    return _lemma_check(3, w1, A, c, level_index, d, n, epsilon, precision_bits, cap)


def lemma4_check(w1, A, c, level_index, d, n, epsilon, precision_bits=DEFAULT_PRECISION, cap=PRECISION_CAP) -> LemmaCheck:
    """Mirror of :func:`lemma3_check` with the upper-bound hypothesis and lower-bound conclusion."""
    return _lemma_check(4, w1, A, c, level_index, d, n, epsilon, precision_bits, cap)


@dataclass(frozen=True)
class SweepRow:
    n: int
    w1: int
    lemma3: LemmaCheck
    lemma4: LemmaCheck

    @property
    def certified(self) -> bool:
        return all(
            chk.hypothesis is TriBool.CERT_TRUE and chk.conclusion is TriBool.CERT_TRUE for chk in (self.lemma3, self.lemma4)
        )

    def to_json(self) -> dict:
        return {"n": self.n, "w1": self.w1, "certified": self.certified, "lemma3": self.lemma3.to_json(), "lemma4": self.lemma4.to_json()}


def lemma_sweep(
    d: int,
    level_index: int,
    c: Fraction,
    epsilon: Fraction,
    ns: Iterable[int],
    w1: int | None = None,
    precision_bits: int = DEFAULT_PRECISION,
) -> list[SweepRow]:
    """Run both step lemmas at boundary-valued ``A`` for each ``n``.

    ``w1`` defaults to the ceil-rounded recipe value ``(1/eps) n^(1/(2d-2))``.
    """
    from .construction import paper_w1

    rows = []
    for n in ns:
        w = w1 if w1 is not None else paper_w1(n, d, epsilon)
        l3 = lemma3_check(w, boundary_A(3, w, c, level_index, d, n, precision_bits), c, level_index, d, n, epsilon, precision_bits)
        l4 = lemma4_check(w, boundary_A(4, w, c, level_index, d, n, precision_bits), c, level_index, d, n, epsilon, precision_bits)
        rows.append(SweepRow(n, w, l3, l4))
    return rows


def lemma_threshold(
    d: int,
    level_index: int,
    c: Fraction,
    epsilon: Fraction,
    ns: Sequence[int] | None = None,
    precision_bits: int = DEFAULT_PRECISION,
) -> int | None:
    """Smallest tested ``n`` at which both lemmas certify; ``None`` if none does."""
    if ns is None:
        ns = [2**j for j in range(1, 41)]
    for row in lemma_sweep(d, level_index, c, epsilon, ns, precision_bits=precision_bits):
        if row.certified:
            return row.n
    return None
