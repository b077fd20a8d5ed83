"""Fan-in profile producers: the asymptotic recipe, the all-2s tree, and a certified search."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import gmpy2

from .amplification import FanInProfile, Lemma1Report, amplify, lemma1_check, size_bound, threshold_points
from .numerics import (
    DEFAULT_PRECISION,
    CertInterval,
    TriBool,
    certify_leq,
    iv_from_ratio,
    iv_from_rational,
    iv_ln2,
    iv_log,
    iv_log_complement,
    iv_pow_rational,
    iv_scale,
    to_fraction,
)

log = logging.getLogger(__name__)

ROUNDING_POLICIES = ("ceil", "round", "floor")


class ConstructionError(ValueError):
    pass


def _round_fraction(x: Fraction, policy: str) -> int:
    if policy == "ceil":
        return math.ceil(x)
    if policy == "floor":
        return math.floor(x)
    if policy == "round":
        return math.floor(x + Fraction(1, 2))
    raise ConstructionError(f"unknown rounding policy {policy!r}")


def certified_round(
    make: Callable[[int], CertInterval],
    policy: str,
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = 1 << 20,
) -> int:
    """Round an irrational quantity to an integer, refining until the enclosure decides.

    ``make(prec)`` must enclose a value that is not itself an integer (or, for
    ``round``, a half-integer); callers handle rational cases exactly.
    """
    if policy not in ROUNDING_POLICIES:
        raise ConstructionError(f"unknown rounding policy {policy!r}")
    prec = precision_bits
    while prec <= cap:
        iv = make(prec)
        # floors taken on exact rationals; an mpfr floor would round past 53 bits
        lo, hi = to_fraction(iv.lo), to_fraction(iv.hi)
        if policy == "round":
            lo, hi = lo + Fraction(1, 2), hi + Fraction(1, 2)
        f_lo, f_hi = math.floor(lo), math.floor(hi)
        if f_lo == f_hi:
            base = f_lo
            # floor(lo) == floor(hi) and the value is not an integer, so ceil = floor + 1
            return base + 1 if policy == "ceil" else base
        prec *= 2
    raise ConstructionError("could not decide rounding within the precision cap")


def paper_w1(n: int, d: int, epsilon: Fraction, rounding_policy: str = "ceil") -> int:
    """Bottom fan-in ``(1/eps) n^(1/(2d-2))`` rounded per policy, at least 2."""
    epsilon = Fraction(epsilon)
    m = 2 * d - 2
    root, exact = gmpy2.iroot(gmpy2.mpz(n), m)
    if exact:
        w1 = _round_fraction(Fraction(int(root)) / epsilon, rounding_policy)
    else:
        def make(prec: int) -> CertInterval:
            return iv_pow_rational(iv_from_ratio(n, 1, prec), Fraction(1, m)) / iv_from_rational(epsilon, prec)

        w1 = certified_round(make, rounding_policy)
    return max(2, w1)


def _ln2_times(k: int, policy: str) -> int:
    # (ln 2) * k is irrational for every k >= 1
    return max(2, certified_round(lambda prec: iv_scale(iv_ln2(prec), k), policy, max(DEFAULT_PRECISION, k.bit_length() + 64)))


@dataclass(frozen=True)
class ProfileRecipe:
    n: int
    d: int
    epsilon: Fraction
    rounding_policy: str
    profile: FanInProfile
    w1_real: CertInterval
    tilde: tuple[int, ...]
    prerounded: tuple[CertInterval, ...]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "epsilon": str(self.epsilon),
            "rounding_policy": self.rounding_policy,
            "profile": [str(w) for w in self.profile],
            "w1_real": self.w1_real.to_json(),
            "tilde": [str(t) for t in self.tilde],
            "prerounded": [iv.to_json() for iv in self.prerounded],
            "size_bound": str(size_bound(self.profile)),
        }


def paper_profile(n: int, d: int, epsilon: Fraction, rounding_policy: str = "ceil") -> ProfileRecipe:
    """The asymptotic recipe at concrete ``(n, d, eps)``.

    ``w_1 = (1/eps) n^(1/(2d-2))``, interior ``w_k = (ln 2) 2^w1 w1``, top
    ``w_d = (ln 2) 2^w1``, each rounded to an exact integer per policy.
    """
    epsilon = Fraction(epsilon)
    if d < 2:
        raise ConstructionError("the recipe needs depth d >= 2")
    if not 0 < epsilon < Fraction(1, 2):
        raise ConstructionError("epsilon must lie in (0, 1/2)")
    if n < 1:
        raise ConstructionError("n must be positive")
    if rounding_policy not in ROUNDING_POLICIES:
        raise ConstructionError(f"unknown rounding policy {rounding_policy!r}")

    prec = DEFAULT_PRECISION
    w1_real = iv_pow_rational(iv_from_ratio(n, 1, prec), Fraction(1, 2 * d - 2)) / iv_from_rational(epsilon, prec)
    w1 = paper_w1(n, d, epsilon, rounding_policy)
    interior_tilde = (1 << w1) * w1
    top_tilde = 1 << w1
    big_prec = max(prec, w1 + 64)
    interior = _ln2_times(interior_tilde, rounding_policy)
    top = _ln2_times(top_tilde, rounding_policy)
    fanins = (w1,) + (interior,) * (d - 2) + (top,)
    tilde = (interior_tilde,) * (d - 2) + (top_tilde,)
    prerounded = tuple(iv_scale(iv_ln2(big_prec), t) for t in tilde)
    return ProfileRecipe(n, d, epsilon, rounding_policy, FanInProfile(fanins), w1_real, tilde, prerounded)


VALIANT_DEPTH_FACTOR = Fraction(53, 10)


def valiant_depth(n: int) -> int:
    """Smallest even ``d >= 5.3 log2 n``."""
    if n < 2:
        raise ConstructionError("the all-2s tree needs n >= 2")
    if n & (n - 1) == 0:
        raw = math.ceil(VALIANT_DEPTH_FACTOR * (n.bit_length() - 1))
    else:
        def make(prec: int) -> CertInterval:
            log2n = iv_log(iv_from_ratio(n, 1, prec)) / iv_ln2(prec)
            return iv_from_rational(VALIANT_DEPTH_FACTOR, prec) * log2n

        raw = certified_round(make, "ceil")
    return raw + (raw % 2)


def valiant_profile(n: int) -> FanInProfile:
    return FanInProfile((2,) * valiant_depth(n))


# -- search ------------------------------------------------------------------


class NotFound:
    """Sentinel result of an exhausted search."""

    def __repr__(self) -> str:
        return "NotFound"

    def __bool__(self) -> bool:
        return False


NOT_FOUND = NotFound()


@dataclass(frozen=True)
class ExploreResult:
    profile: FanInProfile | NotFound
    report: Lemma1Report | None
    evaluations: int
    visited: int

    @property
    def found(self) -> bool:
        return isinstance(self.profile, FanInProfile)

    def __iter__(self):
        return iter((self.profile, self.report))

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "profile": [str(w) for w in self.profile] if self.found else None,
            "size_bound": str(size_bound(self.profile)) if self.found else None,
            "evaluations": self.evaluations,
            "visited": self.visited,
            "report": self.report.to_json() if self.report else None,
        }


def _top_range(below: FanInProfile, n: int, epsilon: Fraction, prec: int) -> tuple[int, int] | None:
    """Candidate top fan-ins ``(t_min, t_max)`` over the profile ``below``, or None if infeasible.

    With an AND on top (odd depth) the 1-side at ``p_low`` must shrink to at most
    eps while the 0-side at ``p_high`` stays at most eps; OR mirrors this.
    Bounds are loose by one rounding step; ``lemma1_check`` has the final word.
    """
    d = below.depth + 1
    p_low, p_high = threshold_points(n, epsilon, prec)
    low = amplify(below, p_low, prec).rows[-1]
    high = amplify(below, p_high, prec).rows[-1]
    if d % 2 == 1:
        shrink, keep = low.a1, high.a1  # need shrink^t <= eps and 1 - keep^t <= eps
    else:
        shrink, keep = high.a0, low.a0
    eps = iv_from_rational(epsilon, prec)
    ln_shrink, ln_keep = _ln(shrink), _ln(keep)
    if ln_shrink.hi >= 0 or ln_keep.hi >= 0:
        return None
    t_min_iv = iv_log(eps) / ln_shrink
    t_max_iv = iv_log_complement(eps) / ln_keep
    if gmpy2.is_infinite(t_min_iv.lo) or gmpy2.is_infinite(t_max_iv.hi):
        return None
    t_min = max(2, math.ceil(to_fraction(t_min_iv.lo)))
    t_max = math.floor(to_fraction(t_max_iv.hi))
    if t_min > t_max:
        return None
    return t_min, t_max


def _ln(x: CertInterval) -> CertInterval:
    return x.log() if (x.log_domain or x.lo > 0) else CertInterval(gmpy2.mpfr("-inf"), x.log().hi, x.precision_bits)


@dataclass
class _Best:
    key: tuple | None = None
    profile: FanInProfile | None = None
    report: Lemma1Report | None = None

    def offer(self, profile: FanInProfile, report: Lemma1Report) -> None:
        w1 = profile[1]
        interior = profile[2] if profile.depth > 2 else 0
        key = (size_bound(profile), w1, interior, profile.fanins)
        if self.key is None or key < self.key:
            self.key, self.profile, self.report = key, profile, report


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def take(self) -> bool:
        if self.used >= self.limit:
            return False
        self.used += 1
        return True


def _certify_top(below: FanInProfile, n: int, epsilon: Fraction, budget: _Budget, prec: int):
    """Cheapest certified top fan-in over ``below``; returns (profile, report) or None."""
    if not budget.take():
        return None
    rng = _top_range(below, n, epsilon, prec)
    if rng is None:
        return None
    t_lo, t_hi = rng
    for t in (t_lo, t_lo + 1):
        if t > t_hi:
            break
        profile = FanInProfile(below.fanins + (t,))
        report = lemma1_check(profile, n, epsilon, prec)
        if report.certified:
            return profile, report
    return None


def _search_w1(w1: int, n: int, d: int, epsilon: Fraction, budget_limit: int, prec: int, v_cap: int):
    """Best certified profile for one bottom fan-in; returns (best_key, profile, report, used, visited)."""
    budget = _Budget(budget_limit)
    best = _Best()
    visited = 0
    if d == 2:
        got = _certify_top(FanInProfile((w1,)), n, epsilon, budget, prec)
        visited += 1
        if got:
            best.offer(*got)
        return best.key, best.profile, best.report, budget.used, visited

    cache: dict[int, object] = {}

    def probe(v: int):
        nonlocal visited
        if v not in cache:
            visited += 1
            cache[v] = _certify_top(FanInProfile((w1,) + (v,) * (d - 2)), n, epsilon, budget, prec)
            if cache[v]:
                best.offer(*cache[v])
        return cache[v]

    # doubling probe for the first feasible interior fan-in, then bisect below it
    v, prev = 2, 1
    while v <= v_cap and not probe(v):
        if budget.used >= budget.limit:
            break
        prev, v = v, 2 * v
    if v <= v_cap and cache.get(v):
        lo, hi = prev + 1, v
        while lo < hi and budget.used < budget.limit:
            mid = (lo + hi) // 2
            if probe(mid):
                hi = mid
            else:
                lo = mid + 1
        # the cost v^(d-2) * t(v) is not monotone in v; look a little past the first feasible value
        for extra in range(hi + 1, min(v_cap, hi + 8) + 1):
            if budget.used >= budget.limit:
                break
            probe(extra)
    return best.key, best.profile, best.report, budget.used, visited


def explore(
    n: int,
    d: int,
    epsilon: Fraction,
    search_budget: int = 2000,
    slack: int = 2,
    precision_bits: int = DEFAULT_PRECISION,
    workers: int = 1,
) -> ExploreResult:
    """Search for the certified profile with the smallest gate bound.

    Sweeps ``w1`` over ``[2, w1_recipe + slack]``; interior levels share one
    fan-in, found by doubling then bisection; the top fan-in is solved from the
    level below and re-certified.  ``search_budget`` caps candidate evaluations.
    """
    epsilon = Fraction(epsilon)
    if search_budget <= 0:
        raise ConstructionError("search budget must be positive")
    if d < 2:
        raise ConstructionError("explore needs d >= 2")
    if not 0 < epsilon < Fraction(1, 2):
        raise ConstructionError("epsilon must lie in (0, 1/2)")
    w1_max = paper_w1(n, d, epsilon) + slack
    w1_values = list(range(2, w1_max + 1))[:search_budget]
    share = max(1, search_budget // len(w1_values))
    jobs = []
    for w1 in w1_values:
        v_cap = 4 * ((1 << w1) * w1)
        jobs.append((w1, n, d, epsilon, share, precision_bits, v_cap))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_search_star, jobs))
    else:
        results = [_search_star(job) for job in jobs]

    best = _Best()
    used = visited = 0
    for key, profile, report, u, vis in results:
        used += u
        visited += vis
        if key is not None:
            best.offer(profile, report)
    if best.profile is None:
        log.info("explore(n=%d, d=%d, eps=%s): nothing certified in %d evaluations", n, d, epsilon, used)
        return ExploreResult(NOT_FOUND, None, used, visited)
    return ExploreResult(best.profile, best.report, used, visited)


def _search_star(job):
    return _search_w1(*job)
