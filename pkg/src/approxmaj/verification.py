"""Approximation quality against Maj_n: exact, in expectation, and by sampling."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Any

import numpy as np

from . import rng
from .amplification import FanInProfile, amplify, amplify_exact
from .circuit import TRUTH_TABLE_CAP, Circuit, evaluate_words, majority_words, truth_table
from .numerics import (
    DEFAULT_PRECISION,
    CertInterval,
    TriBool,
    certify_leq,
    iv_from_ratio,
    iv_from_rational,
    iv_sqrt,
)


@dataclass(frozen=True)
class VerificationReport:
    mode: str
    disagreement: Any
    n: int
    profile: FanInProfile | None = None
    samples: int | None = None
    seed: int | None = None
    confidence: float | None = None
    half_width: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = self.disagreement
        if isinstance(d, Fraction):
            value: Any = {"exact": str(d), "float": float(d)}
        elif isinstance(d, CertInterval):
            value = d.to_json()
        else:
            value = {"estimate": d, "half_width": self.half_width, "confidence": self.confidence}
        out = {
            "mode": self.mode,
            "disagreement": value,
            "n": self.n,
            "profile": [str(w) for w in self.profile] if self.profile is not None else None,
            "samples": self.samples,
            "seed": self.seed,
        }
        out.update(self.extra)
        return out


# -- exact -------------------------------------------------------------------


def disagreement_count(circuit: Circuit, cap: int = TRUTH_TABLE_CAP, workers: int = 1) -> int:
    table = truth_table(circuit, cap, workers)
    maj = majority_words(circuit.n, 0, table.words.size)
    return int(np.bitwise_count(table.words ^ maj).sum())


def exact_disagreement(circuit: Circuit, cap: int = TRUTH_TABLE_CAP, workers: int = 1) -> Fraction:
    """``#{x : f(x) != Maj_n(x)} / 2^n``, by full truth table."""
    return Fraction(disagreement_count(circuit, cap, workers), 1 << circuit.n)


# -- in expectation ----------------------------------------------------------


def weight_errors(profile: FanInProfile, n: int, precision_bits: int = DEFAULT_PRECISION) -> list[tuple[int, int, CertInterval]]:
    """Rows ``(m, C(n, m), err(m))``: a random circuit errs on a weight-``m`` input with probability err(m).

    Below the threshold the error is ``A1[d](m/n)``, at or above it ``A0[d](m/n)``.
    """
    rows = []
    for m in range(n + 1):
        table = amplify(profile, Fraction(m, n), precision_bits)
        err = table.a1 if 2 * m < n else table.a0
        rows.append((m, math.comb(n, m), err))
    return rows


def expected_error(profile: FanInProfile, n: int, precision_bits: int = DEFAULT_PRECISION) -> CertInterval:
    """Enclosure of the disagreement with Maj_n averaged over random circuits.

    Some circuit in the family does at least this well.
    """
    if n < 1:
        raise ValueError("n must be positive")
    total = iv_from_ratio(0, 1, precision_bits)
    for _, count, err in weight_errors(profile, n, precision_bits):
        total = total + err * count
    return total / (1 << n)


def expected_error_exact(profile: FanInProfile, n: int) -> Fraction:
    """Rational value of :func:`expected_error`; only for small fan-ins."""
    total = Fraction(0)
    for m in range(n + 1):
        a1, a0 = amplify_exact(profile, Fraction(m, n))[-1]
        total += math.comb(n, m) * (a1 if 2 * m < n else a0)
    return total / (1 << n)


def weight_profile_csv(profile: FanInProfile, n: int, precision_bits: int = DEFAULT_PRECISION) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "count", "maj", "err_lo", "err_hi", "err_width"])
    for m, count, err in weight_errors(profile, n, precision_bits):
        lin = err.linear()
        writer.writerow([m, count, int(2 * m >= n), f"{lin.lo:.20g}", f"{lin.hi:.20g}", f"{err.width():.3g}"])
    return buf.getvalue()


# -- middle band and central binomial ------------------------------------------


@dataclass(frozen=True)
class MiddleBand:
    n: int
    epsilon: Fraction
    weights: tuple[int, ...]
    count: int
    paper_bound: CertInterval
    bound_holds: TriBool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "epsilon": str(self.epsilon),
            "weights": list(self.weights),
            "count": str(self.count),
            "fraction": str(Fraction(self.count, 1 << self.n)),
            "paper_bound": self.paper_bound.to_json(),
            "bound_holds": str(self.bound_holds),
        }


def middle_band(n: int, epsilon: Fraction, precision_bits: int = DEFAULT_PRECISION) -> MiddleBand:
    """Inputs strictly within ``eps sqrt(n)`` of ``n/2`` and the bound ``2 eps sqrt(n) C(n, n//2)``.

    Band membership ``|m - n/2| < eps sqrt(n)`` is decided exactly as
    ``(2m - n)^2 < 4 eps^2 n``.
    """
    epsilon = Fraction(epsilon)
    if n < 1:
        raise ValueError("n must be positive")
    weights = tuple(m for m in range(n + 1) if (2 * m - n) ** 2 < 4 * epsilon**2 * n)
    count = sum(math.comb(n, m) for m in weights)
    root_n = iv_sqrt(iv_from_ratio(n, 1, precision_bits))
    bound = iv_from_rational(2 * epsilon, precision_bits) * root_n * math.comb(n, n // 2)
    holds = certify_leq(iv_from_ratio(count, 1, precision_bits), bound)
    return MiddleBand(n, epsilon, weights, count, bound, holds)


def stirling_check(n: int) -> TriBool:
    """``C(n, n//2) <= 2^n / sqrt(n)``, decided exactly as ``n C^2 <= 4^n``."""
    if n < 1:
        raise ValueError("n must be positive")
    c = math.comb(n, n // 2)
    return TriBool.of(n * c * c <= 4**n)


# -- sampling ------------------------------------------------------------------


def _z(confidence: float) -> float:
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    return NormalDist().inv_cdf((1 + confidence) / 2)


def _mc_block(circuit: Circuit, seed: int, samples: int, s: int, e: int) -> int:
    n = circuit.n
    cols = np.ascontiguousarray(rng.raw_words(seed, rng.MONTE_CARLO, s * n, (e - s) * n).reshape(e - s, n).T)
    out = evaluate_words(circuit, cols)
    bits = np.unpackbits(cols.view(np.uint8).reshape(n, e - s, 8), axis=2, bitorder="little").reshape(n, -1)
    maj = (2 * bits.sum(axis=0, dtype=np.int64) >= n).astype(np.uint8)
    got = np.unpackbits(out.view(np.uint8), bitorder="little")
    valid = min(64 * (e - s), samples - 64 * s)
    return int(np.count_nonzero((got != maj)[:valid]))


def monte_carlo_disagreement(
    circuit: Circuit,
    samples: int,
    seed: int,
    confidence: float = 0.95,
    block_words: int | None = None,
    workers: int = 1,
) -> VerificationReport:
    """Estimate ``Pr_x[f(x) != Maj_n(x)]`` over uniform ``x`` with a normal-approximation interval.

    Sample ``s`` sits in bit ``s % 64`` of word ``s // 64``; the value of ``x_i``
    for word ``j`` is draw ``j * n + i`` of the Monte Carlo stream.  Block
    counts are summed in block order, so ``workers`` never changes the result.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    n = circuit.n
    n_words = -(-samples // 64)
    if block_words is None:
        block_words = max(1, (1 << 18) // n)
    spans = [(s, min(s + block_words, n_words)) for s in range(0, n_words, block_words)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda se: _mc_block(circuit, seed, samples, *se), spans))
    else:
        counts = [_mc_block(circuit, seed, samples, s, e) for s, e in spans]
    errors = sum(counts)
    estimate = errors / samples
    half = _z(confidence) * math.sqrt(estimate * (1 - estimate) / samples)
    return VerificationReport(
        "montecarlo",
        estimate,
        n,
        circuit.profile,
        samples,
        seed,
        confidence,
        half,
        {"errors": errors, "interval": [estimate - half, estimate + half]},
    )


@dataclass(frozen=True)
class SliceReport:
    profile: FanInProfile
    n: int
    m: int
    samples: int
    seed: int
    ones: int
    predicted: CertInterval

    @property
    def empirical(self) -> float:
        return self.ones / self.samples

    @property
    def sigma(self) -> float:
        a = float(self.predicted.midpoint())
        return math.sqrt(a * (1 - a) / self.samples)

    @property
    def z(self) -> float:
        a = float(self.predicted.midpoint())
        if self.sigma == 0:
            return 0.0 if self.empirical == a else math.inf
        return (self.empirical - a) / self.sigma

    def to_json(self) -> dict:
        return {
            "mode": "weight-slice",
            "profile": [str(w) for w in self.profile],
            "n": self.n,
            "m": self.m,
            "samples": self.samples,
            "seed": self.seed,
            "empirical": self.empirical,
            "predicted": self.predicted.to_json(),
            "sigma": self.sigma,
            "z": self.z,
        }


def weight_slice_consistency(
    profile: FanInProfile,
    n: int,
    m: int,
    samples: int,
    seed: int,
    precision_bits: int = DEFAULT_PRECISION,
) -> SliceReport:
    """Evaluate fresh random circuits on ``x = 1^m 0^(n-m)`` and compare with ``A1[d](m/n)``.

    Leaf ``j`` of circuit ``s`` is draw ``s * leaves + j`` of the slice stream.
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    if samples < 1:
        raise ValueError("samples must be positive")
    leaves = profile.leaves()
    chunk = max(1, (1 << 22) // max(1, leaves))
    ones = 0
    for s in range(0, samples, chunk):
        e = min(s + chunk, samples)
        labels = rng.uniform_ints(seed, rng.SLICE, s * leaves, (e - s) * leaves, n)
        values = (labels < np.uint64(m)).reshape(e - s, leaves).T
        for k, w in enumerate(profile.fanins, start=1):
            grouped = values.reshape(-1, w, e - s)
            values = grouped.all(axis=1) if k % 2 == 1 else grouped.any(axis=1)
        ones += int(np.count_nonzero(values[0]))
    predicted = amplify(profile, Fraction(m, n), precision_bits).a1
    return SliceReport(profile, n, m, samples, seed, ones, predicted)
