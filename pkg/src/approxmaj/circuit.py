"""Sampled alternating AND/OR formulas: sampling, evaluation, truth tables, file format.

A circuit is the complete tree determined by its profile; only the leaf labels
vary.  Leaves are stored flat in level order, so consecutive groups of ``w_1``
leaves feed one bottom AND gate, consecutive groups of ``w_2`` of those feed one
OR gate, and so on up to the root.

Truth tables index inputs by ``b`` with bit ``i`` of ``b`` equal to ``x_i`` and
are stored bit-packed in uint64 words, little-endian within each word.
"""

from __future__ import annotations

import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .amplification import FanInProfile

FORMAT_MAGIC = "approxmaj-circuit"
FORMAT_VERSION = 1
TRUTH_TABLE_CAP = 24
_BLOCK_ELEMS = 1 << 22  # leaf-by-word working set per block


class CircuitFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Circuit:
    n: int
    profile: FanInProfile
    leaves: np.ndarray
    seed: int | None = None
    rng_id: str | None = None

    def __post_init__(self):
        leaves = np.ascontiguousarray(self.leaves, dtype=np.uint32)
        leaves.setflags(write=False)
        object.__setattr__(self, "leaves", leaves)
        if self.n < 1:
            raise ValueError("n must be positive")
        if leaves.ndim != 1 or leaves.size != self.profile.leaves():
            raise ValueError(f"leaf-count mismatch: expected {self.profile.leaves()}, got {leaves.size}")
        if leaves.size and int(leaves.max()) >= self.n:
            raise ValueError("variable index >= n")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n == other.n
            and self.profile == other.profile
            and self.seed == other.seed
            and self.rng_id == other.rng_id
            and np.array_equal(self.leaves, other.leaves)
        )

    __hash__ = None

    @property
    def depth(self) -> int:
        return self.profile.depth

    def __repr__(self) -> str:
        return f"Circuit(n={self.n}, profile=({self.profile}), seed={self.seed})"


def majority(x: Sequence[int]) -> int:
    """1 iff at least half the bits are set (ties go to 1)."""
    x = np.asarray(x)
    return int(2 * int(np.count_nonzero(x)) >= x.size)


def _leaf_block(profile: FanInProfile, n: int, seed: int, start: int, stop: int) -> np.ndarray:
    return rng.uniform_ints(seed, rng.LEAVES, start, stop - start, n).astype(np.uint32)


def sample_circuit(profile: FanInProfile, n: int, seed: int, workers: int = 1) -> Circuit:
    """Draw every leaf independently and uniformly from the ``n`` variables.

    Leaf ``j`` is a function of ``(seed, j)`` only, so the worker count does not
    change the result.
    """
    if n < 1:
        raise ValueError("n must be positive")
    total = profile.leaves()
    block = 1 << 16
    spans = [(s, min(s + block, total)) for s in range(0, total, block)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda sp: _leaf_block(profile, n, seed, *sp), spans))
    else:
        parts = [_leaf_block(profile, n, seed, *sp) for sp in spans]
    leaves = np.concatenate(parts) if parts else np.empty(0, dtype=np.uint32)
    return Circuit(n, profile, leaves, seed, rng.RNG_ID)


def _reduce_levels(profile: FanInProfile, values: np.ndarray, words: bool) -> np.ndarray:
    """Collapse leaf values (leading axis) through the alternating gates."""
    for k, w in enumerate(profile.fanins, start=1):
        grouped = values.reshape((-1, w) + values.shape[1:])
        if words:
            op = np.bitwise_and if k % 2 == 1 else np.bitwise_or
            values = op.reduce(grouped, axis=1)
        else:
            values = grouped.all(axis=1) if k % 2 == 1 else grouped.any(axis=1)
    return values[0]


def evaluate(circuit: Circuit, x: Sequence[int]) -> int:
    x = np.asarray(x, dtype=bool)
    if x.shape != (circuit.n,):
        raise ValueError(f"assignment length {x.size} != n = {circuit.n}")
    return int(_reduce_levels(circuit.profile, x[circuit.leaves], words=False))


def evaluate_words(circuit: Circuit, columns: np.ndarray) -> np.ndarray:
    """Bit-parallel evaluation: ``columns[i]`` holds 64 inputs' values of ``x_i`` per word."""
    columns = np.asarray(columns, dtype=np.uint64)
    if columns.shape[0] != circuit.n:
        raise ValueError("one column per variable required")
    n_words = columns.shape[1]
    step = max(1, _BLOCK_ELEMS // max(1, circuit.leaves.size))
    out = np.empty(n_words, dtype=np.uint64)
    for s in range(0, n_words, step):
        e = min(s + step, n_words)
        out[s:e] = _reduce_levels(circuit.profile, columns[:, s:e][circuit.leaves], words=True)
    return out


# -- truth tables -----------------------------------------------------------

_LOW_PATTERNS = np.array(
    [
        0xAAAAAAAAAAAAAAAA,
        0xCCCCCCCCCCCCCCCC,
        0xF0F0F0F0F0F0F0F0,
        0xFF00FF00FF00FF00,
        0xFFFF0000FFFF0000,
        0xFFFFFFFF00000000,
    ],
    dtype=np.uint64,
)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def variable_columns(n: int, start: int, stop: int) -> np.ndarray:
    """Truth-table words ``start..stop-1`` of every projection ``x_i``, shape ``(n, stop-start)``."""
    j = np.arange(start, stop, dtype=np.uint64)
    cols = np.empty((n, stop - start), dtype=np.uint64)
    for i in range(n):
        if i < 6:
            cols[i] = _LOW_PATTERNS[i]
        else:
            cols[i] = np.where((j >> np.uint64(i - 6)) & np.uint64(1), _ALL, np.uint64(0))
    return cols


def _word_mask(n: int) -> np.uint64:
    return _ALL if n >= 6 else np.uint64((1 << (1 << n)) - 1)


def _popcount_masks() -> np.ndarray:
    # masks[h] has bit t set iff popcount(t) >= h, for t in 0..63
    t = np.arange(64)
    pc = np.array([bin(v).count("1") for v in t])
    masks = np.zeros(8, dtype=np.uint64)
    for h in range(8):
        masks[h] = np.uint64(sum(1 << int(v) for v in t[pc >= h]))
    return masks


_POPCOUNT_MASKS = _popcount_masks()


def majority_words(n: int, start: int, stop: int) -> np.ndarray:
    """Truth-table words of ``Maj_n``: popcount(b) >= n/2 with ``b = 64 j + t``."""
    need = (n + 1) // 2
    j = np.arange(start, stop, dtype=np.uint64)
    h = need - np.bitwise_count(j).astype(np.int64)
    out = _POPCOUNT_MASKS[np.clip(h, 0, 7)]
    out = np.where(h > 6, np.uint64(0), out)
    return out & _word_mask(n)


@dataclass(frozen=True, eq=False)
class TruthTable:
    n: int
    words: np.ndarray

    def __len__(self) -> int:
        return 1 << self.n

    def __getitem__(self, b: int) -> int:
        if not 0 <= b < len(self):
            raise IndexError(b)
        return int((int(self.words[b >> 6]) >> (b & 63)) & 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, TruthTable) and self.n == other.n and np.array_equal(self.words, other.words)

    __hash__ = None

    def bits(self) -> np.ndarray:
        raw = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return raw[: len(self)]

    def count(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def to_bytes(self) -> bytes:
        """8-byte little-endian bit count, then the bits packed little-endian."""
        nbytes = (len(self) + 7) // 8
        return struct.pack("<Q", len(self)) + self.words.astype("<u8").tobytes()[:nbytes]

    @classmethod
    def from_bytes(cls, data: bytes) -> "TruthTable":
        if len(data) < 8:
            raise CircuitFormatError("truncated truth table")
        (nbits,) = struct.unpack_from("<Q", data)
        n = nbits.bit_length() - 1
        if nbits != 1 << n:
            raise CircuitFormatError("truth table length is not a power of two")
        body = data[8:]
        if len(body) != (nbits + 7) // 8:
            raise CircuitFormatError("truth table length mismatch")
        n_words = max(1, nbits // 64)
        padded = body + b"\0" * (8 * n_words - len(body))
        return cls(n, np.frombuffer(padded, dtype="<u8").astype(np.uint64))


def truth_table(circuit: Circuit, cap: int = TRUTH_TABLE_CAP, workers: int = 1) -> TruthTable:
    """All ``2^n`` outputs, 64 inputs per machine word."""
    n = circuit.n
    if n > cap:
        raise ValueError(f"n = {n} exceeds the truth-table cap {cap}")
    n_words = max(1, (1 << n) // 64)
    step = max(1, min(n_words, _BLOCK_ELEMS // max(1, circuit.leaves.size)))
    spans = [(s, min(s + step, n_words)) for s in range(0, n_words, step)]

    def block(span):
        s, e = span
        return evaluate_words(circuit, variable_columns(n, s, e))

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, spans))
    else:
        parts = [block(sp) for sp in spans]
    words = np.concatenate(parts) & _word_mask(n)
    return TruthTable(n, words)


def majority_table(n: int) -> TruthTable:
    n_words = max(1, (1 << n) // 64)
    return TruthTable(n, majority_words(n, 0, n_words))


# -- file format ------------------------------------------------------------


def serialize(circuit: Circuit, seed_only: bool = False) -> bytes:
    """Text header, then (inline encoding) the leaves as little-endian uint32."""
    if seed_only and circuit.seed is None:
        raise CircuitFormatError("seed-only record needs a sampled circuit")
    lines = [
        f"{FORMAT_MAGIC} {FORMAT_VERSION}",
        f"n {circuit.n}",
        f"d {circuit.depth}",
        "fanins " + " ".join(str(w) for w in circuit.profile.fanins),
        f"rng_id {circuit.rng_id or '-'}",
        f"seed {circuit.seed if circuit.seed is not None else '-'}",
        f"leaf-encoding {'seed-only' if seed_only else 'inline'}",
        "end",
    ]
    head = ("\n".join(lines) + "\n").encode("ascii")
    if seed_only:
        return head
    return head + circuit.leaves.astype("<u4").tobytes()


def deserialize(data: bytes) -> Circuit:
    stream = io.BytesIO(data)
    fields: dict[str, str] = {}
    first = stream.readline().decode("ascii", "replace").split()
    if len(first) != 2 or first[0] != FORMAT_MAGIC:
        raise CircuitFormatError("malformed header: bad magic line")
    if first[1] != str(FORMAT_VERSION):
        raise CircuitFormatError(f"malformed header: unsupported version {first[1]}")
    while True:
        raw = stream.readline()
        if not raw:
            raise CircuitFormatError("malformed header: missing end line")
        line = raw.decode("ascii", "replace").rstrip("\n")
        if line == "end":
            break
        key, _, value = line.partition(" ")
        fields[key] = value
    try:
        n = int(fields["n"])
        d = int(fields["d"])
        fanins = tuple(int(t) for t in fields["fanins"].split())
        rng_id = fields["rng_id"]
        seed_text = fields["seed"]
        encoding = fields["leaf-encoding"]
    except (KeyError, ValueError) as exc:
        raise CircuitFormatError(f"malformed header: {exc}") from None
    if len(fanins) != d:
        raise CircuitFormatError("malformed header: depth does not match fan-in list")
    profile = FanInProfile(fanins)
    seed = None if seed_text == "-" else int(seed_text)
    rng_id = None if rng_id == "-" else rng_id
    if encoding == "seed-only":
        if seed is None or rng_id is None:
            raise CircuitFormatError("seed-only record without seed")
        if rng_id != rng.RNG_ID:
            raise CircuitFormatError(f"unknown rng_id {rng_id}")
        return sample_circuit(profile, n, seed)
    if encoding != "inline":
        raise CircuitFormatError(f"malformed header: leaf-encoding {encoding}")
    body = stream.read()
    expected = profile.leaves()
    if len(body) != 4 * expected:
        raise CircuitFormatError(f"leaf-count mismatch: expected {expected} leaves, found {len(body) / 4:g}")
    leaves = np.frombuffer(body, dtype="<u4").astype(np.uint32)
    if leaves.size and int(leaves.max()) >= n:
        raise CircuitFormatError("variable index >= n")
    return Circuit(n, profile, leaves, seed, rng_id)


def save(circuit: Circuit, path, seed_only: bool = False) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(circuit, seed_only))


def load(path) -> Circuit:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
