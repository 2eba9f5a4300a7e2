"""Packed binary event streams and the weighted expectations over them.

A :class:`BitSeries` stores samples f(t) in little-endian uint64 words:
sample t lives in bit ``t % 64`` of word ``t // 64`` and the pad bits of the
last word are zero. Viewed as bytes this is exactly the on-disk ``.btr``
layout (bit ``t % 8`` of byte ``t // 8``).

Every expectation is ``sum_t w(t) f(t) / sum_t w(t)``. Uniform and
rectangular-window weightings reduce to popcounts over words; explicit
weights accumulate in double precision over the unpacked samples.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np

from bitrel.exceptions.custom_exceptions import UsageError

WORD_BITS = 64
_WORD = np.dtype("<u8")
_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

BitsLike = Union[str, Iterable[int], np.ndarray]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _words_for(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def popcount(words: np.ndarray) -> int:
    return int(_POPCOUNT8[words.view(np.uint8)].sum(dtype=np.int64))


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 vector into zero-padded little-endian uint64 words."""
    n = bits.shape[0]
    packed = np.packbits(bits.astype(np.uint8, copy=False), bitorder="little")
    buffer = np.zeros(_words_for(n) * 8, dtype=np.uint8)
    buffer[: packed.shape[0]] = packed
    return buffer.view(_WORD)


@dataclass(frozen=True, eq=False)
class BitSeries:
    words: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise UsageError(message="A BitSeries needs at least one sample", details={"n": self.n})
        if self.words.dtype != _WORD or self.words.shape != (_words_for(self.n),):
            raise UsageError(message="Packed words do not match the sample count", details={"n": self.n})
        tail = self.n % WORD_BITS
        if tail and int(self.words[-1]) >> tail:
            raise UsageError(message="Pad bits beyond the last sample must be zero", details={"n": self.n})
        _readonly(self.words)

    @classmethod
    def from_bits(cls, bits: BitsLike) -> "BitSeries":
        if isinstance(bits, str):
            bits = [int(c) for c in bits if not c.isspace()]
        array = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        if array.ndim != 1 or array.size == 0:
            raise UsageError(message="Samples must be a non-empty 1-D sequence")
        if array.dtype == np.bool_:
            array = array.astype(np.uint8)
        if not np.isin(array, (0, 1)).all():
            raise UsageError(message="Every sample must be exactly 0 or 1")
        return cls(words=pack_bits(array), n=int(array.shape[0]))

    @classmethod
    def from_bytes(cls, data: bytes, n: int) -> "BitSeries":
        """Build from ceil(n/8) LSB-first bytes (the ``.btr`` node record)."""
        if len(data) != (n + 7) // 8:
            raise UsageError(message="Byte record length does not match the sample count",
                             details={"n": n, "bytes": len(data)})
        buffer = np.zeros(_words_for(n) * 8, dtype=np.uint8)
        buffer[: len(data)] = np.frombuffer(data, dtype=np.uint8)
        return cls(words=buffer.view(_WORD), n=n)

    @classmethod
    def from_words(cls, words: np.ndarray, n: int) -> "BitSeries":
        return cls(words=np.ascontiguousarray(words, dtype=_WORD), n=n)

    def to_bits(self) -> np.ndarray:
        return np.unpackbits(self.words.view(np.uint8), count=self.n, bitorder="little")

    def to_bytes(self) -> bytes:
        return self.words.view(np.uint8)[: (self.n + 7) // 8].tobytes()

    def count(self) -> int:
        return popcount(self.words)

    def __and__(self, other: "BitSeries") -> "BitSeries":
        _check_lengths(self, other)
        return BitSeries(words=self.words & other.words, n=self.n)

    def __xor__(self, other: "BitSeries") -> "BitSeries":
        _check_lengths(self, other)
        return BitSeries(words=self.words ^ other.words, n=self.n)

    def __or__(self, other: "BitSeries") -> "BitSeries":
        _check_lengths(self, other)
        return BitSeries(words=self.words | other.words, n=self.n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitSeries):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        preview = "".join(map(str, self.to_bits()[:32]))
        return f"BitSeries(n={self.n}, bits={preview}{'...' if self.n > 32 else ''})"


class WeightingKind(str, Enum):
    UNIFORM = "uniform"
    WINDOW = "window"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class Weighting:
    kind: WeightingKind
    n: int
    weights: np.ndarray
    start: int = 0
    end: int = 0
    mask: Optional[np.ndarray] = None

    @classmethod
    def uniform(cls, n: int) -> "Weighting":
        if n < 1:
            raise UsageError(message="A weighting needs at least one sample", details={"n": n})
        return cls(kind=WeightingKind.UNIFORM, n=n, weights=_readonly(np.ones(n)), start=0, end=n)

    @classmethod
    def window(cls, n: int, start: int, end: int) -> "Weighting":
        """Unit weight on the half-open sample range [start, end), zero elsewhere."""
        if not 0 <= start < end <= n:
            raise UsageError(message="Window must satisfy 0 <= start < end <= n",
                             details={"n": n, "start": start, "end": end})
        weights = np.zeros(n)
        weights[start:end] = 1.0
        mask = BitSeries.from_bits(weights.astype(np.uint8)).words
        return cls(kind=WeightingKind.WINDOW, n=n, weights=_readonly(weights), start=start, end=end, mask=mask)

    @classmethod
    def explicit(cls, weights: Iterable[float]) -> "Weighting":
        array = np.array(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=np.float64)
        if array.ndim != 1 or array.size == 0:
            raise UsageError(message="Weights must be a non-empty 1-D sequence")
        if not np.isfinite(array).all() or (array < 0).any():
            raise UsageError(message="Weights must be finite and non-negative")
        if not array.sum() > 0:
            raise UsageError(message="Weights must have a positive sum")
        return cls(kind=WeightingKind.EXPLICIT, n=int(array.size), weights=_readonly(array))

    @property
    def total(self) -> float:
        if self.kind == WeightingKind.EXPLICIT:
            return float(self.weights.sum())
        return float(self.end - self.start)


def _check_lengths(*series: BitSeries, w: Optional[Weighting] = None):
    lengths = {s.n for s in series}
    if w is not None:
        lengths.add(w.n)
    if len(lengths) != 1:
        raise UsageError(message="Series and weighting lengths differ", details={"lengths": sorted(lengths)})


def _weighted_mean(words: np.ndarray, n: int, w: Weighting) -> float:
    if w.kind == WeightingKind.UNIFORM:
        return popcount(words) / n
    if w.kind == WeightingKind.WINDOW:
        return popcount(words & w.mask) / (w.end - w.start)
    bits = np.unpackbits(words.view(np.uint8), count=n, bitorder="little")
    return float(np.dot(w.weights, bits)) / w.total


def expectation(f: BitSeries, w: Weighting) -> float:
    _check_lengths(f, w=w)
    return _weighted_mean(f.words, f.n, w)


def expectation_product(fx: BitSeries, fy: BitSeries, w: Weighting) -> float:
    _check_lengths(fx, fy, w=w)
    return _weighted_mean(fx.words & fy.words, fx.n, w)


def expectation_absdiff(fx: BitSeries, fy: BitSeries, w: Weighting) -> float:
    _check_lengths(fx, fy, w=w)
    return _weighted_mean(fx.words ^ fy.words, fx.n, w)


def naive_expectation(samples: Iterable[int], weights: Iterable[float]) -> float:
    """Per-sample reference evaluation, sequential in t."""
    numerator = 0.0
    denominator = 0.0
    for value, weight in zip(samples, weights):
        numerator += weight * value
        denominator += weight
    if denominator <= 0:
        raise UsageError(message="Weights must have a positive sum")
    return numerator / denominator
