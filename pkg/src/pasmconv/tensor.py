"""Fixed-point integer tensors with two's-complement wrapping semantics.

All values are plain integers at an implicit external scale (e.g. a weight
of 1.7 stored at scale 10 is the integer 17). Words are always signed
two's complement; stores wrap modulo 2**width. Because wrapping keeps
addition and multiplication ring-homomorphic modulo 2**width, results of
any reassociated/redistributed summation order agree bit-exactly, which
is what makes the three convolution schedules in this package comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WordSpec",
    "AccSpec",
    "QTensor",
    "wrap_to_word",
    "acc_width",
    "ceil_log2",
]


def ceil_log2(n: int) -> int:
    """Smallest k with 2**k >= n, for n >= 1."""
    if n < 1:
        raise ValueError(f"ceil_log2: n must be >= 1, got {n}")
    return (n - 1).bit_length()


@dataclass(frozen=True)
class WordSpec:
    """A signed two's-complement word of `width` bits (2..64)."""

    width: int

    def __post_init__(self):
        if not 2 <= self.width <= 64:
            raise ValueError(f"word width must be in 2..64, got {self.width}")

    @property
    def min_value(self) -> int:
        return -(1 << (self.width - 1))

    @property
    def max_value(self) -> int:
        return (1 << (self.width - 1)) - 1

    def contains(self, v: int) -> bool:
        return self.min_value <= v <= self.max_value


def wrap_to_word(v: int, word: WordSpec) -> int:
    """Reduce an unbounded integer into `word`'s signed range modulo 2**width."""
    modulus = 1 << word.width
    r = v & (modulus - 1)
    return r - modulus if r > word.max_value else r


def acc_width(width: int, n_products: int) -> int:
    """Accumulator width guaranteeing no overflow for a sum of `n_products`
    products of two `width`-bit values: 2*W + ceil(log2(max(N, 2))).

    Raises when the guarantee would need more than 64 bits; callers that can
    live with wrap-around modulo 2**64 should use AccSpec.for_sum instead.
    """
    if width < 2:
        raise ValueError(f"acc_width: width must be >= 2, got {width}")
    if n_products < 1:
        raise ValueError(f"acc_width: n_products must be >= 1, got {n_products}")
    needed = 2 * width + ceil_log2(max(n_products, 2))
    if needed > 64:
        raise ValueError(
            f"acc_width: {n_products} products of {width}-bit values need "
            f"{needed} bits, above the supported 64"
        )
    return needed


@dataclass(frozen=True)
class AccSpec:
    """Accumulator word for sums of products, capped at 64 bits.

    Below the cap no overflow can occur; at the cap arithmetic wraps modulo
    2**64, which every schedule in this package applies identically.
    """

    word: WordSpec

    @classmethod
    def for_sum(cls, width: int, n_products: int) -> "AccSpec":
        if width < 2:
            raise ValueError(f"AccSpec: width must be >= 2, got {width}")
        if n_products < 1:
            raise ValueError(f"AccSpec: n_products must be >= 1, got {n_products}")
        needed = 2 * width + ceil_log2(max(n_products, 2))
        return cls(WordSpec(min(64, needed)))

    @property
    def width(self) -> int:
        return self.word.width


class QTensor:
    """Multi-dimensional fixed-point integer tensor, row-major.

    Construction validates every element against the word's range; `set`
    wraps the incoming value instead. Data is held as an int64 ndarray
    (any 2..64-bit word fits).
    """

    __slots__ = ("shape", "word", "data")

    def __init__(self, shape, word: WordSpec, data=None):
        shape = tuple(int(d) for d in shape)
        if len(shape) == 0:
            raise ValueError("tensor must have at least one dimension")
        if any(d < 1 for d in shape):
            raise ValueError(f"tensor dims must all be >= 1, got {shape}")
        n = int(np.prod(shape))
        if data is None:
            arr = np.zeros(n, dtype=np.int64)
        else:
            arr = np.asarray(data, dtype=np.int64).reshape(-1)
            if arr.size != n:
                raise ValueError(
                    f"data length {arr.size} does not match shape {shape} (= {n} elements)"
                )
            lo, hi = word.min_value, word.max_value
            if arr.size and (arr.min() < lo or arr.max() > hi):
                bad = int(np.flatnonzero((arr < lo) | (arr > hi))[0])
                raise ValueError(
                    f"element {arr[bad]} at flat index {bad} outside {word.width}-bit range"
                )
        self.shape = shape
        self.word = word
        self.data = arr.reshape(shape)

    @classmethod
    def zeros(cls, shape, word: WordSpec) -> "QTensor":
        return cls(shape, word)

    @classmethod
    def from_wrapped(cls, shape, word: WordSpec, values) -> "QTensor":
        """Build a tensor by wrapping arbitrary integers into the word."""
        wrapped = [wrap_to_word(int(v), word) for v in np.asarray(values, dtype=object).reshape(-1)]
        return cls(shape, word, wrapped)

    def _check_index(self, index):
        index = tuple(int(i) for i in index)
        if len(index) != len(self.shape):
            raise IndexError(f"index rank {len(index)} does not match tensor rank {len(self.shape)}")
        for i, (ix, d) in enumerate(zip(index, self.shape)):
            if not 0 <= ix < d:
                raise IndexError(f"index {ix} out of bounds for dim {i} of size {d}")
        return index

    def get(self, index) -> int:
        return int(self.data[self._check_index(index)])

    def set(self, index, value: int) -> None:
        self.data[self._check_index(index)] = wrap_to_word(int(value), self.word)

    @property
    def n_elements(self) -> int:
        return int(self.data.size)

    def flat(self) -> np.ndarray:
        """Row-major int64 view of the elements."""
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, QTensor):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.word == other.word
            and bool(np.array_equal(self.data, other.data))
        )

    def __repr__(self):
        return f"QTensor(shape={self.shape}, width={self.word.width})"
