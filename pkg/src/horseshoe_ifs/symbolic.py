"""Finite words over the alphabet {0, 1, 2}.

Words are packed two bits per symbol into a Python/NumPy integer (first
symbol in the most significant position), so numeric order of codes of a
fixed length is lexicographic order of the words.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "ALPHABET",
    "MAX_PACKED_LENGTH",
    "Word",
    "PeriodicCode",
    "enumerate_words",
    "enumerate_codes",
    "is_exceptional",
    "count_symbols",
    "codes_count_symbol",
    "codes_to_symbols",
]

ALPHABET = (0, 1, 2)
MAX_PACKED_LENGTH = 31
MAX_ENUM_LENGTH = 20


@dataclass(frozen=True, order=True)
class Word:
    """An immutable finite word; ``str(word)`` renders it as ``"02110"``."""

    symbols: tuple[int, ...]

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if len(syms) == 0:
            raise ValueError("words have length >= 1")
        if any(s not in ALPHABET for s in syms):
            raise ValueError(f"symbols must be in {ALPHABET}, got {syms}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def parse(cls, text: str) -> "Word":
        return cls(tuple(int(c) for c in text.strip()))

    @classmethod
    def from_code(cls, code: int, length: int) -> "Word":
        code = int(code)
        return cls(tuple((code >> (2 * (length - 1 - i))) & 3 for i in range(length)))

    @property
    def code(self) -> int:
        if len(self) > MAX_PACKED_LENGTH:
            raise OverflowError(f"packed codes hold at most {MAX_PACKED_LENGTH} symbols")
        out = 0
        for s in self.symbols:
            out = (out << 2) | s
        return out

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, item):
        return self.symbols[item]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + tuple(other))

    def __mul__(self, times: int) -> "Word":
        return Word(self.symbols * times)

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols)


@dataclass(frozen=True)
class PeriodicCode:
    """The two-sided periodic sequence ``(word)^Z``; the period need not be minimal."""

    word: Word

    @property
    def period(self) -> int:
        return len(self.word)

    def least_period(self) -> int:
        syms = self.word.symbols
        m = len(syms)
        for p in range(1, m + 1):
            if m % p == 0 and syms == syms[:p] * (m // p):
                return p
        return m

    def __str__(self) -> str:
        return f"({self.word})^Z"


def _as_word(word) -> Word:
    if isinstance(word, Word):
        return word
    if isinstance(word, str):
        return Word.parse(word)
    return Word(tuple(word))


def _check_mask(mask: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(s) for s in mask)))
    if any(s not in ALPHABET for s in out):
        raise ValueError(f"alphabet mask must be a subset of {ALPHABET}")
    return out


def enumerate_words(n: int, alphabet_mask: Iterable[int] = ALPHABET) -> Iterator[Word]:
    """Yield every word of length ``n`` over ``alphabet_mask`` in lexicographic order."""
    if not 1 <= n <= MAX_ENUM_LENGTH:
        raise ValueError(f"word length must be in [1, {MAX_ENUM_LENGTH}]")
    mask = _check_mask(alphabet_mask)
    for syms in itertools.product(mask, repeat=n):
        yield Word(syms)


def enumerate_codes(n: int, alphabet_mask: Iterable[int] = ALPHABET, prefix: Sequence[int] = ()) -> np.ndarray:
    """Packed codes of all words of length ``n`` (optionally with a fixed prefix).

    The result is sorted, i.e. lexicographic. Splitting by prefix gives the
    chunks used for parallel consumption.
    """
    if not 1 <= n <= MAX_ENUM_LENGTH:
        raise ValueError(f"word length must be in [1, {MAX_ENUM_LENGTH}]")
    mask = np.array(_check_mask(alphabet_mask), dtype=np.int64)
    if len(prefix) > n:
        raise ValueError("prefix longer than the word")
    codes = np.zeros(1, dtype=np.int64)
    for s in prefix:
        if int(s) not in mask:
            return np.zeros(0, dtype=np.int64)
        codes = (codes << 2) | int(s)
    for _ in range(n - len(prefix)):
        codes = ((codes[:, None] << 2) | mask[None, :]).ravel()
    return codes


def codes_to_symbols(codes: np.ndarray, n: int) -> np.ndarray:
    """Unpack codes into an ``(len(codes), n)`` symbol array."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = 2 * np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 3).astype(np.int8)


def codes_count_symbol(codes: np.ndarray, n: int, symbol: int) -> np.ndarray:
    return (codes_to_symbols(codes, n) == symbol).sum(axis=1)


def count_symbols(word) -> tuple[int, int, int]:
    """Return ``(n0, n1, n2)``, the number of occurrences of each symbol."""
    w = _as_word(word)
    return tuple(w.symbols.count(s) for s in ALPHABET)


def is_exceptional(word) -> bool:
    """True iff the word avoids symbol 1.

    Periodic codes over {0, 2} are exactly the periodic orbits of the lateral
    two-legged horseshoe, whose fiber coordinate is 0.
    """
    return count_symbols(word)[1] == 0
