"""Exact prefix densities over omega and over finite word alphabets.

Everything here works on finite knowledge: a :class:`NatSetPrefix` knows
membership for ``0 <= m < bound`` and nothing above it. Densities are
:class:`fractions.Fraction` values; floats appear only in CSV output.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InsufficientKnowledgeError, UndefinedRatioError

Membership = Callable[[int], bool]


def as_predicate(source) -> Membership:
    """Turn a set, prefix, or callable into a ``int -> bool`` predicate."""
    if isinstance(source, NatSetPrefix):
        return source.__contains__
    if callable(source):
        return lambda m: bool(source(m))
    if hasattr(source, "__contains__"):
        return source.__contains__
    raise TypeError(f"not a membership source: {source!r}")


class NatSetPrefix:
    """Membership bits for ``A ∩ [0, bound)``.

    Queries at or above ``bound`` raise :class:`InsufficientKnowledgeError`.
    Instances are immutable; the underlying array is marked read-only.
    """

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool, copy=True).reshape(-1)
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from_elements(cls, elements: Iterable[int], bound: int) -> "NatSetPrefix":
        bits = np.zeros(bound, dtype=bool)
        idx = np.fromiter((m for m in elements if 0 <= m < bound), dtype=np.int64)
        bits[idx] = True
        return cls(bits)

    @classmethod
    def from_predicate(cls, source, bound: int) -> "NatSetPrefix":
        pred = as_predicate(source)
        return cls(np.fromiter((pred(m) for m in range(bound)), dtype=bool, count=bound))

    @classmethod
    def empty(cls, bound: int) -> "NatSetPrefix":
        return cls(np.zeros(bound, dtype=bool))

    @classmethod
    def full(cls, bound: int) -> "NatSetPrefix":
        return cls(np.ones(bound, dtype=bool))

    @property
    def bound(self) -> int:
        return int(self._bits.size)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @cached_property
    def _cumulative(self) -> np.ndarray:
        return np.cumsum(self._bits, dtype=np.int64)

    def _check(self, n: int) -> None:
        if n < 0:
            raise ValueError(f"negative argument {n}")
        if n >= self.bound:
            raise InsufficientKnowledgeError(
                f"membership of {n} unknown: prefix bound is {self.bound}"
            )

    def __contains__(self, m: int) -> bool:
        self._check(m)
        return bool(self._bits[m])

    def __call__(self, m: int) -> bool:
        return m in self

    def count_upto(self, n: int) -> int:
        """``|A ∩ [0, n]|``."""
        self._check(n)
        return int(self._cumulative[n])

    def cardinality(self) -> int:
        return int(self._bits.sum())

    def elements(self) -> list[int]:
        return np.flatnonzero(self._bits).tolist()

    def __iter__(self):
        return iter(self.elements())

    def __len__(self) -> int:
        return self.cardinality()

    def __eq__(self, other) -> bool:
        if not isinstance(other, NatSetPrefix):
            return NotImplemented
        return self.bound == other.bound and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash((self.bound, self._bits.tobytes()))

    def __repr__(self) -> str:
        shown = self.elements()[:8]
        more = ", ..." if self.cardinality() > 8 else ""
        return f"NatSetPrefix(bound={self.bound}, {{{', '.join(map(str, shown))}{more}}})"

    def truncate(self, bound: int) -> "NatSetPrefix":
        if bound > self.bound:
            raise InsufficientKnowledgeError(f"cannot extend prefix {self.bound} to {bound}")
        return NatSetPrefix(self._bits[:bound])

    def _pair(self, other: "NatSetPrefix"):
        b = min(self.bound, other.bound)
        return self._bits[:b], other._bits[:b]

    def __or__(self, other: "NatSetPrefix") -> "NatSetPrefix":
        a, b = self._pair(other)
        return NatSetPrefix(a | b)

    def __and__(self, other: "NatSetPrefix") -> "NatSetPrefix":
        a, b = self._pair(other)
        return NatSetPrefix(a & b)

    def __xor__(self, other: "NatSetPrefix") -> "NatSetPrefix":
        a, b = self._pair(other)
        return NatSetPrefix(a ^ b)

    def __sub__(self, other: "NatSetPrefix") -> "NatSetPrefix":
        a, b = self._pair(other)
        return NatSetPrefix(a & ~b)

    def complement(self) -> "NatSetPrefix":
        return NatSetPrefix(~self._bits)

    def issubset(self, other: "NatSetPrefix", upto: int | None = None) -> bool:
        a, b = self._pair(other)
        if upto is not None:
            a, b = a[: upto + 1], b[: upto + 1]
        return not bool(np.any(a & ~b))


def prefix_density(A: NatSetPrefix, n: int) -> Fraction:
    """``|A ∩ [0, n]| / (n + 1)``."""
    return Fraction(A.count_upto(n), n + 1)


@dataclass(frozen=True)
class DensityProfile:
    samples: tuple[tuple[int, Fraction], ...]
    upper_estimate: Fraction
    lower_estimate: Fraction

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "rho_num", "rho_den", "rho_float"])
        for n, rho in self.samples:
            writer.writerow([n, rho.numerator, rho.denominator, repr(float(rho))])
        return buf.getvalue()


def density_profile(
    A: NatSetPrefix, sample_points: Sequence[int], tail: float = 0.5
) -> DensityProfile:
    """Exact densities at ``sample_points`` with tail-window max/min estimates.

    ``tail`` is the fraction of trailing samples the estimates look at
    (at least one sample is always used).
    """
    points = list(sample_points)
    if not points:
        raise ValueError("sample_points must be non-empty")
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValueError("sample_points must be strictly increasing")
    if not 0 < tail <= 1:
        raise ValueError("tail must lie in (0, 1]")
    samples = tuple((n, prefix_density(A, n)) for n in points)
    width = max(1, math.ceil(len(samples) * tail))
    window = [rho for _, rho in samples[-width:]]
    return DensityProfile(samples, max(window), min(window))


def relative_density(A: NatSetPrefix, B: NatSetPrefix, n: int) -> Fraction:
    """``|A ∩ [0,n]| / |B ∩ [0,n]|`` for ``A ⊆ B`` on ``[0, n]``."""
    A.count_upto(n)
    denominator = B.count_upto(n)
    if not A.issubset(B, upto=n):
        raise ValueError("A is not contained in B on the prefix")
    if denominator == 0:
        raise UndefinedRatioError(f"B has no elements in [0, {n}]")
    return Fraction(A.count_upto(n), denominator)


def symdiff_density(A: NatSetPrefix, B: NatSetPrefix, n: int) -> Fraction:
    A._check(n)
    B._check(n)
    return prefix_density(A ^ B, n)


def rca_check(parts: Sequence[NatSetPrefix], n: int) -> tuple[Fraction, Fraction]:
    """Density of a disjoint union against the sum of the parts' densities."""
    if not parts:
        return Fraction(0), Fraction(0)
    seen = np.zeros(n + 1, dtype=np.int64)
    for part in parts:
        part._check(n)
        seen += part.bits[: n + 1]
    overlap = np.flatnonzero(seen > 1)
    if overlap.size:
        raise ValueError(f"parts overlap at {int(overlap[0])}")
    lhs = Fraction(int(np.count_nonzero(seen)), n + 1)
    rhs = sum((prefix_density(p, n) for p in parts), Fraction(0))
    return lhs, rhs


@dataclass(frozen=True)
class GenericityFit:
    C: Fraction
    sigma: Fraction
    degenerate: bool = False

    def bound_at(self, n: int) -> Fraction:
        return self.C * self.sigma**n


def strong_genericity_fit(
    profile: DensityProfile,
    default_sigma: Fraction = Fraction(1, 2),
    slack: float = 4.0,
) -> GenericityFit | None:
    """Fit ``1 - rho_n <= C * sigma**n`` to a profile, or return ``None``.

    The slope comes from least squares on ``log(1 - rho_n)``. ``C`` is then
    the smallest rational making the bound hold on every sample. The fit is
    rejected when ``sigma >= 1`` or when some sample sits more than ``slack``
    times above the fitted line, which is how sub-exponential decay shows up.
    """
    gaps = [(n, 1 - rho) for n, rho in profile.samples if rho != 1]
    if not gaps:
        return GenericityFit(Fraction(1), Fraction(default_sigma), degenerate=True)
    if len(gaps) < 2:
        return None
    xs = np.array([n for n, _ in gaps], dtype=float)
    ys = np.array([math.log(g) for _, g in gaps], dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    sigma_f = math.exp(slope)
    if not 0 < sigma_f < 1:
        return None
    sigma = Fraction(sigma_f).limit_denominator(10**6)
    if not 0 < sigma < 1:
        return None
    C = max(g / sigma**n for n, g in gaps)
    if float(C) > slack * math.exp(intercept):
        return None
    return GenericityFit(C, sigma)


class WordSetPrefix:
    """Membership for every word of length ``<= bound`` over ``alphabet_size`` letters.

    Words are tuples of letters ``0 .. alphabet_size - 1``; strings of digits
    are accepted too. Internally the words of length ``l`` are numbered in
    base ``alphabet_size`` with the first letter most significant.
    """

    def __init__(self, alphabet_size: int, levels: Sequence[np.ndarray]):
        if alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        self.alphabet_size = alphabet_size
        self._levels = []
        for length, level in enumerate(levels):
            arr = np.array(level, dtype=bool, copy=True).reshape(-1)
            if arr.size != alphabet_size**length:
                raise ValueError(f"level {length} must have {alphabet_size**length} entries")
            arr.setflags(write=False)
            self._levels.append(arr)
        if not self._levels:
            raise ValueError("at least the empty word level is required")

    @property
    def bound(self) -> int:
        return len(self._levels) - 1

    @classmethod
    def from_predicate(cls, pred, alphabet_size: int, bound: int) -> "WordSetPrefix":
        levels = []
        for length in range(bound + 1):
            levels.append(
                np.fromiter(
                    (bool(pred(w)) for w in _words(alphabet_size, length)),
                    dtype=bool,
                    count=alphabet_size**length,
                )
            )
        return cls(alphabet_size, levels)

    @classmethod
    def from_words(cls, words: Iterable, alphabet_size: int, bound: int) -> "WordSetPrefix":
        levels = [np.zeros(alphabet_size**length, dtype=bool) for length in range(bound + 1)]
        for word in words:
            w = _as_word(word)
            if len(w) <= bound:
                levels[len(w)][_word_index(w, alphabet_size)] = True
        return cls(alphabet_size, levels)

    def level(self, length: int) -> np.ndarray:
        return self._levels[length]

    def __contains__(self, word) -> bool:
        w = _as_word(word)
        if len(w) > self.bound:
            raise InsufficientKnowledgeError(f"word of length {len(w)} beyond bound {self.bound}")
        if any(not 0 <= c < self.alphabet_size for c in w):
            raise ValueError(f"letter outside alphabet in {word!r}")
        return bool(self._levels[len(w)][_word_index(w, self.alphabet_size)])

    def count_upto(self, n: int) -> int:
        if n > self.bound:
            raise InsufficientKnowledgeError(f"length {n} beyond bound {self.bound}")
        return int(sum(int(level.sum()) for level in self._levels[: n + 1]))

    def words(self, as_str: bool = False) -> list:
        out = []
        for length, level in enumerate(self._levels):
            for idx in np.flatnonzero(level).tolist():
                w = _index_word(idx, length, self.alphabet_size)
                out.append("".join(map(str, w)) if as_str else w)
        return out


def words_upto(alphabet_size: int, n: int) -> int:
    """Number of words of length at most ``n``."""
    if alphabet_size == 1:
        return n + 1
    return (alphabet_size ** (n + 1) - 1) // (alphabet_size - 1)


def word_prefix_density(S: WordSetPrefix, n: int) -> Fraction:
    return Fraction(S.count_upto(n), words_upto(S.alphabet_size, n))


def _as_word(word) -> tuple[int, ...]:
    if isinstance(word, str):
        return tuple(int(c) for c in word)
    return tuple(word)


def _word_index(word: tuple[int, ...], sigma: int) -> int:
    idx = 0
    for c in word:
        idx = idx * sigma + c
    return idx


def _index_word(idx: int, length: int, sigma: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        idx, c = divmod(idx, sigma)
        out.append(c)
    return tuple(reversed(out))


def _words(sigma: int, length: int):
    for idx in range(sigma**length):
        yield _index_word(idx, length, sigma)
