"""The slices R_k = {m >= 1 : 2^k exactly divides m} and the codings built on them.

``encode_R(A)`` spreads each bit of ``A`` over a whole slice, so that the
density of the coded set is ``sum(2**-(n+1) for n in A)``.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import islice
from typing import Iterable, Iterator

import numpy as np

from .density import NatSetPrefix, WordSetPrefix, as_predicate
from .errors import BudgetExceeded, ContradictionError

DEFAULT_DECODE_BUDGET = 2**22


def r_index(m: int) -> int:
    """The unique ``k`` with ``m ∈ R_k``, i.e. the 2-adic valuation of ``m``."""
    if m < 1:
        raise ValueError("0 lies in no R_k")
    return (m & -m).bit_length() - 1


def f_enum(k: int, x: int) -> int:
    """The ``x``-th element of ``R_k`` in increasing order."""
    if k < 0 or x < 0:
        raise ValueError("k and x must be natural numbers")
    return (2 * x + 1) << k


def slice_position(m: int) -> tuple[int, int]:
    """Inverse of :func:`f_enum`: ``m == f_enum(*slice_position(m))``."""
    k = r_index(m)
    return k, ((m >> k) - 1) // 2


def r_index_array(bound: int) -> np.ndarray:
    """Vector of ``r_index(m)`` for ``m < bound``, with -1 at ``m = 0``."""
    m = np.arange(bound, dtype=np.int64)
    low = m & -m
    out = np.full(bound, -1, dtype=np.int64)
    nz = low > 0
    # frexp is exact on powers of two
    out[nz] = np.frexp(low[nz].astype(np.float64))[1] - 1
    return out


def r_slice(k: int, bound: int) -> NatSetPrefix:
    """Prefix of ``R_k`` below ``bound``."""
    bits = np.zeros(bound, dtype=bool)
    start = 1 << k
    if start < bound:
        bits[start :: 2 * start] = True
    return NatSetPrefix(bits)


def encode_R(A, bound: int) -> NatSetPrefix:
    """Prefix of ``𝓡(A) = ⋃_{n∈A} R_n`` below ``bound``.

    ``A`` is only queried on ``0 .. floor(log2(bound - 1))``.
    """
    pred = as_predicate(A)
    idx = r_index_array(bound)
    top = int(idx.max()) if bound > 1 else -1
    table = np.array([bool(pred(k)) for k in range(top + 1)] + [False], dtype=bool)
    # idx == -1 at m = 0 picks the trailing False
    return NatSetPrefix(table[idx])


class GenericListing:
    """A stream of ``(argument, bit)`` pairs coding the graph of a partial 0/1 function.

    ``source`` is either a re-iterable collection or a zero-argument callable
    returning a fresh iterator. Every pass checks that no argument is listed
    with two different bits.
    """

    def __init__(self, source):
        self._source = source

    def __iter__(self) -> Iterator[tuple[int, int]]:
        seen: dict[int, int] = {}
        it = self._source() if callable(self._source) else iter(self._source)
        for n, b in it:
            b = int(b)
            if b not in (0, 1):
                raise ValueError(f"listing bit must be 0 or 1, got {b}")
            prev = seen.setdefault(n, b)
            if prev != b:
                raise ContradictionError(f"argument {n} listed with bits {prev} and {b}")
            yield n, b

    @classmethod
    def full(cls, source, bound: int) -> "GenericListing":
        """List ``(m, A(m))`` for every ``m < bound`` in increasing order."""
        if isinstance(source, NatSetPrefix):
            bits = source.bits[:bound]
            return cls(lambda: ((m, int(b)) for m, b in enumerate(bits.tolist())))
        pred = as_predicate(source)
        return cls(lambda: ((m, int(pred(m))) for m in range(bound)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "GenericListing":
        return cls(tuple((int(n), int(b)) for n, b in pairs))

    def as_dict(self, limit: int | None = None) -> dict[int, int]:
        return dict(islice(iter(self), limit))


def decode_R(G: GenericListing, n: int, budget: int = DEFAULT_DECODE_BUDGET) -> int:
    """Read ``A(n)`` off a generic listing of ``𝓡(A)``.

    Consumes ``G`` until it lists some ``m ∈ R_n``. Raises
    :class:`BudgetExceeded` when ``budget`` pairs go by (or the listing
    ends) without one.
    """
    if n < 0:
        raise ValueError("n must be a natural number")
    low = 1 << n  # m ∈ R_n iff its lowest set bit is 2^n
    consumed = 0
    for m, b in G:
        if consumed >= budget:
            break
        consumed += 1
        if m >= 1 and m & -m == low:
            return b
    raise BudgetExceeded(f"no element of R_{n} among {consumed} listed pairs", consumed)


def binary_digits(r: Fraction) -> Iterator[int]:
    """Binary expansion ``b_0 b_1 ...`` of ``r ∈ [0, 1]`` with ``r = Σ b_i 2^-(i+1)``.

    ``r = 1`` yields the all-ones expansion.
    """
    r = Fraction(r)
    if not 0 <= r <= 1:
        raise ValueError("r must lie in [0, 1]")
    if r == 1:
        while True:
            yield 1
    while True:
        r *= 2
        if r >= 1:
            yield 1
            r -= 1
        else:
            yield 0


def density_real_to_set(r_bits: Iterable[int], bound: int) -> NatSetPrefix:
    """Prefix of ``𝓡({i : b_i = 1})``, a set whose density is the real with bits ``r_bits``."""
    needed = max(bound - 1, 1).bit_length()
    bits = list(islice(iter(r_bits), needed))
    ones = {i for i, b in enumerate(bits) if b}
    return encode_R(ones, bound)


def spread_encode(A, max_len: int) -> WordSetPrefix:
    """The binary word set ``{0^n 1 w : n ∈ A}`` up to length ``max_len``."""
    pred = as_predicate(A)
    levels = [np.zeros(2**length, dtype=bool) for length in range(max_len + 1)]
    for n in range(max_len):
        if not pred(n):
            continue
        for length in range(n + 1, max_len + 1):
            # words 0^n 1 w of this length occupy [2^(length-n-1), 2^(length-n))
            levels[length][2 ** (length - n - 1) : 2 ** (length - n)] = True
    return WordSetPrefix(2, levels)
