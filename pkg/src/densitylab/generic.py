"""Generic and coarse computability engines.

* :class:`SetStream` and :func:`generic_from_pair` turn a pair of c.e.
  approximations ``C0 ⊆ complement(A)``, ``C1 ⊆ A`` into a partial decision
  procedure for ``A``.
* :func:`coarse_from_limit` and :func:`decode_from_coarse` go back and forth
  between a limit approximation of ``A`` and a total set that is generically
  similar to ``𝓡(A)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .density import NatSetPrefix, as_predicate, prefix_density, symdiff_density
from .errors import ContradictionError
from .partition import f_enum, r_index, r_index_array


class SetStream:
    """A monotone enumeration of a set of naturals.

    The enumerated prefix is cached, so the stream can be shared by many
    queries even when ``source`` is a one-shot iterator.
    """

    def __init__(self, source: Iterable[int] | Callable[[], Iterator[int]]):
        self._it = source() if callable(source) else iter(source)
        self._order: list[int] = []
        self._seen: set[int] = set()
        self.exhausted = False

    @classmethod
    def from_prefix(cls, A: NatSetPrefix) -> "SetStream":
        return cls(A.elements())

    @classmethod
    def from_predicate(cls, source, bound: int | None = None) -> "SetStream":
        pred = as_predicate(source)

        def gen():
            m = 0
            while bound is None or m < bound:
                if pred(m):
                    yield m
                m += 1

        return cls(gen)

    @classmethod
    def from_machine(cls, universe, e: int, max_stage: int | None = None) -> "SetStream":
        from .machines import machine_stream

        return cls(machine_stream(universe, e, max_stage))

    def pull(self) -> int | None:
        """Enumerate one more element; ``None`` once a finite stream runs dry."""
        if self.exhausted:
            return None
        for m in self._it:
            if m not in self._seen:
                self._seen.add(m)
                self._order.append(m)
                return m
        self.exhausted = True
        return None

    def fill(self, count: int) -> None:
        while len(self._order) < count and self.pull() is not None:
            pass

    def __contains__(self, m: int) -> bool:
        return m in self._seen

    @property
    def enumerated(self) -> list[int]:
        return list(self._order)

    def __len__(self) -> int:
        return len(self._order)


class PairDecider:
    """Partial decision procedure built from ``C0 ⊆ complement(A)`` and ``C1 ⊆ A``."""

    def __init__(self, C0: SetStream, C1: SetStream):
        self.C0 = C0 if isinstance(C0, SetStream) else SetStream(C0)
        self.C1 = C1 if isinstance(C1, SetStream) else SetStream(C1)

    def _answer(self, x: int) -> int | None:
        in0, in1 = x in self.C0, x in self.C1
        if in0 and in1:
            raise ContradictionError(f"{x} enumerated into both C0 and C1")
        if in0:
            return 0
        if in1:
            return 1
        return None

    def __call__(self, x: int, budget: int) -> int | None:
        """0 or 1 if ``x`` shows up within ``budget`` pulls, else ``None``.

        The two streams are pulled alternately; ``budget`` counts pulls over
        both, and elements cached by earlier queries are free.
        """
        ans = self._answer(x)
        pulls = 0
        turn = 0
        while ans is None and pulls < budget:
            if self.C0.exhausted and self.C1.exhausted:
                break
            stream = (self.C0, self.C1)[turn]
            turn ^= 1
            m = stream.pull()
            if m is None:
                continue
            pulls += 1
            if m == x:
                ans = self._answer(x)
        return ans

    def domain_prefix(self, n: int, budget: int) -> NatSetPrefix:
        """Points ``<= n`` answered once both streams have ``budget`` elements."""
        self.C0.fill(budget)
        self.C1.fill(budget)
        dom = np.zeros(n + 1, dtype=bool)
        for stream in (self.C0, self.C1):
            idx = [m for m in stream._order if m <= n]
            dom[idx] = True
        return NatSetPrefix(dom)


def generic_from_pair(C0, C1) -> PairDecider:
    return PairDecider(C0, C1)


def densely_approximable_report(C0, C1, budget: int, n: int) -> tuple[bool, Fraction]:
    """Pull ``budget`` elements from each stream; report disjointness and union density."""
    s0 = C0 if isinstance(C0, SetStream) else SetStream(C0)
    s1 = C1 if isinstance(C1, SetStream) else SetStream(C1)
    s0.fill(budget)
    s1.fill(budget)
    consistent = not (s0._seen & s1._seen)
    union = np.zeros(n + 1, dtype=bool)
    for stream in (s0, s1):
        union[[m for m in stream._order if m <= n]] = True
    return consistent, Fraction(int(union.sum()), n + 1)


class LimitApprox:
    """A uniformly computable sequence of finite sets ``s -> A_s``."""

    def __init__(self, stage: Callable[[int], Iterable[int]], settles_by: dict[int, int] | None = None):
        self._stage = stage
        self.settles_by = dict(settles_by or {})

    def __call__(self, s: int) -> frozenset[int]:
        return frozenset(self._stage(s))

    @classmethod
    def constant(cls, A: Iterable[int]) -> "LimitApprox":
        fixed = frozenset(A)
        return cls(lambda s: fixed, {n: 0 for n in fixed})

    @classmethod
    def switching(cls, before: Iterable[int], after: Iterable[int], at: int) -> "LimitApprox":
        """``A_s = before`` for ``s < at`` and ``after`` from then on."""
        b, a = frozenset(before), frozenset(after)
        return cls(lambda s: b if s < at else a, {n: at for n in a | b})


def coarse_from_limit(L: LimitApprox, n: int) -> int:
    """Membership of ``n`` in the computable set ``C`` built from ``L``.

    ``n ∈ C`` iff ``r_index(n) ∈ A_n``: the approximation is consulted at
    the stage equal to the queried number. ``C(0) = 0``.
    """
    if n == 0:
        return 0
    return int(r_index(n) in L(n))


def coarse_prefix(L: LimitApprox, bound: int) -> NatSetPrefix:
    """``C ∩ [0, bound)`` for the set of :func:`coarse_from_limit`."""
    idx = r_index_array(bound)
    bits = np.zeros(bound, dtype=bool)
    for m in range(1, bound):
        bits[m] = idx[m] in L(m)
    return NatSetPrefix(bits)


def decode_from_coarse(C, n: int, s: int) -> int:
    """1 iff ``ρ_s(C ∩ R_n) >= 2^-(n+1) / 2``.

    Stabilises to ``A(n)`` as ``s`` grows whenever ``C`` is generically
    similar to ``𝓡(A)``.
    """
    if s < 1:
        raise ValueError("stage must be >= 1")
    pred = as_predicate(C)
    hits = 0
    x = 0
    while True:
        m = f_enum(n, x)
        if m > s:
            break
        if pred(m):
            hits += 1
        x += 1
    # hits / (s+1) >= 2^-(n+2)
    return int(hits << (n + 2) >= s + 1)


def limit_from_coarse(C) -> LimitApprox:
    """``A_s = {n <= s : decode_from_coarse(C, n, s) = 1}``."""
    return LimitApprox(lambda s: {n for n in range(s + 1) if decode_from_coarse(C, n, s)})


@dataclass(frozen=True)
class SimilarityReport:
    samples: tuple[tuple[int, Fraction], ...]
    nonincreasing_tail: bool
    below_threshold: bool

    @property
    def looks_similar(self) -> bool:
        return self.nonincreasing_tail and self.below_threshold

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "symdiff_num", "symdiff_den"])
        for n, rho in self.samples:
            w.writerow([n, rho.numerator, rho.denominator])
        return buf.getvalue()


def generic_similarity_verdict(
    A: NatSetPrefix,
    B: NatSetPrefix,
    sample_points: Sequence[int],
    threshold: Fraction = Fraction(1, 100),
    within: NatSetPrefix | None = None,
) -> SimilarityReport:
    """Sampled ``ρ_n(A △ B)``, optionally restricted to ``within``.

    Evidence only: the tail flag says the second half of the samples never
    increases, the threshold flag that the last sample is ``<= threshold``.
    """
    diff = A ^ B
    if within is not None:
        diff = diff & within
    samples = []
    for n in sample_points:
        A._check(n)
        B._check(n)
        samples.append((n, prefix_density(diff, n)))
    tail = [rho for _, rho in samples[len(samples) // 2 :]]
    nonincreasing = all(b <= a for a, b in zip(tail, tail[1:]))
    below = bool(samples) and samples[-1][1] <= threshold
    return SimilarityReport(tuple(samples), nonincreasing, below)


__all__ = [
    "SetStream",
    "PairDecider",
    "generic_from_pair",
    "densely_approximable_report",
    "LimitApprox",
    "coarse_from_limit",
    "coarse_prefix",
    "decode_from_coarse",
    "limit_from_coarse",
    "SimilarityReport",
    "generic_similarity_verdict",
    "symdiff_density",
]
