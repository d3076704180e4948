"""Enumeration operators, graph codes, joins and the slice reductions between them.

An operator is a set of axioms ``(n, D)`` with ``D`` a finite set; it sends
``X`` to ``{n : some axiom (n, D) has D ⊆ X}``. Finite sets travel as
canonical indices ``Σ_{k∈D} 2^k``.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

import numpy as np

from .density import NatSetPrefix, as_predicate
from .errors import BudgetExceeded, FormatError, NotAFunctionError
from .machines import Program, pair, run_program, unpair
from .partition import (
    DEFAULT_DECODE_BUDGET,
    GenericListing,
    decode_R,
    f_enum,
    r_index,
)

DEFAULT_WIDTH = 4096


def canonical_index(D: Iterable[int]) -> int:
    idx = 0
    for k in set(D):
        if k < 0:
            raise ValueError("canonical indices code sets of naturals")
        idx |= 1 << k
    return idx


def decode_canonical(index: int, width: int = DEFAULT_WIDTH) -> frozenset[int]:
    """The finite set with canonical index ``index``.

    Indices wider than ``width`` bits are rejected rather than truncated.
    """
    if index < 0:
        raise FormatError(f"negative canonical index {index}")
    if index.bit_length() > width:
        raise FormatError(f"canonical index needs {index.bit_length()} bits, limit is {width}")
    out = []
    k = 0
    while index:
        if index & 1:
            out.append(k)
        index >>= 1
        k += 1
    return frozenset(out)


def _minimal(axioms: Iterable[tuple[int, frozenset[int]]]) -> list[tuple[int, frozenset[int]]]:
    """Drop axioms whose premise contains another premise for the same output."""
    by_n: dict[int, list[frozenset[int]]] = {}
    for n, D in axioms:
        by_n.setdefault(n, []).append(D)
    out = []
    for n in sorted(by_n):
        kept: list[frozenset[int]] = []
        for D in sorted(set(by_n[n]), key=lambda d: (len(d), sorted(d))):
            if not any(K <= D for K in kept):
                kept.append(D)
        out.extend((n, D) for D in kept)
    return out


class EnumOperator:
    """A finite enumeration operator.

    ``truncated`` is set on operators built by a search that hit its bound;
    such an operator is sound (every axiom is valid) but may be missing axioms.
    """

    def __init__(self, axioms: Iterable[tuple[int, Iterable[int]]] = (), truncated: bool = False):
        norm = set()
        for n, D in axioms:
            if n < 0:
                raise FormatError(f"axiom output {n} is negative")
            D = frozenset(D)
            if any(d < 0 for d in D):
                raise FormatError(f"axiom premise {sorted(D)} has a negative element")
            norm.add((int(n), D))
        self.axioms: tuple[tuple[int, frozenset[int]], ...] = tuple(
            sorted(norm, key=lambda a: (a[0], len(a[1]), sorted(a[1])))
        )
        self.truncated = truncated

    @classmethod
    def from_indices(cls, pairs: Iterable[tuple[int, int]], width: int = DEFAULT_WIDTH) -> "EnumOperator":
        return cls((n, decode_canonical(i, width)) for n, i in pairs)

    @classmethod
    def identity(cls, bound: int) -> "EnumOperator":
        return cls((n, {n}) for n in range(bound))

    @property
    def indices(self) -> list[tuple[int, int]]:
        return [(n, canonical_index(D)) for n, D in self.axioms]

    def minimised(self) -> "EnumOperator":
        return EnumOperator(_minimal(self.axioms), self.truncated)

    def __len__(self) -> int:
        return len(self.axioms)

    def __eq__(self, other) -> bool:
        return isinstance(other, EnumOperator) and self.axioms == other.axioms

    def __hash__(self) -> int:
        return hash(self.axioms)

    def __repr__(self) -> str:
        body = ", ".join(f"({n}, {sorted(D)})" for n, D in self.axioms[:6])
        more = ", ..." if len(self.axioms) > 6 else ""
        return f"EnumOperator([{body}{more}])"

    def __call__(self, X, budget: int | None = None) -> frozenset[int]:
        return apply(self, X, budget)

    def to_text(self, width: int = DEFAULT_WIDTH) -> str:
        lines = []
        for n, D in self.axioms:
            idx = canonical_index(D)
            if idx.bit_length() > width:
                raise FormatError(f"axiom for {n} needs {idx.bit_length()} bits, limit is {width}")
            lines.append(f"{n}:{idx}")
        return "\n".join(lines) + ("\n" if lines else "")


def parse_operator(text: str, width: int = DEFAULT_WIDTH) -> EnumOperator:
    """Read ``n:index`` lines; blank lines and ``#`` comments are skipped."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            n_text, i_text = line.split(":")
            pairs.append((int(n_text), int(i_text)))
        except ValueError:
            raise FormatError(f"line {lineno}: expected n:index, got {raw!r}") from None
    return EnumOperator.from_indices(pairs, width)


def load_operator(path, width: int = DEFAULT_WIDTH) -> EnumOperator:
    with open(path, encoding="utf-8") as fh:
        return parse_operator(fh.read(), width)


def apply(W: EnumOperator, X, budget: int | None = None) -> frozenset[int]:
    """``W(X)`` with ``X`` given by membership.

    ``budget`` caps the number of axioms examined; running out raises
    :class:`BudgetExceeded`.
    """
    pred = as_predicate(X)
    out = set()
    for used, (n, D) in enumerate(W.axioms):
        if budget is not None and used >= budget:
            raise BudgetExceeded(f"{len(W.axioms) - used} axioms left unexamined", used)
        if n not in out and all(pred(d) for d in D):
            out.add(n)
    return frozenset(out)


def apply_stream(
    W: EnumOperator | Iterable[tuple[int, Iterable[int]]],
    X: Iterable[int],
    budget: int | None = None,
) -> Iterator[int]:
    """Enumerate ``W(X)`` from an enumeration of ``X``.

    Each output appears once, as soon as the last element of some premise
    has been enumerated. ``budget`` caps how many elements of ``X`` are read.
    """
    axioms = W.axioms if isinstance(W, EnumOperator) else [(n, frozenset(D)) for n, D in W]
    emitted = set()
    waiting: dict[int, list[int]] = {}
    missing = []
    for i, (n, D) in enumerate(axioms):
        missing.append(len(D))
        if not D:
            if n not in emitted:
                emitted.add(n)
                yield n
            continue
        for d in D:
            waiting.setdefault(d, []).append(i)
    seen = set()
    for read, x in enumerate(X):
        if budget is not None and read >= budget:
            return
        if x in seen:
            continue
        seen.add(x)
        for i in waiting.pop(x, ()):
            missing[i] -= 1
            n = axioms[i][0]
            if missing[i] == 0 and n not in emitted:
                emitted.add(n)
                yield n


def compose(V: EnumOperator, W: EnumOperator, bound: int = 100_000) -> EnumOperator:
    """An operator ``U`` with ``U(X) = V(W(X))``.

    Each ``V``-axiom ``(n, D)`` is combined with one ``W``-axiom for every
    element of ``D``; the union of their premises is a premise for ``n``.
    At most ``bound`` combinations are tried. When that is not enough the
    result carries ``truncated = True`` and may be missing axioms.
    """
    premises: dict[int, list[frozenset[int]]] = {}
    for m, E in W.minimised().axioms:
        premises.setdefault(m, []).append(E)
    out = []
    tried = 0
    truncated = False
    for n, D in V.minimised().axioms:
        choices = [premises.get(d) for d in sorted(D)]
        if any(c is None for c in choices):
            continue
        for combo in itertools.product(*choices):
            if tried >= bound:
                truncated = True
                break
            tried += 1
            out.append((n, frozenset().union(*combo)))
        if truncated:
            break
    return EnumOperator(_minimal(out), truncated)


# graph codes

def graph_code(p: Iterable[tuple[int, int]]) -> frozenset[int]:
    """``{⟨a, b⟩}`` for a single-valued list of pairs."""
    seen: dict[int, int] = {}
    for a, b in p:
        prev = seen.setdefault(a, b)
        if prev != b:
            raise NotAFunctionError(f"{a} maps to both {prev} and {b}")
    return frozenset(pair(a, b) for a, b in seen.items())


def graph_decode(codes: Iterable[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for c in codes:
        a, b = unpair(c)
        prev = out.setdefault(a, b)
        if prev != b:
            raise NotAFunctionError(f"{a} maps to both {prev} and {b}")
    return dict(sorted(out.items()))


def listing_codes(G: Iterable[tuple[int, int]]) -> Iterator[int]:
    for a, b in G:
        yield pair(a, b)


def apply_to_listing(W: EnumOperator, G: Iterable[tuple[int, int]], budget: int | None = None) -> GenericListing:
    """Run ``W`` on the graph code of a listing and decode the output graph."""
    outputs = tuple(apply_stream(W, listing_codes(G), budget))
    return GenericListing(tuple(unpair(c) for c in outputs))


# joins and slice codings

def join(A, B, bound: int) -> NatSetPrefix:
    """Prefix of ``A ⊕ B = {2n : n ∈ A} ∪ {2n+1 : n ∈ B}`` below ``bound``."""
    pa, pb = as_predicate(A), as_predicate(B)
    bits = np.zeros(bound, dtype=bool)
    for m in range(bound):
        bits[m] = pb(m >> 1) if m & 1 else pa(m >> 1)
    return NatSetPrefix(bits)


def unjoin(J: NatSetPrefix) -> tuple[NatSetPrefix, NatSetPrefix]:
    bits = J.bits
    return NatSetPrefix(bits[0::2].copy()), NatSetPrefix(bits[1::2].copy())


def upper_bound_encode(sets: Sequence, bound: int) -> NatSetPrefix:
    """Prefix of ``B = ⋃_n f_n(A_n)``: ``B(f_enum(n, x)) = A_n(x)``.

    Slices past the end of ``sets`` and the point 0 stay empty.
    """
    bits = np.zeros(bound, dtype=bool)
    for n, source in enumerate(sets):
        start = 1 << n
        if start >= bound:
            break
        pred = as_predicate(source)
        for x, m in enumerate(range(start, bound, 2 * start)):
            bits[m] = bool(pred(x))
    return NatSetPrefix(bits)


def slice_reduction_operator(n: int, bound: int) -> EnumOperator:
    """Axioms ``(⟨x, b⟩, {⟨f_enum(n, x), b⟩})`` for ``x < bound`` and ``b ∈ {0, 1}``.

    On the graph of a generic description of ``upper_bound_encode(...)`` it
    outputs the graph of one for the ``n``-th set.
    """
    return EnumOperator(
        (pair(x, b), {pair(f_enum(n, x), b)}) for x in range(bound) for b in (0, 1)
    )


def R_embedding_forward(
    program: Program,
    listing: GenericListing,
    bound: int,
    budget: int = DEFAULT_DECODE_BUDGET,
    fuel: int = 100_000,
) -> GenericListing:
    """A total listing of ``𝓡(A)`` on ``[0, bound)`` from a listing of ``𝓡(B)``.

    ``program`` decides ``A`` with oracle ``B``: its output is read as 0 for
    "out" and anything else for "in". Each ``B(k)`` the program asks for is
    decoded from ``listing``. Raises :class:`BudgetExceeded` when the listing
    or the fuel runs out first.
    """
    B: dict[int, int] = {}

    def oracle(k: int) -> bool:
        if k not in B:
            B[k] = decode_R(listing, k, budget)
        return bool(B[k])

    A: dict[int, int] = {}
    pairs = [(0, 0)] if bound > 0 else []
    for m in range(1, bound):
        k = r_index(m)
        if k not in A:
            res = run_program(program, k, fuel, oracle)
            if not res.converged:
                raise BudgetExceeded(f"oracle program did not halt on {k} within {fuel} steps", fuel)
            A[k] = int(res.value != 0)
        pairs.append((m, A[k]))
    return GenericListing(tuple(pairs))


__all__ = [
    "DEFAULT_WIDTH",
    "canonical_index",
    "decode_canonical",
    "EnumOperator",
    "parse_operator",
    "load_operator",
    "apply",
    "apply_stream",
    "compose",
    "graph_code",
    "graph_decode",
    "listing_codes",
    "apply_to_listing",
    "join",
    "unjoin",
    "upper_bound_encode",
    "slice_reduction_operator",
    "R_embedding_forward",
]
