"""Stage-by-stage simulators for the effective constructions.

Every builder returns a :class:`ConstructionState` carrying the enumerated
sets, restraint histories, requirement flags and an event log, so the
finite-stage invariants can be checked from the outside. A run is a pure
function of ``(universe, stages)``; slices are processed in increasing
``e`` at each stage.

Stage convention: the step from stage ``s`` to ``s + 1`` consults
``W_{e,s+1}`` (see :func:`densitylab.machines.in_w`), so after ``stages``
steps the state is the stage-``stages`` state.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .density import NatSetPrefix
from .errors import InvariantViolation
from .machines import MachineUniverse, in_w, unpair
from .partition import f_enum, r_index, slice_position

TRACE_HEADER = ("stage", "slice", "event", "value", "restraint")


class _Bits:
    """Growable bit array indexed by position inside one slice ``R_e``."""

    __slots__ = ("data",)

    def __init__(self, size: int = 64):
        self.data = np.zeros(size, dtype=bool)

    def _ensure(self, i: int) -> None:
        if i >= self.data.size:
            new = np.zeros(max(2 * self.data.size, i + 1), dtype=bool)
            new[: self.data.size] = self.data
            self.data = new

    def __getitem__(self, i: int) -> bool:
        return i < self.data.size and bool(self.data[i])

    def set(self, i: int) -> None:
        self._ensure(i)
        self.data[i] = True

    def set_upto(self, i: int) -> None:
        self._ensure(i)
        self.data[: i + 1] = True

    def count_upto(self, i: int) -> int:
        return int(np.count_nonzero(self.data[: i + 1]))

    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.data)


class EnumeratedSet:
    """A finite set built by a construction, stored slice by slice.

    Elements of ``R_e`` live as bits at their position inside ``R_e``;
    anything else (including 0) sits in a plain set.
    """

    def __init__(self):
        self.by_slice: dict[int, _Bits] = {}
        self.loose: set[int] = set()

    def slice_bits(self, e: int) -> _Bits:
        b = self.by_slice.get(e)
        if b is None:
            b = self.by_slice[e] = _Bits()
        return b

    def add(self, m: int) -> None:
        if m == 0:
            self.loose.add(0)
        else:
            k, x = slice_position(m)
            self.slice_bits(k).set(x)

    def __contains__(self, m: int) -> bool:
        if m == 0:
            return 0 in self.loose
        k, x = slice_position(m)
        b = self.by_slice.get(k)
        return (b is not None and b[x]) or m in self.loose

    def elements(self) -> list[int]:
        out = set(self.loose)
        for k, b in self.by_slice.items():
            out.update(((2 * int(x) + 1) << k) for x in b.positions())
        return sorted(out)

    def __len__(self) -> int:
        return len(self.loose) + sum(int(b.data.sum()) for b in self.by_slice.values())

    def prefix(self, bound: int) -> NatSetPrefix:
        bits = np.zeros(bound, dtype=bool)
        for m in self.loose:
            if m < bound:
                bits[m] = True
        for k, b in self.by_slice.items():
            if (1 << k) >= bound:
                continue
            pos = b.positions()
            elems = (2 * pos + 1) << k
            bits[elems[elems < bound]] = True
        return NatSetPrefix(bits)

    def slice_elements(self, e: int) -> list[int]:
        b = self.by_slice.get(e)
        if b is None:
            return []
        return [f_enum(e, int(x)) for x in b.positions()]


@dataclass
class JumpRecord:
    """One restraint increase on slice ``e``.

    ``witness`` counts the elements of ``R_e↾old`` that the opponent supplied
    (``W_e`` for the density-one construction, ``Φ_e^{-1}(1) △ A_1`` for the
    pair construction). ``covered_after`` counts elements of ``R_e↾new``
    already enumerated once the restraint moved.
    """

    stage: int
    slice: int
    old: int
    new: int
    old_size: int
    witness: int
    new_size: int
    covered_after: int


@dataclass
class ConstructionState:
    kind: str
    stage: int = 0
    machines: int = 0
    sets: dict[str, EnumeratedSet] = field(default_factory=dict)
    restraints: dict[int, int] = field(default_factory=dict)
    restraint_history: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    met: dict[str, bool] = field(default_factory=dict)
    events: list[tuple[int, int, str, int, int]] = field(default_factory=list)
    jumps: list[JumpRecord] = field(default_factory=list)

    def prefix(self, name: str, bound: int) -> NatSetPrefix:
        return self.sets[name].prefix(bound)

    def set_restraint(self, e: int, value: int, stage: int) -> None:
        self.restraints[e] = value
        self.restraint_history.setdefault(e, []).append((stage, value))

    def log(self, stage: int, e: int, event: str, value: int, restraint: int = 0) -> None:
        self.events.append((stage, e, event, value, restraint))

    def jumps_for(self, e: int) -> list[JumpRecord]:
        return [j for j in self.jumps if j.slice == e]


@dataclass(frozen=True)
class RationalSeq:
    """A computable sequence ``n -> q_n`` with every value strictly inside (0, 1)."""

    fn: Callable[[int], Fraction]
    label: str = ""

    def __call__(self, n: int) -> Fraction:
        q = Fraction(self.fn(n))
        if not 0 < q < 1:
            raise ValueError(f"q_{n} = {q} is not strictly between 0 and 1")
        return q

    @classmethod
    def constant(cls, q) -> "RationalSeq":
        q = Fraction(q)
        if not 0 < q < 1:
            raise ValueError(f"{q} is not strictly between 0 and 1")
        return cls(lambda n: q, f"const:{q}")

    @classmethod
    def decimal_truncations(cls, r) -> "RationalSeq":
        """``q_n = floor(10^n r) / 10^n``."""
        r = Fraction(r)
        return cls(lambda n: Fraction(math.floor(r * 10**n), 10**n), f"dec:{r}")

    @classmethod
    def parse(cls, text: str) -> "RationalSeq":
        kind, _, arg = text.partition(":")
        if kind == "const":
            return cls.constant(Fraction(arg))
        if kind in ("dec", "trunc"):
            return cls.decimal_truncations(Fraction(arg))
        raise ValueError(f"unknown sequence {text!r}; use const:p/q or dec:p/q")


# simple set of density zero

def simple_density0(
    universe: MachineUniverse, stages: int, machines: int = 64, log_events: bool = True
) -> ConstructionState:
    """For each ``e``, the first number ``> e²`` to show up in ``W_e`` enters ``A``.

    Ties within a stage go to the least number.
    """
    st = ConstructionState("simple", machines=machines)
    A = st.sets["A"] = EnumeratedSet()
    # each requirement's first hit is the least (entry stage, x) over x > e²
    hits: dict[int, list[tuple[int, int, int]]] = {}
    for e in range(machines):
        st.met[f"e{e}"] = False
        best = None
        for x in range(e * e + 1, stages):
            if best is not None and x + 1 > best[0]:
                break
            s = universe.entry_stage(e, x, stages if best is None else best[0])
            if s is not None and (best is None or (s, x) < best):
                best = (s, x)
        if best is not None:
            hits.setdefault(best[0], []).append((e, best[1], best[0]))
    for s in range(1, stages + 1):
        for e, x, _ in sorted(hits.get(s, ())):
            A.add(x)
            st.met[f"e{e}"] = True
            st.log(s, e, "enter", x, e * e)
        st.stage = s
    return st


# A = union of W_e ∩ R_e

def diag_not_coarse(
    universe: MachineUniverse, stages: int, machines: int = 64, log_events: bool = True
) -> ConstructionState:
    st = ConstructionState("diag", machines=machines)
    A = st.sets["A"] = EnumeratedSet()
    entries: dict[int, list[tuple[int, int]]] = {}
    for e in range(machines):
        start = 1 << e
        for x in range(start, stages, 2 * start):
            s = universe.entry_stage(e, x, stages)
            if s is not None:
                entries.setdefault(s, []).append((e, x))
    for s in range(1, stages + 1):
        for e, x in sorted(entries.get(s, ())):
            A.add(x)
            if log_events:
                st.log(s, e, "enter", x)
        st.stage = s
    return st


def _least_half_restraint(bits: _Bits, above: int) -> int:
    """Least position ``j > above`` with at most half of positions ``0..j`` set."""
    data = bits.data
    cum = np.cumsum(data, dtype=np.int64)
    j = np.arange(data.size)
    ok = (2 * cum <= j + 1) & (j > above)
    hits = np.flatnonzero(ok)
    if hits.size:
        return int(hits[0])
    total = int(cum[-1]) if data.size else 0
    return max(data.size, 2 * total - 1, above + 1)


class _SliceState:
    __slots__ = ("r", "fill", "add")

    def __init__(self):
        self.r = 0  # restraint, as a position inside R_e
        self.fill = 0  # positions below this are known covered
        self.add = 1  # next candidate position above the restraint


# density-one c.e. set with no computable density-one subset

def density1_no_computable_subset(
    universe: MachineUniverse, stages: int, machines: int = 64, log_events: bool = True
) -> ConstructionState:
    """Each slice fills ``R_e`` above its restraint one element per stage and
    dumps ``R_e↾r`` once ``W_e ∪ A`` covers it, then moves the restraint to
    the least value keeping ``A`` at density at most 1/2 below it.
    """
    st = ConstructionState("density1", machines=machines)
    A = st.sets["A"] = EnumeratedSet()
    slices: dict[int, _SliceState] = {}
    for e in range(machines):
        slices[e] = _SliceState()
        st.set_restraint(e, f_enum(e, 0), 0)
        st.met[f"P{e}"] = True
    for s in range(stages):
        fuel = s + 1
        for e in range(min(machines, s + 1)):
            sl = slices[e]
            bits = A.slice_bits(e)
            r = sl.r
            while sl.fill <= r:
                m = f_enum(e, sl.fill)
                if bits[sl.fill] or in_w(universe, e, m, fuel):
                    sl.fill += 1
                else:
                    break
            if sl.fill <= r:
                j = max(sl.add, r + 1)
                while bits[j]:
                    j += 1
                bits.set(j)
                sl.add = j + 1
                if log_events:
                    st.log(s + 1, e, "enter", f_enum(e, j), f_enum(e, r))
                continue
            witness = sum(
                1 for i in range(r + 1) if in_w(universe, e, f_enum(e, i), fuel)
            )
            bits.set_upto(r)
            new_r = _least_half_restraint(bits, r)
            rec = JumpRecord(
                stage=s + 1, slice=e, old=f_enum(e, r), new=f_enum(e, new_r),
                old_size=r + 1, witness=witness,
                new_size=new_r + 1, covered_after=bits.count_upto(new_r),
            )
            st.jumps.append(rec)
            sl.r = new_r
            sl.add = new_r + 1
            st.log(s + 1, e, "dump", rec.old, rec.old)
            st.log(s + 1, e, "jump", rec.new, rec.new)
            st.set_restraint(e, rec.new, s + 1)
        st.stage = s + 1
    return st


# generically computable pair whose A_1 is not coarsely computable

def generic_not_coarse_pair(
    universe: MachineUniverse, stages: int, machines: int = 64, log_events: bool = True
) -> ConstructionState:
    """Once ``Φ_{e,s+1}`` converges on all of ``R_e↾r``, the untouched part of
    that interval goes to ``A_0`` where ``Φ_e`` says 1 and to ``A_1``
    elsewhere; otherwise the least new element above ``r`` goes to ``A_1``.
    """
    st = ConstructionState("genpair", machines=machines)
    A0 = st.sets["A0"] = EnumeratedSet()
    A1 = st.sets["A1"] = EnumeratedSet()
    cover: dict[int, _Bits] = {}
    slices: dict[int, _SliceState] = {}
    for e in range(machines):
        slices[e] = _SliceState()
        cover[e] = _Bits()
        st.set_restraint(e, f_enum(e, 0), 0)
    for s in range(stages):
        fuel = s + 1
        for e in range(min(machines, s + 1)):
            sl = slices[e]
            cov = cover[e]
            b0, b1 = A0.slice_bits(e), A1.slice_bits(e)
            r = sl.r
            while sl.fill <= r and in_w(universe, e, f_enum(e, sl.fill), fuel):
                sl.fill += 1
            if sl.fill <= r:
                j = max(sl.add, r + 1)
                while b1[j]:
                    j += 1
                if b0[j]:
                    raise InvariantViolation(f"{f_enum(e, j)} already in A0")
                b1.set(j)
                cov.set(j)
                sl.add = j + 1
                if log_events:
                    st.log(s + 1, e, "enter1", f_enum(e, j), f_enum(e, r))
                continue
            ones = []
            for i in range(r + 1):
                m = f_enum(e, i)
                is_one = universe.eval(e, m, fuel).value == 1
                ones.append(is_one)
                if cov[i]:
                    continue
                cov.set(i)
                if is_one:
                    b0.set(i)
                    if log_events:
                        st.log(s + 1, e, "split0", m, f_enum(e, r))
                else:
                    b1.set(i)
                    if log_events:
                        st.log(s + 1, e, "split1", m, f_enum(e, r))
            witness = sum(1 for i in range(r + 1) if ones[i] != b1[i])
            new_r = _least_half_restraint(cov, r)
            rec = JumpRecord(
                stage=s + 1, slice=e, old=f_enum(e, r), new=f_enum(e, new_r),
                old_size=r + 1, witness=witness,
                new_size=new_r + 1, covered_after=cov.count_upto(new_r),
            )
            st.jumps.append(rec)
            sl.r = new_r
            sl.add = new_r + 1
            st.log(s + 1, e, "jump", rec.new, rec.new)
            st.set_restraint(e, rec.new, s + 1)
        st.stage = s + 1
    return st


# interval diagonalization against a time bound f

def interval_diagonalization(
    f: Callable[[int], int], universe: MachineUniverse, j_max: int, machines: int = 64
) -> ConstructionState:
    """Decide ``B`` on ``[2^j, 2^(j+1))`` for ``j = 0 .. j_max``.

    ``P_{e,k}`` (code ``⟨e,k⟩``) requires attention at ``j`` when unmet,
    ``j >= k`` and ``Φ_{e,f(j)}`` converges on the whole interval. The least
    code ``<= j`` requiring attention makes ``B`` disagree with ``Φ_e`` on
    the interval; otherwise ``B`` is empty there. ``0 ∉ B``.
    """
    st = ConstructionState("interval", machines=machines)
    B = st.sets["B"] = EnumeratedSet()
    for j in range(j_max + 1):
        lo, hi = 1 << j, 1 << (j + 1)
        fuel = f(j)
        chosen = None
        for code in range(j + 1):
            e, k = unpair(code)
            if e >= machines or k > j or st.met.get(f"P{e},{k}"):
                continue
            if all(universe.eval(e, x, fuel).converged for x in range(lo, hi)):
                chosen = (code, e, k)
                break
        if chosen is None:
            st.log(j, -1, "empty", lo, 0)
            continue
        code, e, k = chosen
        for x in range(lo, hi):
            if universe.eval(e, x, fuel).value == 0:
                B.add(x)
        st.met[f"P{e},{k}"] = True
        st.log(j, e, "attention", k, code)
    st.stage = j_max + 1
    return st


# computable set with a prescribed Delta^0_2 density

def delta02_density_set(q: RationalSeq, steps: int) -> tuple[NatSetPrefix, list[int]]:
    """Build ``A`` and ``s_1 < s_2 < ...`` with ``|ρ_{s_n}(A) - q_n| <= 1/n``.

    ``s_1 = 1`` with ``0 ∈ A``. Each step appends the least number of members
    that lifts the running fraction to ``q_{n+1}`` or above, or the least
    number of non-members that drops it below ``q_{n+1}``. Returns the prefix
    ``A ∩ [0, s_steps]`` and the list ``[s_1, ..., s_steps]``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    runs: list[tuple[bool, int]] = [(True, 1), (False, 1)]
    s, count = 1, 1
    trace = [s]
    for n in range(1, steps):
        target = q(n + 1)
        if Fraction(count, s + 1) < target:
            # least k with (count + k) / (s + k + 1) >= target
            k = max(1, math.ceil((target * (s + 1) - count) / (1 - target)))
            runs.append((True, k))
            count += k
        else:
            # least k with count / (s + k + 1) < target
            k = max(1, math.floor(count / target - s - 1) + 1)
            runs.append((False, k))
        s += k
        trace.append(s)
    bits = np.concatenate([np.full(n, v, dtype=bool) for v, n in runs])
    return NatSetPrefix(bits), trace


# traces

def trace_rows(state: ConstructionState) -> list[tuple]:
    return list(state.events)


def trace_export(state: ConstructionState) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    w.writerows(state.events)
    return buf.getvalue()


# invariant checks

def check_invariants(state: ConstructionState, universe: MachineUniverse | None = None) -> list[str]:
    """Finite-stage invariants of a finished run; returns the violations found."""
    problems: list[str] = []
    for e, hist in state.restraint_history.items():
        vals = [v for _, v in hist]
        if any(b < a for a, b in zip(vals, vals[1:])):
            problems.append(f"restraint of slice {e} decreased")
    if state.kind in ("density1", "genpair", "diag"):
        for stage, e, event, value, _ in state.events:
            if e >= 0 and value and r_index(value) != e:
                problems.append(f"slice {e} touched {value} outside R_{e}")
                break
    if state.kind == "diag" and universe is not None:
        A = state.sets["A"]
        for e in range(min(state.machines, state.stage + 1)):
            start = 1 << e
            if start >= state.stage:
                break
            want = [m for m in range(start, state.stage, 2 * start)
                    if in_w(universe, e, m, state.stage)]
            if A.slice_elements(e) != want:
                problems.append(f"A ∩ R_{e} differs from W_{{{e},{state.stage}}} ∩ R_{e}")
    if state.kind == "simple":
        elems = state.sets["A"].elements()
        top = math.isqrt(elems[-1]) + 2 if elems else 1
        for e in range(top):
            if sum(1 for m in elems if m < e * e) > e:
                problems.append(f"more than {e} elements below {e * e}")
    if state.kind == "density1":
        for j in state.jumps:
            if 2 * j.witness < j.old_size:
                problems.append(f"slice {j.slice} jump at {j.stage}: W supplied under half")
            if 2 * j.covered_after > j.new_size:
                problems.append(f"slice {j.slice} jump at {j.stage}: A above half below new restraint")
    if state.kind == "genpair":
        A0, A1 = state.sets["A0"], state.sets["A1"]
        for e, b0 in A0.by_slice.items():
            b1 = A1.by_slice.get(e)
            if b1 is None:
                continue
            n = min(b0.data.size, b1.data.size)
            if np.any(b0.data[:n] & b1.data[:n]):
                problems.append(f"A0 and A1 meet on slice {e}")
        for j in state.jumps:
            if 2 * j.witness < j.old_size:
                problems.append(f"slice {j.slice} jump at {j.stage}: symmetric difference under half")
    if state.kind == "interval":
        seen = set()
        for _, e, event, k, code in state.events:
            if event == "attention":
                if code in seen:
                    problems.append(f"P{e},{k} received attention twice")
                seen.add(code)
    return problems


def verify(state: ConstructionState, universe: MachineUniverse | None = None) -> None:
    problems = check_invariants(state, universe)
    if problems:
        raise InvariantViolation("; ".join(problems))


CONSTRUCTIONS = {
    "simple": simple_density0,
    "diag": diag_not_coarse,
    "density1": density1_no_computable_subset,
    "genpair": generic_not_coarse_pair,
}
