"""A fuel-bounded register machine universe.

Programs are lists of five instruction kinds::

    INC r        r += 1
    DJZ r a      if r == 0: goto a, else r -= 1
    JMP a        goto a
    OUT v        halt with output v
    QRY r        r := oracle(r)   (0 or 1)

The input sits in register 0, every other register starts at 0. Each
executed instruction costs one step. Running past the last instruction
halts with output 0 at no extra cost. Without an oracle, ``QRY`` answers
from the empty set.

Every natural number decodes to a program (see :func:`decode_program`), and
a :class:`MachineUniverse` may shadow finitely many indices with named
adversaries so constructions can be tested against designed opponents.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .density import NatSetPrefix, as_predicate
from .errors import FormatError

OPS = ("INC", "DJZ", "JMP", "OUT", "QRY")


@dataclass(frozen=True)
class Instr:
    op: str
    a: int = 0
    b: int = 0

    def __str__(self) -> str:
        if self.op == "DJZ":
            return f"DJZ {self.a} {self.b}"
        return f"{self.op} {self.a}"


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instr, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.instructions)
        for pc, ins in enumerate(self.instructions):
            if ins.op not in OPS:
                raise FormatError(f"line {pc}: unknown opcode {ins.op!r}")
            if ins.a < 0 or ins.b < 0:
                raise FormatError(f"line {pc}: negative operand")
            target = ins.b if ins.op == "DJZ" else ins.a if ins.op == "JMP" else None
            if target is not None and target >= n:
                raise FormatError(f"line {pc}: jump target {target} out of range")

    @property
    def register_count(self) -> int:
        regs = [i.a for i in self.instructions if i.op in ("INC", "DJZ", "QRY")]
        return max(regs, default=0) + 1

    @property
    def uses_oracle(self) -> bool:
        return any(i.op == "QRY" for i in self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def to_text(self) -> str:
        return "".join(f"{ins}\n" for ins in self.instructions)


def parse_program(text: str, name: str = "") -> Program:
    """Parse the one-instruction-per-line text format. ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0].upper()
        want = 2 if op == "DJZ" else 1
        if op not in OPS:
            raise FormatError(f"line {lineno}: unknown opcode {parts[0]!r}")
        if len(parts) != want + 1:
            raise FormatError(f"line {lineno}: {op} takes {want} operand(s)")
        try:
            args = [int(p) for p in parts[1:]]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: operands must be integers") from exc
        out.append(Instr(op, *args))
    return Program(tuple(out), name=name)


def load_program(path) -> Program:
    with open(path) as fh:
        return parse_program(fh.read(), name=str(path))


# numbering

def pair(a: int, b: int) -> int:
    """Cantor pairing ``(a+b)(a+b+1)/2 + b``."""
    return (a + b) * (a + b + 1) // 2 + b


def unpair(z: int) -> tuple[int, int]:
    from math import isqrt

    w = (isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def _decode_sequence(n: int) -> list[int]:
    out = []
    while n > 0:
        head, n = unpair(n - 1)
        out.append(head)
    return out


def _encode_sequence(seq: Sequence[int]) -> int:
    n = 0
    for item in reversed(seq):
        n = pair(item, n) + 1
    return n


def _decode_instr(c: int, length: int) -> Instr:
    if c < length:
        return Instr("JMP", c)
    param, family = divmod(c - length, 4)
    if family == 0:
        return Instr("INC", param)
    if family == 1:
        return Instr("OUT", param)
    if family == 2:
        return Instr("QRY", param)
    reg, addr = divmod(param, length)
    return Instr("DJZ", reg, addr)


def _encode_instr(ins: Instr, length: int) -> int:
    if ins.op == "JMP":
        return ins.a
    if ins.op == "INC":
        family, param = 0, ins.a
    elif ins.op == "OUT":
        family, param = 1, ins.a
    elif ins.op == "QRY":
        family, param = 2, ins.a
    else:
        family, param = 3, ins.a * length + ins.b
    return length + 4 * param + family


def decode_program(n: int) -> Program:
    """The program with index ``n``. Total and bijective onto valid programs."""
    if n < 0:
        raise ValueError("program index must be natural")
    codes = _decode_sequence(n)
    length = len(codes)
    return Program(tuple(_decode_instr(c, length) for c in codes), name=f"#{n}")


def encode_program(p: Program) -> int:
    length = len(p)
    return _encode_sequence([_encode_instr(i, length) for i in p.instructions])


# execution

@dataclass(frozen=True)
class FuelResult:
    value: int | None
    steps: int | None = None

    @property
    def converged(self) -> bool:
        return self.value is not None

    def __repr__(self) -> str:
        return f"converged({self.value})" if self.converged else "out-of-fuel"


OUT_OF_FUEL = FuelResult(None)

_INC, _DJZ, _JMP, _OUT, _QRY = range(5)
_OPCODE = {"INC": _INC, "DJZ": _DJZ, "JMP": _JMP, "OUT": _OUT, "QRY": _QRY}


def _compile(p: Program) -> list[tuple[int, int, int]]:
    return [(_OPCODE[i.op], i.a, i.b) for i in p.instructions]


class _Run:
    """Resumable execution state of one oracle-free computation.

    Besides stepping, it watches arrivals at backward-jump targets. Between
    two arrivals at the same target with no zero branch of a ``DJZ`` and no
    ``QRY`` in between, the loop body is one fixed straight-line segment:

    * if no register shrank over it, the segment replays forever and the
      run is marked divergent;
    * otherwise it is replayed in bulk for as many rounds as every
      decrement in it is sure to succeed.

    Exact repeats of an arrival state are caught too (Brent's cycle
    finding). Step counts and results are those of plain stepping.
    """

    __slots__ = (
        "code", "pc", "regs", "steps", "value", "diverges", "zero_jumps",
        "resets", "last_at", "mark", "mark_age", "power",
    )

    def __init__(self, code, x: int, nregs: int):
        self.code = code
        self.pc = 0
        self.regs = [0] * nregs
        self.regs[0] = x
        self.steps = 0
        self.value = None
        self.diverges = False
        self.zero_jumps = 0
        self.resets = 0
        self.last_at = {}
        self.mark = None
        self.mark_age = 0
        self.power = 1

    def result(self, fuel: int) -> FuelResult:
        if self.value is None and not self.diverges:
            self.advance(fuel)
        if self.value is not None and self.steps <= fuel:
            return FuelResult(self.value, self.steps)
        return OUT_OF_FUEL

    def advance(self, fuel: int) -> None:
        code = self.code
        n = len(code)
        regs = self.regs
        pc = self.pc
        steps = self.steps
        while steps < fuel:
            if pc >= n:
                self.value = 0
                break
            op, a, b = code[pc]
            steps += 1
            if op == _INC:
                regs[a] += 1
                pc += 1
                continue
            if op == _DJZ:
                if regs[a]:
                    regs[a] -= 1
                    pc += 1
                    continue
                self.zero_jumps += 1
                target = b
            elif op == _JMP:
                target = a
            elif op == _OUT:
                self.value = a
                break
            else:
                regs[a] = 0
                self.resets += 1
                pc += 1
                continue
            backward = target <= pc
            pc = target
            if not backward:
                continue
            seg = self._arrive(target, steps)
            if seg < 0:
                break
            if seg:
                self.pc, self.steps = pc, steps
                self._replay(seg, fuel)
                pc, steps = self.pc, self.steps
                if self.value is not None or self.diverges:
                    break
        else:
            if pc >= n and self.value is None:
                self.value = 0
        self.pc = pc
        self.steps = steps

    def _arrive(self, target: int, steps: int) -> int:
        """-1: divergent; k > 0: a segment of length k may be replayed; 0: go on."""
        regs = tuple(self.regs)
        state = (target, regs)
        if state == self.mark:
            self.diverges = True
            return -1
        self.mark_age += 1
        if self.mark_age >= self.power:
            self.mark, self.mark_age, self.power = state, 0, self.power * 2
        prev = self.last_at.get(target)
        self.last_at[target] = (regs, self.zero_jumps, self.resets, steps)
        if prev is None or prev[1] != self.zero_jumps or prev[2] != self.resets:
            return 0
        if all(r >= o for r, o in zip(regs, prev[0])):
            self.diverges = True
            return -1
        return steps - prev[3]

    def _replay(self, seg: int, fuel: int) -> None:
        """Run one traced copy of a loop body of ``seg`` steps, then skip ahead."""
        code = self.code
        regs = self.regs
        start = list(regs)
        low = {}
        pc = self.pc
        target = pc
        steps = self.steps
        for _ in range(seg):
            if steps >= fuel or pc >= len(code):
                break
            op, a, b = code[pc]
            if op == _INC:
                regs[a] += 1
                pc += 1
            elif op == _DJZ and regs[a]:
                off = regs[a] - start[a]
                if off < low.get(a, off + 1):
                    low[a] = off
                regs[a] -= 1
                pc += 1
            elif op == _JMP:
                pc = a
            else:
                # a zero branch, QRY or OUT: leave it to the plain stepper
                break
            steps += 1
        else:
            if pc == target:
                self._skip(start, low, seg, steps, fuel)
                return
        self.pc, self.steps = pc, steps

    def _skip(self, start, low, seg, steps, fuel) -> None:
        regs = self.regs
        delta = [r - s for r, s in zip(regs, start)]
        if all(d >= 0 for d in delta):
            self.steps = steps
            self.diverges = True
            return
        rounds = (fuel - steps) // seg
        for r, d in enumerate(delta):
            if d < 0:
                # round j starts at regs[r] + j*d and needs regs[r] + j*d + low[r] >= 1
                rounds = min(rounds, (regs[r] + low[r] - 1) // -d + 1)
        rounds = max(rounds, 0)
        for r, d in enumerate(delta):
            regs[r] += rounds * d
        self.steps = steps + rounds * seg
        self.last_at.pop(self.pc, None)


def run_program(p: Program, x: int, fuel: int, oracle=None) -> FuelResult:
    """Run ``p`` on ``x`` for at most ``fuel`` steps; no caching, no loop detection."""
    pred = as_predicate(oracle) if oracle is not None else (lambda m: False)
    code = _compile(p)
    n = len(code)
    regs = [0] * p.register_count
    regs[0] = x
    pc = 0
    steps = 0
    while True:
        if pc >= n:
            return FuelResult(0, steps)
        if steps >= fuel:
            return OUT_OF_FUEL
        op, a, b = code[pc]
        steps += 1
        if op == _INC:
            regs[a] += 1
            pc += 1
        elif op == _DJZ:
            if regs[a]:
                regs[a] -= 1
                pc += 1
            else:
                pc = b
        elif op == _JMP:
            pc = a
        elif op == _OUT:
            return FuelResult(a, steps)
        else:
            regs[a] = 1 if pred(regs[a]) else 0
            pc += 1


# named adversaries

def threshold_program(t: int) -> Program:
    """Halts (output 0) iff ``x > t``, after ``t + 2`` steps."""
    lines = [f"DJZ 0 {t + 2}" for _ in range(t + 1)]
    lines += ["OUT 0", f"JMP {t + 2}"]
    return parse_program("\n".join(lines), name=f"above-{t}")


ADVERSARY_TEXT = {
    "diverge": "JMP 0",
    "omega": "OUT 0",
    "zero": "OUT 0",
    "one": "OUT 1",
    # output 1 iff x is even
    "parity": "DJZ 0 3\nDJZ 0 4\nJMP 0\nOUT 1\nOUT 0",
    # halt iff x is even
    "evens-domain": "DJZ 0 3\nDJZ 0 4\nJMP 0\nOUT 0\nJMP 4",
    # halts after about 2x steps: enumerates omega slowly and in order
    "slow-omega": "DJZ 0 2\nJMP 0\nOUT 0",
    # output oracle(x)
    "oracle-identity": "QRY 0\nDJZ 0 3\nOUT 1\nOUT 0",
    "oracle-complement": "QRY 0\nDJZ 0 3\nOUT 0\nOUT 1",
    # output oracle(r_index(x)), i.e. membership in R(oracle); 0 on x = 0
    "r-membership": "\n".join([
        "DJZ 0 13", "INC 0",
        "DJZ 0 6", "DJZ 0 10", "INC 1", "JMP 2",
        "INC 2", "DJZ 1 2", "INC 0", "JMP 7",
        "QRY 2", "DJZ 2 13", "OUT 1", "OUT 0",
    ]),
}


def adversary(name: str) -> Program:
    """A named program. ``above-<t>`` gives :func:`threshold_program`."""
    if name.startswith("above-"):
        return threshold_program(int(name.split("-", 1)[1]))
    try:
        return parse_program(ADVERSARY_TEXT[name], name=name)
    except KeyError:
        raise KeyError(f"unknown adversary {name!r}") from None


STANDARD_LAYOUT = {
    0: "diverge",
    1: "omega",
    2: "one",
    3: "evens-domain",
    4: "parity",
    5: "omega",
    6: "above-25",
    7: "slow-omega",
    8: "r-membership",
    9: "oracle-identity",
    10: "oracle-complement",
}


class MachineUniverse:
    """The numbering ``e -> Φ_e`` plus an override table of named programs.

    Oracle-free evaluations are memoised per ``(e, x)`` as resumable runs, so
    asking for ``Φ_{e,s}(x)`` at increasing ``s`` costs only the new steps.
    """

    def __init__(self, overrides: Mapping[int, Program | str] | None = None):
        self.overrides: dict[int, Program] = {}
        for e, p in (overrides or {}).items():
            self.overrides[int(e)] = adversary(p) if isinstance(p, str) else p
        self._programs: dict[int, Program] = {}
        self._compiled: dict[int, tuple] = {}
        self._runs: dict[tuple[int, int], object] = {}

    @classmethod
    def standard(cls, extra: Mapping[int, Program | str] | None = None) -> "MachineUniverse":
        layout: dict[int, Program | str] = dict(STANDARD_LAYOUT)
        layout.update(extra or {})
        return cls(layout)

    def program(self, e: int) -> Program:
        p = self._programs.get(e)
        if p is None:
            p = self.overrides.get(e) or decode_program(e)
            self._programs[e] = p
        return p

    def _code(self, e: int):
        c = self._compiled.get(e)
        if c is None:
            p = self.program(e)
            code = _compile(p)
            # with no DJZ on register 0 the input never steers the run
            oblivious = all(not (op == _DJZ and a == 0) for op, a, _ in code)
            c = (code, p.register_count, oblivious)
            self._compiled[e] = c
        return c

    def _key(self, e: int, x: int) -> tuple[int, int]:
        return (e, 0) if self._code(e)[2] else (e, x)

    def eval(self, e: int, x: int, s: int) -> FuelResult:
        """``Φ_{e,s}(x)``."""
        key = self._key(e, x)
        run = self._runs.get(key)
        if run is None:
            code, nregs, _ = self._code(e)
            run = _Run(code, key[1], nregs)
            self._runs[key] = run
        elif run is OUT_OF_FUEL:
            return OUT_OF_FUEL
        elif run.__class__ is FuelResult:
            return run if run.steps <= s else OUT_OF_FUEL
        res = run.result(s)
        if run.value is not None:
            self._runs[key] = FuelResult(run.value, run.steps)
        elif run.diverges:
            self._runs[key] = OUT_OF_FUEL
        return res

    def halts_within(self, e: int, x: int, s: int) -> bool:
        return self.eval(e, x, s).value is not None

    def known_divergent(self, e: int, x: int) -> bool:
        return self._runs.get(self._key(e, x)) is OUT_OF_FUEL

    def entry_stage(self, e: int, x: int, horizon: int) -> int | None:
        """Least ``s <= horizon`` with ``x ∈ W_{e,s}``, or ``None``.

        Fresh runs are not memoised, so scanning many inputs once stays cheap
        in memory.
        """
        if self._key(e, x) in self._runs or self._code(e)[2]:
            res = self.eval(e, x, horizon)
        else:
            code, nregs, _ = self._code(e)
            res = _Run(code, x, nregs).result(horizon)
        if res.value is None:
            return None
        s = max(x + 1, res.steps)
        return s if s <= horizon else None

    def forget(self, e: int) -> None:
        """Drop memoised runs of machine ``e``."""
        for key in [k for k in self._runs if k[0] == e]:
            del self._runs[key]

    def eval_oracle(self, e: int, x: int, s: int, oracle) -> FuelResult:
        """``Φ^A_{e,s}(x)`` with ``QRY`` answered by ``oracle``."""
        return run_program(self.program(e), x, s, oracle)


def eval(universe: MachineUniverse, e: int, x: int, s: int) -> FuelResult:  # noqa: A001
    return universe.eval(e, x, s)


def eval_oracle(universe: MachineUniverse, e: int, x: int, s: int, oracle) -> FuelResult:
    return universe.eval_oracle(e, x, s, oracle)


def we_stage(universe: MachineUniverse, e: int, s: int) -> NatSetPrefix:
    """``W_{e,s} = {x < s : Φ_{e,s}(x) converges}`` as a prefix with bound ``s``."""
    return NatSetPrefix.from_elements(
        (x for x in range(s) if universe.halts_within(e, x, s)), s
    )


def in_w(universe: MachineUniverse, e: int, x: int, s: int) -> bool:
    """``x ∈ W_{e,s}``."""
    return x < s and universe.halts_within(e, x, s)


def dovetail(
    universe: MachineUniverse, indices: Sequence[int], budget: int
) -> list[tuple[int, int]]:
    """All ``(e, x)`` with ``x ∈ W_{e,budget}``, in first-discovery order.

    At stage ``s = 1, 2, ...`` every listed index, in the given order, is run
    on each ``x < s`` for ``s`` steps; a pair is discovered at the first stage
    where it converges, ties broken by position in ``indices`` then by ``x``.
    """
    found = []
    for pos, e in enumerate(indices):
        for x in range(budget):
            r = universe.eval(e, x, budget)
            if r.converged:
                found.append((max(x + 1, r.steps), pos, x, e))
    found.sort()
    return [(e, x) for _, _, x, e in found]


def machine_stream(universe: MachineUniverse, e: int, max_stage: int | None = None):
    """Enumerate ``W_e`` stage by stage, each stage's new elements in increasing order."""
    code, nregs, _ = universe._code(e)
    runs: dict[int, _Run] = {}
    done = 0
    horizon = 64
    while max_stage is None or done < max_stage:
        if max_stage is not None:
            horizon = min(horizon, max_stage)
        for x in range(done, horizon):
            runs[x] = _Run(code, x, nregs)
        found = []
        for x, run in list(runs.items()):
            run.result(horizon)
            if run.value is not None:
                s = max(x + 1, run.steps)
                if s <= horizon:
                    found.append((s, x))
                    del runs[x]
            elif run.diverges:
                del runs[x]
        found.sort()
        for _, x in found:
            yield x
        done = horizon
        horizon *= 2
