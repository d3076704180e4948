"""Command line front end: ``densitylab <subcommand> ...``.

Every subcommand writes one CSV (or operator file) to ``--out`` or stdout and
prints a one-line summary. With ``--out`` the summary goes to stdout,
otherwise to stderr so that stdout stays machine readable.

Exit codes: 0 success, 1 runtime error (such as an exhausted budget),
2 usage error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import constructions as cons
from .density import NatSetPrefix, density_profile, symdiff_density
from .eop import apply as eop_apply
from .eop import compose, load_operator
from .errors import DensityLabError, FormatError, InvariantViolation
from .generic import LimitApprox, coarse_prefix, decode_from_coarse
from .machines import MachineUniverse, adversary, load_program
from .partition import GenericListing, decode_R, encode_R, r_slice

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


# argument helpers

def parse_int_list(text: str) -> list[int]:
    text = text.strip().strip("{}")
    if not text:
        return []
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise UsageError(f"expected comma separated naturals, got {text!r}") from None


def parse_set(spec: str, bound: int) -> NatSetPrefix:
    """Build a set prefix from a short description.

    ``R:k``, ``RA:a,b,..`` (the coded set 𝓡 of a finite set), ``elements:a,b,..``,
    ``mod:m:r``, ``evens``, ``odds``, ``all``, ``empty`` or ``file:path`` with
    whitespace or comma separated elements.
    """
    kind, _, arg = spec.partition(":")
    if kind == "R":
        return r_slice(_nat(arg, spec), bound)
    if kind == "RA":
        return encode_R(set(parse_int_list(arg)), bound)
    if kind == "elements":
        return NatSetPrefix.from_elements((m for m in parse_int_list(arg) if m < bound), bound)
    if kind == "mod":
        m_text, _, r_text = arg.partition(":")
        m, r = _nat(m_text, spec), _nat(r_text, spec)
        if m == 0:
            raise UsageError("mod:m:r needs m >= 1")
        return NatSetPrefix(np.arange(bound) % m == r)
    if kind == "file":
        with open(arg, encoding="utf-8") as fh:
            elems = parse_int_list(fh.read().replace("\n", ","))
        return NatSetPrefix.from_elements((m for m in elems if m < bound), bound)
    named = {
        "evens": lambda: NatSetPrefix(np.arange(bound) % 2 == 0),
        "odds": lambda: NatSetPrefix(np.arange(bound) % 2 == 1),
        "all": lambda: NatSetPrefix.full(bound),
        "empty": lambda: NatSetPrefix.empty(bound),
    }
    if spec in named:
        return named[spec]()
    raise UsageError(f"unknown set description {spec!r}")


def _nat(text: str, context: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise UsageError(f"bad number in {context!r}") from None
    if v < 0:
        raise UsageError(f"negative number in {context!r}")
    return v


def parse_fuel_bound(spec: str):
    """``exp:c`` gives ``f(j) = 2^(j+c)``, ``const:N`` gives ``f(j) = N``."""
    kind, _, arg = spec.partition(":")
    if kind == "exp":
        c = _nat(arg, spec)
        return lambda j: 1 << (j + c)
    if kind == "const":
        n = _nat(arg, spec)
        return lambda j: n
    raise UsageError(f"unknown time bound {spec!r}; use exp:c or const:N")


def load_adversaries(path: str) -> dict:
    """Lines ``e = name`` or ``e = program-file``; ``#`` starts a comment.

    Program paths are resolved relative to the adversary file.
    """
    out = {}
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            for sep in ("=", ":", None):
                parts = line.split(sep, 1)
                if len(parts) == 2:
                    break
            else:
                raise FormatError(f"{path}:{lineno}: expected 'e = adversary'")
            e, what = parts[0].strip(), parts[1].strip()
            try:
                index = int(e)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad machine index {e!r}") from None
            try:
                out[index] = adversary(what)
            except KeyError:
                prog = what if os.path.isabs(what) else os.path.join(base, what)
                if not os.path.exists(prog):
                    raise FormatError(f"{path}:{lineno}: no adversary or file named {what!r}") from None
                out[index] = load_program(prog)
    return out


def load_config(path: str) -> dict[str, str]:
    """``key=value`` lines; keys may use dashes or underscores."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


# subcommands

def cmd_density(args) -> tuple[str, str, int]:
    points = parse_int_list(args.points)
    if not points:
        raise UsageError("--points needs at least one sample point")
    bound = args.bound or max(points) + 1
    A = parse_set(args.set, bound)
    prof = density_profile(A, points)
    n, rho = prof.samples[-1]
    return prof.to_csv(), f"density {args.set}: rho_{n} = {rho} ({float(rho):.6f})", EXIT_OK


def cmd_build_delta02(args) -> tuple[str, str, int]:
    try:
        q = cons.RationalSeq.parse(args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    A, trace = cons.delta02_density_set(q, args.steps)
    cum = np.cumsum(A.bits, dtype=np.int64)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "s_n", "count", "rho_num", "rho_den", "q_num", "q_den"])
    status = EXIT_OK
    gap = Fraction(0)
    for n, s in enumerate(trace, 1):
        rho = Fraction(int(cum[s]), s + 1)
        qn = q(n)
        w.writerow([n, s, int(cum[s]), rho.numerator, rho.denominator, qn.numerator, qn.denominator])
        gap = abs(rho - qn)
        if gap > Fraction(1, n):
            status = EXIT_INVARIANT
    n = len(trace)
    verdict = "ok" if status == EXIT_OK else "VIOLATED"
    summary = (
        f"delta02 {args.q} steps={n}: final |rho - q| = {gap} "
        f"({float(gap):.3g}) <= 1/{n}: {verdict}"
    )
    return buf.getvalue(), summary, status


def cmd_run(args) -> tuple[str, str, int]:
    name = args.construction
    if name is None:
        raise UsageError("run needs a construction (simple|diag|density1|genpair|interval)")
    if name.startswith("construction="):
        name = name.split("=", 1)[1]
    if name not in ("simple", "diag", "density1", "genpair", "interval"):
        raise UsageError(f"unknown construction {name!r}")
    extra = load_adversaries(args.adversaries) if args.adversaries else {}
    universe = MachineUniverse.standard(extra) if args.universe == "standard" else MachineUniverse(extra)
    if name == "interval":
        state = cons.interval_diagonalization(
            parse_fuel_bound(args.f), universe, args.j_max, args.machines
        )
    else:
        state = cons.CONSTRUCTIONS[name](universe, args.stages, args.machines)
    csv_text = cons.trace_export(state)
    problems = cons.check_invariants(state, universe)
    sizes = ", ".join(f"|{k}|={len(v)}" for k, v in state.sets.items())
    if problems:
        for p in problems:
            print(f"invariant violation: {p}", file=sys.stderr)
        return csv_text, f"run {name} stage={state.stage} {sizes}: invariants VIOLATED", EXIT_INVARIANT
    summary = f"run {name} stage={state.stage} {sizes} jumps={len(state.jumps)}: invariants ok"
    return csv_text, summary, EXIT_OK


def cmd_decode_coarse(args) -> tuple[str, str, int]:
    A = set(parse_int_list(args.a))
    if any(n >= args.count for n in A):
        raise UsageError("--a must lie below --count")
    wrong = set(range(args.count)) - A
    L = LimitApprox.switching(wrong, A, args.settle)
    C = coarse_prefix(L, args.stage + 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "decoded", "actual"])
    good = 0
    for n in range(args.count):
        d = decode_from_coarse(C, n, args.stage)
        a = int(n in A)
        good += d == a
        w.writerow([n, d, a])
    gap = symdiff_density(C, encode_R(A, args.stage + 1), args.stage)
    summary = (
        f"decode-coarse s={args.stage}: {good}/{args.count} recovered, "
        f"symdiff density {float(gap):.3g}"
    )
    return buf.getvalue(), summary, EXIT_OK


def cmd_eop(args) -> tuple[str, str, int]:
    if args.action == "apply":
        if not args.op:
            raise UsageError("eop apply needs --op")
        W = load_operator(args.op)
        X = set(parse_int_list(args.x or ""))
        out = sorted(eop_apply(W, X, args.budget))
        text = "n\n" + "".join(f"{n}\n" for n in out)
        return text, f"eop apply: {len(out)} outputs from {len(W)} axioms", EXIT_OK
    if not (args.op and args.op2):
        raise UsageError("eop compose needs --op (outer V) and --op2 (inner W)")
    V, W = load_operator(args.op), load_operator(args.op2)
    U = compose(V, W, args.bound)
    flag = " (truncated)" if U.truncated else ""
    return U.to_text(), f"eop compose: {len(U)} axioms{flag}", EXIT_OK


def cmd_encode_r(args) -> tuple[str, str, int]:
    # R(A) below bound only asks A about numbers below bound.bit_length()
    A = parse_set(args.a, max(args.bound.bit_length(), 1))
    R = encode_R(A, args.bound)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "bit"])
    for m, b in enumerate(R.bits.tolist()):
        w.writerow([m, int(b)])
    return buf.getvalue(), f"encode-r {args.a}: {R.cardinality()} of {args.bound} set", EXIT_OK


def _read_listing(path: str) -> GenericListing:
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and not row[0].strip().isdigit():
                continue
            try:
                m, b = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise FormatError(f"{path}:{lineno}: expected m,bit") from None
            pairs.append((m, b))
    return GenericListing.from_pairs(pairs)


def cmd_decode_r(args) -> tuple[str, str, int]:
    G = _read_listing(args.listing)
    ns = parse_int_list(args.n) if args.n else list(range(args.count))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "bit"])
    members = []
    for n in ns:
        b = decode_R(G, n, args.budget)
        w.writerow([n, b])
        if b:
            members.append(n)
    return buf.getvalue(), f"decode-r: {{{', '.join(map(str, members))}}} among {len(ns)} decoded", EXIT_OK


# parser

DEFAULTS = {
    "density": {"set": None, "points": None, "bound": None},
    "build-delta02": {"q": "const:1/2", "steps": 1000},
    "run": {
        "construction": None, "stages": 1000, "machines": 64, "adversaries": None,
        "universe": "standard", "j_max": 12, "f": "exp:4",
    },
    "decode-coarse": {"a": "0,2,5", "count": 8, "settle": 100, "stage": 1 << 16},
    "eop": {"action": None, "op": None, "op2": None, "x": None, "budget": None, "bound": 100_000},
    "encode-r": {"a": None, "bound": 256},
    "decode-r": {"listing": None, "n": None, "count": 8, "budget": 1 << 22},
}

INT_KEYS = {"bound", "steps", "stages", "machines", "j_max", "count", "settle", "stage", "budget"}
REQUIRED = {"density": ("set", "points"), "encode-r": ("a",), "decode-r": ("listing",), "eop": ("action",)}

COMMANDS = {
    "density": cmd_density,
    "build-delta02": cmd_build_delta02,
    "run": cmd_run,
    "decode-coarse": cmd_decode_coarse,
    "eop": cmd_eop,
    "encode-r": cmd_encode_r,
    "decode-r": cmd_decode_r,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} is negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="densitylab", description="Density and generic computability toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--config", help="key=value file; explicit flags win")

    sp = sub.add_parser("density", help="exact prefix densities of a set")
    sp.add_argument("--set", help="R:k, RA:a,b, elements:a,b, mod:m:r, evens, odds, all, empty, file:path")
    sp.add_argument("--points", help="comma separated sample points n")
    sp.add_argument("--bound", type=_nonneg, help="prefix bound (default: last point + 1)")
    common(sp)

    sp = sub.add_parser("build-delta02", help="computable set with a prescribed density sequence")
    sp.add_argument("--q", help="const:p/q or dec:p/q (decimal truncations)")
    sp.add_argument("--steps", type=_nonneg)
    common(sp)

    sp = sub.add_parser("run", help="run a construction and export its trace")
    sp.add_argument("construction", nargs="?", help="simple|diag|density1|genpair|interval, or construction=NAME")
    sp.add_argument("--stages", type=_nonneg)
    sp.add_argument("--machines", type=_nonneg)
    sp.add_argument("--adversaries", help="file of 'e = adversary-name-or-program-path' lines")
    sp.add_argument("--universe", choices=("standard", "plain"))
    sp.add_argument("--j-max", dest="j_max", type=_nonneg, help="last interval for interval")
    sp.add_argument("--f", help="time bound for interval: exp:c or const:N")
    common(sp)

    sp = sub.add_parser("decode-coarse", help="round trip a finite set through a coarse description")
    sp.add_argument("--a", help="elements of A, all below --count")
    sp.add_argument("--count", type=_nonneg)
    sp.add_argument("--settle", type=_nonneg, help="stage at which the approximation settles")
    sp.add_argument("--stage", type=_nonneg, help="decoding stage s")
    common(sp)

    sp = sub.add_parser("eop", help="apply or compose enumeration operators")
    sp.add_argument("action", nargs="?", choices=("apply", "compose"))
    sp.add_argument("--op", help="operator file (n:index lines); outer operator for compose")
    sp.add_argument("--op2", help="inner operator file for compose")
    sp.add_argument("--x", help="input set for apply, comma separated")
    sp.add_argument("--budget", type=_nonneg)
    sp.add_argument("--bound", type=_nonneg, help="combination bound for compose")
    common(sp)

    sp = sub.add_parser("encode-r", help="full listing of the coded set R(A)")
    sp.add_argument("--a", help="set description for A")
    sp.add_argument("--bound", type=_nonneg)
    common(sp)

    sp = sub.add_parser("decode-r", help="read A(n) off a listing of R(A)")
    sp.add_argument("--listing", help="CSV of m,bit rows")
    sp.add_argument("--n", help="comma separated n (default: 0 .. count-1)")
    sp.add_argument("--count", type=_nonneg)
    sp.add_argument("--budget", type=_nonneg)
    common(sp)
    return p


def _resolve(args) -> None:
    """Fill unset options from the config file, then from the defaults."""
    defaults = DEFAULTS[args.command]
    cfg = load_config(args.config) if args.config else {}
    for key, value in cfg.items():
        if key not in defaults:
            raise UsageError(f"config key {key!r} does not apply to {args.command}")
        if getattr(args, key, None) is None:
            if key in INT_KEYS:
                value = _nat(value, f"{key}={value}")
            setattr(args, key, value)
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key in REQUIRED.get(args.command, ()):
        if getattr(args, key) is None:
            raise UsageError(f"{args.command} needs --{key.replace('_', '-')}")


def _check_out(path: str | None) -> None:
    if path is None:
        return
    folder = os.path.dirname(os.path.abspath(path))
    if os.path.isdir(path) or not os.path.isdir(folder) or not os.access(folder, os.W_OK):
        raise UsageError(f"cannot write output file {path!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; see densitylab --help")
        _resolve(args)
        _check_out(args.out)
        text, summary, status = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except DensityLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
