"""Model of a bounds-aware, non-transitive subtype check and its worst case.

The checker consults a member's bounds only when the member itself is one of
the two types being compared: if the right side is a member with a lower
bound, recurse into that bound; failing that, if the left side is a member
with an upper bound, recurse into that one; otherwise fall back to the
structural rules (equal base names, equal member names, and
contravariant/covariant function comparison).  There is no transitivity
rule, so chains of one-sided bounds force the checker to explore an
exponential number of paths before giving up.

``scala_sub`` reports the exact number of recursive entries and the maximum
recursion depth the plain recursion would perform.  Identical queries have
identical subtrees, so internally the computation caches per type pair while
summing counts as if uncached; this keeps deep chains cheap without changing
any reported number.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import DsubError, InternalLimit

DEPTH_LIMIT = 10_000


class UnknownMember(DsubError):
    pass


@dataclass(frozen=True)
class Base:
    """A named base type; base types relate only to themselves."""

    name: str


@dataclass(frozen=True)
class Fun:
    """Function type, contravariant in ``param`` and covariant in ``result``."""

    param: "SType"
    result: "SType"


@dataclass(frozen=True)
class Member:
    """Reference to an abstract type member declared in a universe."""

    name: str


SType = Union[Base, Fun, Member]

INT = Base("Int")
STRING = Base("String")


@dataclass(frozen=True)
class Bounds:
    lower: Optional[SType] = None
    upper: Optional[SType] = None


@dataclass(frozen=True)
class BoundsUniverse:
    """Finite map from member names to their (optional) bounds."""

    members: tuple = field(default=())  # of (name, Bounds)

    def bounds(self, name: str) -> Bounds:
        for n, b in self.members:
            if n == name:
                return b
        raise UnknownMember(f"unknown type member {name!r}")

    @staticmethod
    def of(entries: dict) -> "BoundsUniverse":
        return BoundsUniverse(tuple(entries.items()))


@dataclass(frozen=True)
class SubStats:
    result: bool
    calls: int
    max_depth: int


def scala_sub(
    u: BoundsUniverse, t1: SType, t2: SType, *, depth_limit: int = DEPTH_LIMIT
) -> SubStats:
    """Run the bounds-aware check and count every recursive entry.

    Raises :class:`InternalLimit` if the uncached recursion would nest beyond
    ``depth_limit`` (a cyclic bound chain).
    """
    cache: dict = {}
    in_progress: set = set()

    def go(t1: SType, t2: SType) -> tuple:
        key = (t1, t2)
        if key in cache:
            return cache[key]
        if key in in_progress:
            # the plain recursion would re-enter the same query forever
            raise InternalLimit(f"subtype recursion exceeded depth {depth_limit}")
        in_progress.add(key)
        try:
            calls = 1
            depth = 1
            result = None

            if isinstance(t2, Member):
                lower = u.bounds(t2.name).lower
                if lower is not None:
                    sub_result, sub_calls, sub_depth = go(t1, lower)
                    calls += sub_calls
                    depth = max(depth, 1 + sub_depth)
                    if sub_result:
                        result = True
            if result is None and isinstance(t1, Member):
                upper = u.bounds(t1.name).upper
                if upper is not None:
                    sub_result, sub_calls, sub_depth = go(upper, t2)
                    calls += sub_calls
                    depth = max(depth, 1 + sub_depth)
                    if sub_result:
                        result = True
            if result is None:
                structural, s_calls, s_depth = _structural(t1, t2)
                calls += s_calls
                depth = max(depth, 1 + s_depth) if s_calls else depth
                result = structural

            if depth > depth_limit:
                raise InternalLimit(f"subtype recursion exceeded depth {depth_limit}")
            outcome = (result, calls, depth)
            cache[key] = outcome
            return outcome
        finally:
            in_progress.discard(key)

    def _structural(t1: SType, t2: SType) -> tuple:
        match t1, t2:
            case Base(name=a), Base(name=b):
                return a == b, 0, 0
            case Member(name=a), Member(name=b):
                return a == b, 0, 0
            case Fun(param=p1, result=r1), Fun(param=p2, result=r2):
                param_ok, p_calls, p_depth = go(p2, p1)
                calls, depth = p_calls, p_depth
                if not param_ok:
                    return False, calls, depth
                result_ok, r_calls, r_depth = go(r1, r2)
                calls += r_calls
                depth = max(depth, r_depth)
                return result_ok, calls, depth
            case _:
                return False, 0, 0

    result, calls, depth = go(t1, t2)
    return SubStats(result, calls, depth)


# ---------------------------------------------------------------------------
# Example universes


def bad_bounds_universe() -> BoundsUniverse:
    """One member ``E`` bounded below by ``Int -> Int`` and above by
    ``Int -> String``."""
    return BoundsUniverse.of({"E": Bounds(lower=Fun(INT, INT), upper=Fun(INT, STRING))})


def make_pn(n: int):
    """The two-chain worst-case universe.

    Members ``T1 .. Tn`` climb by upper bounds (``Ti`` upper = ``Ti+1``,
    ``Tn`` unbounded); members ``Tn+1 .. T2n`` climb by lower bounds
    (``Tj+1`` lower = ``Tj``, ``Tn+1`` unbounded).  Returns the universe and
    the query pair encoding the failing assignment check ``T1 <: T2n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    entries: dict = {}
    for i in range(1, n + 1):
        upper = Member(f"T{i + 1}") if i < n else None
        entries[f"T{i}"] = Bounds(upper=upper)
    for j in range(n + 1, 2 * n + 1):
        lower = Member(f"T{j - 1}") if j > n + 1 else None
        entries[f"T{j}"] = Bounds(lower=lower)
    return BoundsUniverse.of(entries), Member("T1"), Member(f"T{2 * n}")


def bench_pn(min_n: int, max_n: int, metric: str = "calls") -> Iterator[tuple]:
    """Yield (N, value) rows for the worst-case family; ``metric`` is
    ``calls`` (deterministic) or ``nanos`` (wall time)."""
    if not 1 <= min_n <= max_n:
        raise ValueError("need 1 <= min_n <= max_n")
    if metric not in ("calls", "nanos"):
        raise ValueError(f"unknown metric {metric!r}")
    for n in range(min_n, max_n + 1):
        universe, t1, t2 = make_pn(n)
        start = time.perf_counter_ns()
        stats = scala_sub(universe, t1, t2)
        elapsed = time.perf_counter_ns() - start
        yield n, stats.calls if metric == "calls" else elapsed


# ---------------------------------------------------------------------------
# Universe file format: `member NAME [lower TYPE] [upper TYPE]` per line,
# with TYPE ::= NAME | TYPE "->" TYPE | "#"NAME (# marks member references;
# "->" is right-associative)


def parse_universe(text: str) -> BoundsUniverse:
    entries: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//")[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "member" or len(tokens) < 2:
            raise ValueError(f"line {line_no}: expected 'member NAME [lower TYPE] [upper TYPE]'")
        name = tokens[1]
        rest = tokens[2:]
        lower = upper = None
        while rest:
            kind = rest[0]
            if kind not in ("lower", "upper") or len(rest) < 2:
                raise ValueError(f"line {line_no}: expected 'lower TYPE' or 'upper TYPE'")
            # a type extends to the next 'lower'/'upper' keyword
            end = len(rest)
            for k in range(1, len(rest)):
                if rest[k] in ("lower", "upper"):
                    end = k
                    break
            ty = _parse_stype(" ".join(rest[1:end]), line_no)
            if kind == "lower":
                lower = ty
            else:
                upper = ty
            rest = rest[end:]
        entries[name] = Bounds(lower=lower, upper=upper)
    return BoundsUniverse.of(entries)


def _parse_stype(text: str, line_no: int) -> SType:
    parts = [p.strip() for p in text.split("->")]
    if any(not p for p in parts):
        raise ValueError(f"line {line_no}: malformed type {text!r}")
    atoms = [_parse_satom(p, line_no) for p in parts]
    ty = atoms[-1]
    for atom in reversed(atoms[:-1]):
        ty = Fun(atom, ty)
    return ty


def _parse_satom(text: str, line_no: int) -> SType:
    if text.startswith("#"):
        return Member(text[1:])
    if not text.isidentifier():
        raise ValueError(f"line {line_no}: malformed type atom {text!r}")
    return Base(text)


def print_stype(t: SType) -> str:
    match t:
        case Base(name=n):
            return n
        case Member(name=n):
            return f"#{n}"
        case Fun(param=p, result=r):
            left = print_stype(p)
            if isinstance(p, Fun):
                left = f"({left})"  # not re-parsable; parenthesize for display only
            return f"{left} -> {print_stype(r)}"
    raise TypeError(f"not a model type: {t!r}")


def print_universe(u: BoundsUniverse) -> str:
    lines = []
    for name, bounds in u.members:
        parts = [f"member {name}"]
        if bounds.lower is not None:
            parts.append(f"lower {print_stype(bounds.lower)}")
        if bounds.upper is not None:
            parts.append(f"upper {print_stype(bounds.upper)}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
