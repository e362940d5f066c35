"""Exposure: climb declaration upper bounds until the type is not a path.

``expose(g, t)`` rewrites a path-dependent type ``x.A`` to a supertype that
is not a path, by exposing the head variable's stored type and following the
matching declaration's upper bound.  Non-path types expose to themselves.

The head variable's stored type can only mention strictly earlier bindings
(environments are well-formed), so the recursion always terminates.

When the head's stored type exposes to Top, a function type, or a
declaration with a different label, no rewrite applies; the explicit
:class:`Stuck` outcome reports that, and callers treat it as failure of
their own rule's premise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .environment import TypeEnv, UnboundVariable
from .syntax import Bot, Decl, Path, Type, alpha_eq_type, print_type
from .trace import StepTrace

# When enabled, re-run every head exposure in the materialized strict prefix
# of the environment and assert the result is unchanged (well-formedness
# makes the two equivalent).  Costly; enabled by the test suite.
PREFIX_CHECK = False


@dataclass(frozen=True)
class Exposed:
    """Successful exposure; ``ty`` is never a path."""

    ty: Type
    trace: StepTrace

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Stuck:
    """No exposure rule applies to ``path``; ``blocker`` is the exposed type
    of its head variable (Top, a function type, or a mismatched-label
    declaration)."""

    path: Type
    blocker: Type

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        return f"{print_type(self.path)} blocked on {print_type(self.blocker)}"


ExposureResult = Union[Exposed, Stuck]


def expose(g: TypeEnv, t: Type) -> ExposureResult:
    if not isinstance(t, Path):
        return Exposed(t, StepTrace("X-Other", g, (t, t)))

    stored = g.lookup(t.var)
    if stored is None:
        raise UnboundVariable(f"unbound variable {t.var!r} in {print_type(t)}")

    head = expose(g, stored)
    if PREFIX_CHECK:
        _assert_prefix_equivalent(g, t.var, stored, head)
    if isinstance(head, Stuck):
        return head

    match head.ty:
        case Bot():
            return Exposed(Bot(), StepTrace("X-Bot", g, (t, Bot()), (head.trace,)))
        case Decl(label=label, upper=upper) if label == t.label:
            tail = expose(g, upper)
            if isinstance(tail, Stuck):
                return tail
            return Exposed(tail.ty, StepTrace("X-Path", g, (t, tail.ty), (head.trace, tail.trace)))
        case _:
            return Stuck(t, head.ty)


def _assert_prefix_equivalent(g: TypeEnv, var: str, stored: Type, full_result: ExposureResult) -> None:
    prefix, _, _ = g.split_at(var)
    prefix_result = expose(prefix, stored)
    if isinstance(full_result, Exposed) != isinstance(prefix_result, Exposed):
        raise AssertionError(f"exposure of {var}'s type differs between full env and prefix")
    if isinstance(full_result, Exposed) and not alpha_eq_type(full_result.ty, prefix_result.ty):
        raise AssertionError(
            f"exposure of {var}'s type differs: {print_type(full_result.ty)} (full) "
            f"vs {print_type(prefix_result.ty)} (prefix)"
        )
