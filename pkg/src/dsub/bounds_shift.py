"""Promotion and demotion: erase one variable from a type.

``promote(g, t, x)`` rewrites ``t`` to a supertype in which ``x`` no longer
occurs free; ``demote`` does the same toward a subtype.  Selections on the
erased variable are replaced by the matching declaration's upper bound
(promotion) or lower bound (demotion), discovered through exposure; a head
that exposes to Bot promotes to Bot and demotes to Top.  The two relations
are mutually recursive through declaration bounds and function parameters.

Binders equal to the erased variable shield their body and the type is
returned unchanged; this is unreachable for fresh-named inputs but keeps the
functions total on raw parsed input.

Note the asymmetry in the function-type cases: promotion extends the
environment with the demoted parameter type, demotion with the original one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .environment import TypeEnv, UnboundVariable
from .exposure import Stuck, expose
from .syntax import (
    All,
    Bot,
    Decl,
    Path,
    Top,
    Type,
    fresh_name,
    fv_type,
    print_type,
    subst_var_in_type,
    type_size,
)
from .trace import StepTrace

# Assert the structural-size termination measure on every recursive call.
SIZE_CHECKS = True


class ShiftInvariantError(AssertionError):
    """A termination-measure or erasure invariant was violated (a bug)."""


@dataclass(frozen=True)
class Shifted:
    ty: Type
    trace: StepTrace

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class ShiftStuck:
    reason: str

    def __bool__(self) -> bool:
        return False


ShiftResult = Union[Shifted, ShiftStuck]


def promote(g: TypeEnv, t: Type, x: str) -> ShiftResult:
    result = _shift(g, t, x, up=True)
    if isinstance(result, Shifted) and x in fv_type(result.ty):
        raise ShiftInvariantError(f"promotion left {x!r} free in {print_type(result.ty)}")
    return result


def demote(g: TypeEnv, t: Type, x: str) -> ShiftResult:
    result = _shift(g, t, x, up=False)
    if isinstance(result, Shifted) and x in fv_type(result.ty):
        raise ShiftInvariantError(f"demotion left {x!r} free in {print_type(result.ty)}")
    return result


def _recurse(g: TypeEnv, t: Type, x: str, up: bool, parent: Type) -> ShiftResult:
    if SIZE_CHECKS and not type_size(t) < type_size(parent):
        raise ShiftInvariantError(
            f"size did not decrease: {print_type(t)} inside {print_type(parent)}"
        )
    return _shift(g, t, x, up)


def _shift(g: TypeEnv, t: Type, x: str, up: bool) -> ShiftResult:
    direction = "promote" if up else "demote"
    match t:
        case Bot():
            return Shifted(t, StepTrace("P-Bot" if up else "D-Bot", g, (t, x, t)))
        case Top():
            return Shifted(t, StepTrace("P-Top" if up else "D-Top", g, (t, x, t)))
        case Path(var=y):
            if y != x:
                return Shifted(t, StepTrace("P-Var" if up else "D-Var", g, (t, x, t)))
            stored = g.lookup(x)
            if stored is None:
                raise UnboundVariable(f"unbound variable {x!r} in {print_type(t)}")
            head = expose(g, stored)
            if isinstance(head, Stuck):
                return ShiftStuck(f"cannot {direction} {print_type(t)}: {head.describe()}")
            match head.ty:
                case Bot():
                    out = Bot() if up else Top()
                    rule = "P-Up-Bot" if up else "D-Down-Bot"
                    return Shifted(out, StepTrace(rule, g, (t, x, out), (head.trace,)))
                case Decl(label=label, lower=lo, upper=hi) if label == t.label:
                    out = hi if up else lo
                    rule = "P-Up" if up else "D-Down"
                    return Shifted(out, StepTrace(rule, g, (t, x, out), (head.trace,)))
                case other:
                    return ShiftStuck(
                        f"cannot {direction} {print_type(t)}: head exposes to {print_type(other)}"
                    )
        case Decl(label=label, lower=lo, upper=hi):
            lo_result = _recurse(g, lo, x, not up, t)
            if isinstance(lo_result, ShiftStuck):
                return lo_result
            hi_result = _recurse(g, hi, x, up, t)
            if isinstance(hi_result, ShiftStuck):
                return hi_result
            out = Decl(label, lo_result.ty, hi_result.ty)
            rule = "P-Decl" if up else "D-Decl"
            return Shifted(out, StepTrace(rule, g, (t, x, out), (lo_result.trace, hi_result.trace)))
        case All(param=y, param_type=s, result=u):
            if y == x:
                return Shifted(t, StepTrace("P-Cap" if up else "D-Cap", g, (t, x, t)))
            s_result = _recurse(g, s, x, not up, t)
            if isinstance(s_result, ShiftStuck):
                return s_result
            if y in g:
                y2 = fresh_name(y, g.dom() | fv_type(u) | {x})
                u = subst_var_in_type(u, y, y2)
                y = y2
            # promotion recurses under the demoted parameter type, demotion
            # under the original one
            inner_env = g.extend(y, s_result.ty if up else s)
            u_result = _recurse(inner_env, u, x, up, t)
            if isinstance(u_result, ShiftStuck):
                return u_result
            out = All(y, s_result.ty, u_result.ty)
            rule = "P-Lam" if up else "D-Lam"
            return Shifted(out, StepTrace(rule, g, (t, x, out), (s_result.trace, u_result.trace)))
    raise TypeError(f"not a type: {t!r}")
