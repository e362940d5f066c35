"""Step typing and step subtyping: total, syntax-directed decision procedures.

Step subtyping has no transitivity rule; path-dependent types are compared
by exposing their head variable's declaration and recursing into its bounds.
Function types are only related when their parameter types agree up to
alpha-equivalence (the kernel restriction that makes the relation decidable).

Step typing drops subsumption: applications expose the function's type to a
function type (or Bot) and perform a single subtype check against the
parameter type; lets promote the body's type to erase the bound variable.
Both procedures compute at most one type per input.

``weight`` is the termination measure for subtyping; every recursive
subtyping call re-measures itself in its own environment and (by default)
asserts it is strictly lighter than its parent.  A generous depth valve
turns any runaway recursion into a distinct :class:`InternalLimit` error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .bounds_shift import ShiftStuck, promote
from .environment import TypeEnv, UnboundVariable
from .errors import InternalLimit
from .exposure import Stuck, expose
from .syntax import (
    All,
    App,
    Bot,
    Decl,
    Lam,
    Let,
    Path,
    Tag,
    Term,
    Top,
    Type,
    Var,
    alpha_eq_type,
    fresh_name,
    fv_type,
    print_type,
    subst_var_in_term,
    subst_var_in_type,
)
from .trace import StepTrace

DEPTH_LIMIT = 10_000

# Assert the strict weight-sum decrease on every recursive subtyping call.
WEIGHT_CHECKS = True


class StepInvariantError(AssertionError):
    """The weight measure failed to decrease strictly (a bug)."""


# ---------------------------------------------------------------------------
# Weight


def weight(g: TypeEnv, t: Type) -> int:
    """Termination measure: Top/Bot weigh 1; a declaration weighs one more
    than its heavier bound; a path weighs one more than its head's stored
    type measured in the strict prefix; a function type weighs one more than
    its result measured under the extended environment."""
    match t:
        case Top() | Bot():
            return 1
        case Decl(lower=lo, upper=hi):
            return 1 + max(weight(g, lo), weight(g, hi))
        case Path(var=x):
            split = g.split_at(x)
            if split is None:
                raise UnboundVariable(f"unbound variable {x!r} in {print_type(t)}")
            prefix, stored, _ = split
            return 1 + weight(prefix, stored)
        case All(param=x, param_type=s, result=u):
            if x in g:
                x2 = fresh_name(x, g.dom() | fv_type(u))
                u = subst_var_in_type(u, x, x2)
                x = x2
            return 1 + weight(g.extend(x, s), u)
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Step subtyping


@dataclass(frozen=True)
class SubtypeResult:
    holds: bool
    trace: Optional[StepTrace] = None
    diagnostic: Optional[str] = None

    def __bool__(self) -> bool:
        return self.holds


def step_subtype(g: TypeEnv, s: Type, t: Type, *, depth_limit: int = DEPTH_LIMIT) -> SubtypeResult:
    """Decide the step subtype relation; on success the result carries the
    full rule trace.  Unbound variables yield a negative result with a
    diagnostic rather than an exception."""
    loose = (fv_type(s) | fv_type(t)) - g.dom()
    if loose:
        return SubtypeResult(
            False, None, f"unbound variable(s) in query: {', '.join(sorted(loose))}"
        )
    try:
        trace = _sub(g, s, t, None, 0, depth_limit)
    except UnboundVariable as exc:
        return SubtypeResult(False, None, str(exc))
    if trace is None:
        return SubtypeResult(False, None, f"{print_type(s)} <: {print_type(t)} does not hold")
    return SubtypeResult(True, trace)


def _measure_entry(g: TypeEnv, s: Type, t: Type, parent: Optional[int]) -> Optional[int]:
    if not WEIGHT_CHECKS:
        return None
    measure = weight(g, s) + weight(g, t)
    if parent is not None and measure >= parent:
        raise StepInvariantError(
            f"weight did not decrease: {measure} >= {parent} "
            f"at {print_type(s)} <: {print_type(t)}"
        )
    return measure


def _sub(
    g: TypeEnv, s: Type, t: Type, parent: Optional[int], depth: int, limit: int
) -> Optional[StepTrace]:
    if depth > limit:
        raise InternalLimit(f"subtype recursion exceeded depth {limit}")
    measure = _measure_entry(g, s, t, parent)

    if isinstance(s, Bot):
        return StepTrace("S-Bot", g, (s, t))
    if isinstance(t, Top):
        return StepTrace("S-Top", g, (s, t))
    if isinstance(s, Path) and isinstance(t, Path) and s == t:
        return StepTrace("S-Refl", g, (s, t))

    if isinstance(s, Decl) and isinstance(t, Decl) and s.label == t.label:
        lower = _sub(g, t.lower, s.lower, measure, depth + 1, limit)
        if lower is not None:
            upper = _sub(g, s.upper, t.upper, measure, depth + 1, limit)
            if upper is not None:
                return StepTrace("S-Typ-<:-Typ", g, (s, t), (lower, upper))

    if isinstance(s, All) and isinstance(t, All) and alpha_eq_type(s.param_type, t.param_type):
        avoid = g.dom() | (fv_type(s.result) - {s.param}) | (fv_type(t.result) - {t.param})
        z = fresh_name(s.param, avoid)
        inner_env = g.extend(z, s.param_type)
        lhs_body = subst_var_in_type(s.result, s.param, z)
        rhs_body = subst_var_in_type(t.result, t.param, z)
        inner = _sub(inner_env, lhs_body, rhs_body, measure, depth + 1, limit)
        if inner is not None:
            return StepTrace("S-All-<:-All", g, (s, t), (inner,))

    if isinstance(s, Path):
        found = _path_attempt(g, s, t, left=True, parent=measure, depth=depth, limit=limit)
        if found is not None:
            return found
    if isinstance(t, Path):
        found = _path_attempt(g, s, t, left=False, parent=measure, depth=depth, limit=limit)
        if found is not None:
            return found
    return None


def _path_attempt(
    g: TypeEnv,
    s: Type,
    t: Type,
    left: bool,
    parent: Optional[int],
    depth: int,
    limit: int,
) -> Optional[StepTrace]:
    path = s if left else t
    stored = g.lookup(path.var)
    if stored is None:
        raise UnboundVariable(f"unbound variable {path.var!r} in {print_type(path)}")
    head = expose(g, stored)
    if isinstance(head, Stuck):
        return None
    match head.ty:
        case Bot():
            rule = "S-<:-Bot" if left else "S-Bot-<:"
            return StepTrace(rule, g, (s, t), (head.trace,))
        case Decl(label=label, lower=lo, upper=hi) if label == path.label:
            if left:
                inner = _sub(g, hi, t, parent, depth + 1, limit)
                if inner is not None:
                    return StepTrace("S-<:-Sel", g, (s, t), (head.trace, inner))
            else:
                inner = _sub(g, s, lo, parent, depth + 1, limit)
                if inner is not None:
                    return StepTrace("S-Sel-<:", g, (s, t), (head.trace, inner))
    return None


# ---------------------------------------------------------------------------
# Step typing


@dataclass(frozen=True)
class Typed:
    ty: Type
    trace: StepTrace

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Untypable:
    reason: str
    location: str  # dotted path into the term; "" for the root

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        where = self.location or "term"
        return f"{where}: {self.reason}"


StepTypingOutcome = Union[Typed, Untypable]


def step_type(g: TypeEnv, term: Term, *, depth_limit: int = DEPTH_LIMIT) -> StepTypingOutcome:
    """Compute the unique step type of ``term`` under ``g``, or explain why
    there is none."""
    return _typ(g, term, "", depth_limit)


def _typ(g: TypeEnv, term: Term, loc: str, limit: int) -> StepTypingOutcome:
    match term:
        case Var(name=x):
            stored = g.lookup(x)
            if stored is None:
                return Untypable(f"unbound variable {x!r}", loc)
            return Typed(stored, StepTrace("T-Var", g, (term, stored)))

        case Tag(label=a, alias=ty):
            out_of_scope = fv_type(ty) - g.dom()
            if out_of_scope:
                return Untypable(
                    f"tag type mentions unbound variable(s): {', '.join(sorted(out_of_scope))}", loc
                )
            result = Decl(a, ty, ty)
            return Typed(result, StepTrace("T-Typ-I", g, (term, result)))

        case Lam(param=x, param_type=ty, body=body):
            out_of_scope = fv_type(ty) - g.dom()
            if out_of_scope:
                return Untypable(
                    f"parameter type mentions unbound variable(s): "
                    f"{', '.join(sorted(out_of_scope))}",
                    loc,
                )
            if x in g:
                x2 = fresh_name(x, g.dom() | fv_type(ty))
                body = subst_var_in_term(body, x, x2)
                x = x2
            inner = _typ(g.extend(x, ty), body, _at(loc, "body"), limit)
            if isinstance(inner, Untypable):
                return inner
            result = All(x, ty, inner.ty)
            return Typed(result, StepTrace("T-All-I", g, (term, result), (inner.trace,)))

        case App(fun=f, arg=a):
            fun_typed = _typ(g, Var(f), _at(loc, "fun"), limit)
            if isinstance(fun_typed, Untypable):
                return fun_typed
            head = expose(g, fun_typed.ty)
            if isinstance(head, Stuck):
                return Untypable(f"function position not exposable ({head.describe()})", loc)
            arg_typed = _typ(g, Var(a), _at(loc, "arg"), limit)
            if isinstance(arg_typed, Untypable):
                return arg_typed
            match head.ty:
                case Bot():
                    return Typed(
                        Bot(),
                        StepTrace(
                            "T-App-Bot",
                            g,
                            (term, Bot()),
                            (fun_typed.trace, head.trace, arg_typed.trace),
                        ),
                    )
                case All(param=z, param_type=s, result=u):
                    check = step_subtype(g, arg_typed.ty, s, depth_limit=limit)
                    if not check.holds:
                        return Untypable(
                            f"argument type {print_type(arg_typed.ty)} is not a step subtype "
                            f"of parameter type {print_type(s)}",
                            loc,
                        )
                    result = subst_var_in_type(u, z, a)
                    return Typed(
                        result,
                        StepTrace(
                            "T-All-E",
                            g,
                            (term, result),
                            (fun_typed.trace, head.trace, arg_typed.trace, check.trace),
                        ),
                    )
                case other:
                    return Untypable(
                        f"function position has non-function type {print_type(other)}", loc
                    )

        case Let(bound=x, rhs=rhs, body=body):
            rhs_typed = _typ(g, rhs, _at(loc, "rhs"), limit)
            if isinstance(rhs_typed, Untypable):
                return rhs_typed
            if x in g:
                x2 = fresh_name(x, g.dom() | fv_type(rhs_typed.ty))
                body = subst_var_in_term(body, x, x2)
                x = x2
            inner_env = g.extend(x, rhs_typed.ty)
            body_typed = _typ(inner_env, body, _at(loc, "body"), limit)
            if isinstance(body_typed, Untypable):
                return body_typed
            promoted = promote(inner_env, body_typed.ty, x)
            if isinstance(promoted, ShiftStuck):
                return Untypable(f"let body type not promotable ({promoted.reason})", loc)
            return Typed(
                promoted.ty,
                StepTrace(
                    "T-Let",
                    g,
                    (term, promoted.ty),
                    (rhs_typed.trace, body_typed.trace, promoted.trace),
                ),
            )
    raise TypeError(f"not a term: {term!r}")


def _at(loc: str, field_name: str) -> str:
    return f"{loc}.{field_name}" if loc else field_name


__all__ = [
    "DEPTH_LIMIT",
    "WEIGHT_CHECKS",
    "StepInvariantError",
    "SubtypeResult",
    "Typed",
    "Untypable",
    "StepTypingOutcome",
    "step_subtype",
    "step_type",
    "weight",
]
