"""The standard declarative rules as an explicit derivation checker, a
fuel-bounded proof search, and an elaborator from algorithmic traces.

The checker (:func:`decl_verify`) validates that every node of a derivation
tree instantiates its rule schema; it is the soundness oracle for the whole
package.  The search (:func:`decl_search`) looks for derivations up to a
depth bound, guessing transitivity/subsumption midpoints from a finite
candidate set; failure to find one is never a refutation.  The elaborator
(:func:`elaborate_step`) replays exposure, promotion/demotion and step
typing/subtyping traces as declarative derivations, inserting the
transitivity and subsumption steps the algorithmic rules fuse away.

Subtyping rules: Top and Bot are axioms; Refl is a general axiom; Trans
supplies its own midpoint through its premises; <:-Sel and Sel-<: relate a
path to the bounds in a typing premise ``x : {A: S..T}``; Typ-<:-Typ relates
same-label declarations contravariantly in the lower bound and covariantly
in the upper; All-<:-All is the full dependent rule (contravariant parameter,
result compared under the narrower parameter type).

Typing rules: Var, Typ-I, All-I, All-E (dependent application), Let (with
the bound variable escaping check), and subsumption (Sub).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .environment import TypeEnv, env_from_bindings
from .errors import DsubError
from .exposure import Exposed, expose
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
    alpha_eq_term,
    alpha_eq_type,
    canon_term,
    canon_type,
    fresh_name,
    fv_term,
    fv_type,
    parse_term,
    parse_type,
    print_term,
    print_type,
    subst_var_in_term,
    subst_var_in_type,
    type_size,
)
from .trace import StepTrace

SUB_RULES = frozenset(("Top", "Bot", "Refl", "Trans", "<:-Sel", "Sel-<:", "All-<:-All", "Typ-<:-Typ"))
TYP_RULES = frozenset(("Var", "All-I", "All-E", "Typ-I", "Let", "Sub"))


class ElaborationGap(DsubError):
    """A trace node had no declarative mapping (an implementation bug)."""


# ---------------------------------------------------------------------------
# Judgments and derivation trees


@dataclass(frozen=True)
class SubJ:
    env: TypeEnv
    lhs: Type
    rhs: Type

    def __post_init__(self) -> None:
        scope = self.env.dom()
        loose = (fv_type(self.lhs) | fv_type(self.rhs)) - scope
        if loose:
            raise ValueError(f"judgment mentions unbound variable(s): {', '.join(sorted(loose))}")

    def render(self) -> str:
        prefix = ", ".join(f"{x}: {print_type(t)}" for x, t in self.env)
        body = f"{print_type(self.lhs)} <: {print_type(self.rhs)}"
        return f"{prefix} |- {body}" if prefix else f"|- {body}"

    def key(self) -> str:
        envk = ";".join(f"{x}:{canon_type(t)}" for x, t in self.env)
        return f"sub[{envk}]{canon_type(self.lhs)}<:{canon_type(self.rhs)}"


@dataclass(frozen=True)
class TypJ:
    env: TypeEnv
    term: Term
    ty: Type

    def __post_init__(self) -> None:
        scope = self.env.dom()
        loose = (fv_term(self.term) | fv_type(self.ty)) - scope
        if loose:
            raise ValueError(f"judgment mentions unbound variable(s): {', '.join(sorted(loose))}")

    def render(self) -> str:
        prefix = ", ".join(f"{x}: {print_type(t)}" for x, t in self.env)
        body = f"{print_term(self.term)} : {print_type(self.ty)}"
        return f"{prefix} |- {body}" if prefix else f"|- {body}"

    def key(self) -> str:
        envk = ";".join(f"{x}:{canon_type(t)}" for x, t in self.env)
        return f"typ[{envk}]{canon_term(self.term)}:{canon_type(self.ty)}"


Judgment = Union[SubJ, TypJ]


@dataclass(frozen=True)
class DerivationTree:
    rule: str
    conclusion: Judgment
    premises: tuple = field(default=())


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    path: str = ""
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# Checker


def decl_verify(tree: DerivationTree) -> VerifyResult:
    """Check that every node instantiates its rule schema; on failure report
    the first offending node (paths index into ``premises``)."""
    return _verify(tree, "root")


def _fail(path: str, message: str) -> VerifyResult:
    return VerifyResult(False, path, message)


def _same_env(a: TypeEnv, b: TypeEnv) -> bool:
    if len(a) != len(b):
        return False
    return all(
        x == y and alpha_eq_type(s, t) for (x, s), (y, t) in zip(a.bindings, b.bindings)
    )


def _extends_by_one(inner: TypeEnv, outer: TypeEnv):
    """Return the extra (var, type) binding if ``inner`` is ``outer`` plus
    exactly one binding, else None."""
    if len(inner) != len(outer) + 1 or not _same_env(TypeEnv(inner.bindings[:-1]), outer):
        return None
    return inner.bindings[-1]


def _verify(node: DerivationTree, path: str) -> VerifyResult:
    checkers = {**_SUB_CHECKERS, **_TYP_CHECKERS}
    check = checkers.get(node.rule)
    if check is None:
        return _fail(path, f"unknown rule {node.rule!r}")
    expected_kind = SubJ if node.rule in SUB_RULES else TypJ
    if not isinstance(node.conclusion, expected_kind):
        return _fail(path, f"rule {node.rule} concludes the wrong judgment form")
    message = check(node)
    if message is not None:
        return _fail(path, f"{node.rule}: {message}")
    for i, premise in enumerate(node.premises):
        result = _verify(premise, f"{path}.premises[{i}]")
        if not result.ok:
            return result
    return VerifyResult(True)


def _arity(node: DerivationTree, n: int) -> Optional[str]:
    if len(node.premises) != n:
        return f"expected {n} premise(s), found {len(node.premises)}"
    return None


def _check_top(node: DerivationTree) -> Optional[str]:
    if not isinstance(node.conclusion.rhs, Top):
        return "right-hand side must be Top"
    return _arity(node, 0)


def _check_bot(node: DerivationTree) -> Optional[str]:
    if not isinstance(node.conclusion.lhs, Bot):
        return "left-hand side must be Bot"
    return _arity(node, 0)


def _check_refl(node: DerivationTree) -> Optional[str]:
    if not alpha_eq_type(node.conclusion.lhs, node.conclusion.rhs):
        return "sides are not alpha-equal"
    return _arity(node, 0)


def _check_trans(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    left, right = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(left, SubJ) or not isinstance(right, SubJ):
        return "premises must be subtyping judgments"
    c = node.conclusion
    if not (_same_env(left.env, c.env) and _same_env(right.env, c.env)):
        return "premise environments differ from the conclusion's"
    if not alpha_eq_type(left.lhs, c.lhs):
        return "first premise does not start at the conclusion's left side"
    if not alpha_eq_type(right.rhs, c.rhs):
        return "second premise does not end at the conclusion's right side"
    if not alpha_eq_type(left.rhs, right.lhs):
        return "premises do not agree on a midpoint"
    return None


def _sel_typing_premise(node: DerivationTree, path_side: Type) -> Optional[str]:
    premise = node.premises[0].conclusion
    if not isinstance(premise, TypJ):
        return "premise must be a typing judgment"
    if not _same_env(premise.env, node.conclusion.env):
        return "premise environment differs from the conclusion's"
    if not isinstance(path_side, Path):
        return "conclusion does not select on a path"
    if not isinstance(premise.term, Var) or premise.term.name != path_side.var:
        return "premise must type the path's head variable"
    if not isinstance(premise.ty, Decl) or premise.ty.label != path_side.label:
        return "premise must assign a declaration with the path's label"
    return None


def _check_sel_right(node: DerivationTree) -> Optional[str]:
    # <:-Sel concludes S <: x.A from x : {A: S..T}
    bad = _arity(node, 1)
    if bad:
        return bad
    c = node.conclusion
    bad = _sel_typing_premise(node, c.rhs)
    if bad:
        return bad
    if not alpha_eq_type(node.premises[0].conclusion.ty.lower, c.lhs):
        return "declaration's lower bound differs from the conclusion's left side"
    return None


def _check_sel_left(node: DerivationTree) -> Optional[str]:
    # Sel-<: concludes x.A <: T from x : {A: S..T}
    bad = _arity(node, 1)
    if bad:
        return bad
    c = node.conclusion
    bad = _sel_typing_premise(node, c.lhs)
    if bad:
        return bad
    if not alpha_eq_type(node.premises[0].conclusion.ty.upper, c.rhs):
        return "declaration's upper bound differs from the conclusion's right side"
    return None


def _check_all_sub(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    c = node.conclusion
    if not isinstance(c.lhs, All) or not isinstance(c.rhs, All):
        return "both sides must be function types"
    params, bodies = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(params, SubJ) or not isinstance(bodies, SubJ):
        return "premises must be subtyping judgments"
    if not _same_env(params.env, c.env):
        return "parameter premise environment differs from the conclusion's"
    if not (alpha_eq_type(params.lhs, c.rhs.param_type) and alpha_eq_type(params.rhs, c.lhs.param_type)):
        return "parameter premise is not the contravariant comparison"
    extra = _extends_by_one(bodies.env, c.env)
    if extra is None:
        return "body premise environment must extend the conclusion's by one binding"
    z, bound = extra
    if not alpha_eq_type(bound, c.rhs.param_type):
        return "body premise binds the variable at the wrong type"
    if not alpha_eq_type(bodies.lhs, subst_var_in_type(c.lhs.result, c.lhs.param, z)):
        return "body premise left side does not match the conclusion's"
    if not alpha_eq_type(bodies.rhs, subst_var_in_type(c.rhs.result, c.rhs.param, z)):
        return "body premise right side does not match the conclusion's"
    return None


def _check_typ_sub(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    c = node.conclusion
    if not isinstance(c.lhs, Decl) or not isinstance(c.rhs, Decl) or c.lhs.label != c.rhs.label:
        return "both sides must be declarations with the same label"
    lowers, uppers = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(lowers, SubJ) or not isinstance(uppers, SubJ):
        return "premises must be subtyping judgments"
    if not (_same_env(lowers.env, c.env) and _same_env(uppers.env, c.env)):
        return "premise environments differ from the conclusion's"
    if not (alpha_eq_type(lowers.lhs, c.rhs.lower) and alpha_eq_type(lowers.rhs, c.lhs.lower)):
        return "lower-bound premise is not the contravariant comparison"
    if not (alpha_eq_type(uppers.lhs, c.lhs.upper) and alpha_eq_type(uppers.rhs, c.rhs.upper)):
        return "upper-bound premise is not the covariant comparison"
    return None


def _check_var(node: DerivationTree) -> Optional[str]:
    c = node.conclusion
    if not isinstance(c.term, Var):
        return "term must be a variable"
    stored = c.env.lookup(c.term.name)
    if stored is None:
        return f"variable {c.term.name!r} is unbound"
    if not alpha_eq_type(stored, c.ty):
        return "assigned type differs from the environment's"
    return _arity(node, 0)


def _check_typ_i(node: DerivationTree) -> Optional[str]:
    c = node.conclusion
    if not isinstance(c.term, Tag):
        return "term must be a type tag"
    ok = (
        isinstance(c.ty, Decl)
        and c.ty.label == c.term.label
        and alpha_eq_type(c.ty.lower, c.term.alias)
        and alpha_eq_type(c.ty.upper, c.term.alias)
    )
    if not ok:
        return "assigned type must be the tag's label bounded by its alias on both sides"
    return _arity(node, 0)


def _check_all_i(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 1)
    if bad:
        return bad
    c = node.conclusion
    if not isinstance(c.term, Lam):
        return "term must be a lambda"
    if not isinstance(c.ty, All):
        return "assigned type must be a function type"
    if not alpha_eq_type(c.ty.param_type, c.term.param_type):
        return "function type's parameter differs from the lambda's annotation"
    body = node.premises[0].conclusion
    if not isinstance(body, TypJ):
        return "premise must be a typing judgment"
    extra = _extends_by_one(body.env, c.env)
    if extra is None:
        return "premise environment must extend the conclusion's by one binding"
    z, bound = extra
    if not alpha_eq_type(bound, c.term.param_type):
        return "premise binds the parameter at the wrong type"
    if not alpha_eq_term(body.term, subst_var_in_term(c.term.body, c.term.param, z)):
        return "premise does not type the lambda's body"
    if not alpha_eq_type(body.ty, subst_var_in_type(c.ty.result, c.ty.param, z)):
        return "premise type does not match the function type's result"
    return None


def _check_all_e(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    c = node.conclusion
    if not isinstance(c.term, App):
        return "term must be an application"
    fun, arg = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(fun, TypJ) or not isinstance(arg, TypJ):
        return "premises must be typing judgments"
    if not (_same_env(fun.env, c.env) and _same_env(arg.env, c.env)):
        return "premise environments differ from the conclusion's"
    if not isinstance(fun.term, Var) or fun.term.name != c.term.fun:
        return "first premise must type the function variable"
    if not isinstance(arg.term, Var) or arg.term.name != c.term.arg:
        return "second premise must type the argument variable"
    if not isinstance(fun.ty, All):
        return "function premise must assign a function type"
    if not alpha_eq_type(arg.ty, fun.ty.param_type):
        return "argument type differs from the parameter type"
    expected = subst_var_in_type(fun.ty.result, fun.ty.param, c.term.arg)
    if not alpha_eq_type(c.ty, expected):
        return "assigned type is not the instantiated result type"
    return None


def _check_let(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    c = node.conclusion
    if not isinstance(c.term, Let):
        return "term must be a let"
    rhs, body = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(rhs, TypJ) or not isinstance(body, TypJ):
        return "premises must be typing judgments"
    if not _same_env(rhs.env, c.env):
        return "right-hand-side premise environment differs from the conclusion's"
    if not alpha_eq_term(rhs.term, c.term.rhs):
        return "first premise does not type the bound expression"
    extra = _extends_by_one(body.env, c.env)
    if extra is None:
        return "body premise environment must extend the conclusion's by one binding"
    z, bound = extra
    if not alpha_eq_type(bound, rhs.ty):
        return "body premise binds the variable at a different type"
    if not alpha_eq_term(body.term, subst_var_in_term(c.term.body, c.term.bound, z)):
        return "body premise does not type the let body"
    if z in fv_type(body.ty):
        return "bound variable escapes in the body's type"
    if not alpha_eq_type(body.ty, c.ty):
        return "assigned type differs from the body's type"
    return None


def _check_sub(node: DerivationTree) -> Optional[str]:
    bad = _arity(node, 2)
    if bad:
        return bad
    c = node.conclusion
    typing, widening = node.premises[0].conclusion, node.premises[1].conclusion
    if not isinstance(typing, TypJ) or not isinstance(widening, SubJ):
        return "premises must be a typing judgment then a subtyping judgment"
    if not (_same_env(typing.env, c.env) and _same_env(widening.env, c.env)):
        return "premise environments differ from the conclusion's"
    if not alpha_eq_term(typing.term, c.term):
        return "typing premise is about a different term"
    if not alpha_eq_type(widening.lhs, typing.ty):
        return "subtyping premise does not start at the premise type"
    if not alpha_eq_type(widening.rhs, c.ty):
        return "subtyping premise does not end at the assigned type"
    return None


_SUB_CHECKERS = {
    "Top": _check_top,
    "Bot": _check_bot,
    "Refl": _check_refl,
    "Trans": _check_trans,
    "<:-Sel": _check_sel_right,
    "Sel-<:": _check_sel_left,
    "All-<:-All": _check_all_sub,
    "Typ-<:-Typ": _check_typ_sub,
}

_TYP_CHECKERS = {
    "Var": _check_var,
    "Typ-I": _check_typ_i,
    "All-I": _check_all_i,
    "All-E": _check_all_e,
    "Let": _check_let,
    "Sub": _check_sub,
}


# ---------------------------------------------------------------------------
# Bounded search


class DeclSearcher:
    """Fuel-bounded backward search over the declarative rules.

    Midpoints for Trans/Sub (and the unknown bound in the Sel rules) are
    drawn from a finite candidate set: Top, Bot, subterms of the goal's
    types, environment types and their subterms, exposures of the paths in
    that set, and each environment variable's own selection when its type
    exposes to a declaration.  Results are memoized per (judgment, fuel);
    anything found is verified sound by construction.
    """

    def __init__(self) -> None:
        self._memo: dict = {}

    def search(self, goal: Judgment, fuel: int) -> Optional[DerivationTree]:
        if fuel <= 0:
            return None
        key = (goal.key(), fuel)
        if key in self._memo:
            return self._memo[key]
        self._memo[key] = None  # cycles within the same fuel budget fail
        found = self._search_sub(goal, fuel) if isinstance(goal, SubJ) else self._search_typ(goal, fuel)
        self._memo[key] = found
        return found

    # -- candidates

    def _candidates(self, goal: Judgment) -> tuple:
        scope = goal.env.dom()
        seen: dict = {}

        def add(t: Type) -> None:
            if fv_type(t) - scope:
                return  # candidates must stay well-scoped in the goal's env
            seen.setdefault(canon_type(t), t)

        def add_subterms(t: Type) -> None:
            add(t)
            match t:
                case Decl(lower=lo, upper=hi):
                    add_subterms(lo)
                    add_subterms(hi)
                case All(param_type=s, result=u):
                    add_subterms(s)
                    add_subterms(u)

        add(Top())
        add(Bot())
        if isinstance(goal, SubJ):
            add_subterms(goal.lhs)
            add_subterms(goal.rhs)
        else:
            add_subterms(goal.ty)
        for x, stored in goal.env:
            add_subterms(stored)
            head = expose(goal.env, stored)
            if isinstance(head, Exposed) and isinstance(head.ty, Decl):
                add(Path(x, head.ty.label))
        for t in list(seen.values()):
            if isinstance(t, Path):
                result = expose(goal.env, t)
                if isinstance(result, Exposed):
                    add(result.ty)
        ordered = sorted(seen.values(), key=lambda t: (type_size(t), canon_type(t)))
        return tuple(ordered)

    # -- subtyping goals

    def _search_sub(self, goal: SubJ, fuel: int) -> Optional[DerivationTree]:
        g, lhs, rhs = goal.env, goal.lhs, goal.rhs
        if isinstance(rhs, Top):
            return DerivationTree("Top", goal)
        if isinstance(lhs, Bot):
            return DerivationTree("Bot", goal)
        if alpha_eq_type(lhs, rhs):
            return DerivationTree("Refl", goal)

        if isinstance(lhs, Decl) and isinstance(rhs, Decl) and lhs.label == rhs.label:
            lowers = self.search(SubJ(g, rhs.lower, lhs.lower), fuel - 1)
            if lowers is not None:
                uppers = self.search(SubJ(g, lhs.upper, rhs.upper), fuel - 1)
                if uppers is not None:
                    return DerivationTree("Typ-<:-Typ", goal, (lowers, uppers))

        if isinstance(lhs, All) and isinstance(rhs, All):
            params = self.search(SubJ(g, rhs.param_type, lhs.param_type), fuel - 1)
            if params is not None:
                avoid = g.dom() | (fv_type(lhs.result) - {lhs.param}) | (fv_type(rhs.result) - {rhs.param})
                z = fresh_name(lhs.param, avoid)
                inner = SubJ(
                    g.extend(z, rhs.param_type),
                    subst_var_in_type(lhs.result, lhs.param, z),
                    subst_var_in_type(rhs.result, rhs.param, z),
                )
                bodies = self.search(inner, fuel - 1)
                if bodies is not None:
                    return DerivationTree("All-<:-All", goal, (params, bodies))

        candidates = self._candidates(goal)

        if isinstance(lhs, Path):
            # Sel-<:: x.A <: rhs via a typing x : {A: S..rhs}, S guessed
            for lower in candidates:
                premise = self._sel_premise(g, lhs.var, Decl(lhs.label, lower, rhs), fuel)
                if premise is not None:
                    return DerivationTree("Sel-<:", goal, (premise,))

        if isinstance(rhs, Path):
            # <:-Sel: lhs <: x.A via a typing x : {A: lhs..T}, T guessed
            for upper in candidates:
                premise = self._sel_premise(g, rhs.var, Decl(rhs.label, lhs, upper), fuel)
                if premise is not None:
                    return DerivationTree("<:-Sel", goal, (premise,))

        for mid in candidates:
            if alpha_eq_type(mid, lhs) or alpha_eq_type(mid, rhs):
                continue
            left = self.search(SubJ(g, lhs, mid), fuel - 1)
            if left is None:
                continue
            right = self.search(SubJ(g, mid, rhs), fuel - 1)
            if right is not None:
                return DerivationTree("Trans", goal, (left, right))
        return None

    def _sel_premise(self, g: TypeEnv, var: str, decl: Decl, fuel: int):
        try:
            premise = TypJ(g, Var(var), decl)
        except ValueError:
            return None
        return self.search(premise, fuel - 1)

    # -- typing goals

    def _search_typ(self, goal: TypJ, fuel: int) -> Optional[DerivationTree]:
        g, term, ty = goal.env, goal.term, goal.ty

        match term:
            case Var(name=x):
                stored = g.lookup(x)
                if stored is not None and alpha_eq_type(stored, ty):
                    return DerivationTree("Var", goal)
            case Tag(label=a, alias=alias):
                if (
                    isinstance(ty, Decl)
                    and ty.label == a
                    and alpha_eq_type(ty.lower, alias)
                    and alpha_eq_type(ty.upper, alias)
                ):
                    return DerivationTree("Typ-I", goal)
            case Lam(param=x, param_type=annot, body=body):
                if isinstance(ty, All) and alpha_eq_type(ty.param_type, annot):
                    avoid = g.dom() | (fv_term(body) - {x}) | (fv_type(ty.result) - {ty.param})
                    z = fresh_name(x, avoid)
                    try:
                        inner = TypJ(
                            g.extend(z, annot),
                            subst_var_in_term(body, x, z),
                            subst_var_in_type(ty.result, ty.param, z),
                        )
                    except (ValueError, DsubError):
                        inner = None
                    if inner is not None:
                        premise = self.search(inner, fuel - 1)
                        if premise is not None:
                            return DerivationTree("All-I", goal, (premise,))
            case App(fun=f, arg=a):
                for fun_ty in self._candidates(goal):
                    if not isinstance(fun_ty, All):
                        continue
                    if not alpha_eq_type(subst_var_in_type(fun_ty.result, fun_ty.param, a), ty):
                        continue
                    try:
                        fun_goal = TypJ(g, Var(f), fun_ty)
                        arg_goal = TypJ(g, Var(a), fun_ty.param_type)
                    except ValueError:
                        continue
                    fun_premise = self.search(fun_goal, fuel - 1)
                    if fun_premise is None:
                        continue
                    arg_premise = self.search(arg_goal, fuel - 1)
                    if arg_premise is not None:
                        return DerivationTree("All-E", goal, (fun_premise, arg_premise))
            case Let(bound=x, rhs=rhs, body=body):
                if x not in fv_type(ty):
                    for rhs_ty in self._candidates(goal):
                        try:
                            rhs_goal = TypJ(g, rhs, rhs_ty)
                        except ValueError:
                            continue
                        rhs_premise = self.search(rhs_goal, fuel - 1)
                        if rhs_premise is None:
                            continue
                        avoid = g.dom() | (fv_term(body) - {x}) | fv_type(ty)
                        z = fresh_name(x, avoid)
                        try:
                            body_goal = TypJ(
                                g.extend(z, rhs_ty), subst_var_in_term(body, x, z), ty
                            )
                        except (ValueError, DsubError):
                            continue
                        body_premise = self.search(body_goal, fuel - 1)
                        if body_premise is not None:
                            return DerivationTree("Let", goal, (rhs_premise, body_premise))

        for mid in self._candidates(goal):
            if alpha_eq_type(mid, ty):
                continue
            try:
                typing_goal = TypJ(g, term, mid)
            except ValueError:
                continue
            typing = self.search(typing_goal, fuel - 1)
            if typing is None:
                continue
            widening = self.search(SubJ(g, mid, ty), fuel - 1)
            if widening is not None:
                return DerivationTree("Sub", goal, (typing, widening))
        return None


def decl_search(goal: Judgment, fuel: int, searcher: Optional[DeclSearcher] = None):
    """Find a derivation of ``goal`` within ``fuel`` nesting depth, or None.

    None means "not found with this strategy and budget", never "underivable".
    """
    if searcher is None:
        searcher = DeclSearcher()
    return searcher.search(goal, fuel)


# ---------------------------------------------------------------------------
# Elaboration of algorithmic traces


def elaborate_step(trace: StepTrace) -> DerivationTree:
    """Turn a step trace into a declarative derivation of the corresponding
    judgment.  Raises :class:`ElaborationGap` on a node this function cannot
    map; that never happens for traces produced by this package."""
    handler = _ELABORATORS.get(trace.rule)
    if handler is None:
        raise ElaborationGap(f"no declarative mapping for trace rule {trace.rule!r}")
    return handler(trace)


def elaborate_exposure(g: TypeEnv, t: Type, result) -> DerivationTree:
    """Derivation of ``t <: result`` for a completed exposure.

    ``result`` may be the :class:`Exposed` outcome or the bare exposed type.
    """
    expected = result.ty if isinstance(result, Exposed) else result
    redone = expose(g, t)
    if not isinstance(redone, Exposed) or not alpha_eq_type(redone.ty, expected):
        raise ElaborationGap("exposure result does not match a fresh computation")
    return elaborate_step(redone.trace)


def elaborate_shift(g: TypeEnv, t: Type, x: str, result, direction: str) -> DerivationTree:
    """Derivation for a completed promotion (``t <: result``) or demotion
    (``result <: t``); ``direction`` is "promote" or "demote"."""
    from .bounds_shift import demote as _demote, promote as _promote

    if direction == "promote":
        redone = _promote(g, t, x)
    elif direction == "demote":
        redone = _demote(g, t, x)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    expected = result.ty if hasattr(result, "ty") else result
    if not hasattr(redone, "ty") or not alpha_eq_type(redone.ty, expected):
        raise ElaborationGap(f"{direction} result does not match a fresh computation")
    return elaborate_step(redone.trace)


def _sub_tree(rule: str, g: TypeEnv, lhs: Type, rhs: Type, premises: tuple = ()) -> DerivationTree:
    return DerivationTree(rule, SubJ(g, lhs, rhs), premises)


def _typ_tree(rule: str, g: TypeEnv, term: Term, ty: Type, premises: tuple = ()) -> DerivationTree:
    return DerivationTree(rule, TypJ(g, term, ty), premises)


def _trans(g: TypeEnv, first: DerivationTree, second: DerivationTree) -> DerivationTree:
    return _sub_tree("Trans", g, first.conclusion.lhs, second.conclusion.rhs, (first, second))


def _var_at_decl(g: TypeEnv, x: str, decl: Decl, stored_deriv: DerivationTree) -> DerivationTree:
    """x : decl via Var at the stored type then one subsumption step."""
    stored = g.lookup(x)
    var_node = _typ_tree("Var", g, Var(x), stored)
    if alpha_eq_type(stored, decl):
        return var_node
    return _typ_tree("Sub", g, Var(x), decl, (var_node, stored_deriv))


def _bot_bridge(g: TypeEnv, x: str, head_deriv: DerivationTree, decl: Decl) -> DerivationTree:
    """From ``stored <: Bot`` (``head_deriv``) build ``x : decl`` for any
    declaration, by widening through Bot."""
    bot_to_decl = _sub_tree("Bot", g, Bot(), decl)
    return _var_at_decl(g, x, decl, _trans(g, head_deriv, bot_to_decl))


def _elab_x_other(trace: StepTrace) -> DerivationTree:
    src, out = trace.parts
    return _sub_tree("Refl", trace.env, src, out)


def _elab_x_bot(trace: StepTrace) -> DerivationTree:
    path, _ = trace.parts
    g = trace.env
    head = elaborate_step(trace.children[0])  # stored <: Bot
    decl = Decl(path.label, Top(), Bot())
    typing = _bot_bridge(g, path.var, head, decl)
    return _sub_tree("Sel-<:", g, path, Bot(), (typing,))


def _elab_x_path(trace: StepTrace) -> DerivationTree:
    path, out = trace.parts
    g = trace.env
    head_trace, tail_trace = trace.children
    decl = head_trace.parts[1]
    head = elaborate_step(head_trace)  # stored <: {A: S..U}
    typing = _var_at_decl(g, path.var, decl, head)
    to_upper = _sub_tree("Sel-<:", g, path, decl.upper, (typing,))
    if alpha_eq_type(decl.upper, out):
        return to_upper
    tail = elaborate_step(tail_trace)  # upper <: out
    return _trans(g, to_upper, tail)


def _elab_shift_identity(trace: StepTrace) -> DerivationTree:
    src, _, out = trace.parts
    return _sub_tree("Refl", trace.env, src, out)


def _elab_p_up(trace: StepTrace) -> DerivationTree:
    path, _, out = trace.parts
    g = trace.env
    head_trace = trace.children[0]
    decl = head_trace.parts[1]
    typing = _var_at_decl(g, path.var, decl, elaborate_step(head_trace))
    return _sub_tree("Sel-<:", g, path, out, (typing,))


def _elab_p_up_bot(trace: StepTrace) -> DerivationTree:
    path, _, _ = trace.parts
    g = trace.env
    head = elaborate_step(trace.children[0])
    decl = Decl(path.label, Top(), Bot())
    typing = _bot_bridge(g, path.var, head, decl)
    return _sub_tree("Sel-<:", g, path, Bot(), (typing,))


def _elab_d_down(trace: StepTrace) -> DerivationTree:
    path, _, out = trace.parts
    g = trace.env
    head_trace = trace.children[0]
    decl = head_trace.parts[1]
    typing = _var_at_decl(g, path.var, decl, elaborate_step(head_trace))
    return _sub_tree("<:-Sel", g, out, path, (typing,))


def _elab_d_down_bot(trace: StepTrace) -> DerivationTree:
    path, _, _ = trace.parts
    g = trace.env
    head = elaborate_step(trace.children[0])
    decl = Decl(path.label, Top(), Bot())
    typing = _bot_bridge(g, path.var, head, decl)
    return _sub_tree("<:-Sel", g, Top(), path, (typing,))


def _elab_p_decl(trace: StepTrace) -> DerivationTree:
    src, _, out = trace.parts
    g = trace.env
    lowers = elaborate_step(trace.children[0])  # demote: out.lower <: src.lower
    uppers = elaborate_step(trace.children[1])  # promote: src.upper <: out.upper
    return _sub_tree("Typ-<:-Typ", g, src, out, (lowers, uppers))


def _elab_d_decl(trace: StepTrace) -> DerivationTree:
    src, _, out = trace.parts
    g = trace.env
    lowers = elaborate_step(trace.children[0])  # promote: src.lower <: out.lower
    uppers = elaborate_step(trace.children[1])  # demote: out.upper <: src.upper
    return _sub_tree("Typ-<:-Typ", g, out, src, (lowers, uppers))


def _elab_p_lam(trace: StepTrace) -> DerivationTree:
    src, _, out = trace.parts
    g = trace.env
    params = elaborate_step(trace.children[0])  # demote: out.param <: src.param
    bodies = elaborate_step(trace.children[1])  # promote under (y: out.param)
    return _sub_tree("All-<:-All", g, src, out, (params, bodies))


def _elab_d_lam(trace: StepTrace) -> DerivationTree:
    src, _, out = trace.parts
    g = trace.env
    params = elaborate_step(trace.children[0])  # promote: src.param <: out.param
    bodies = elaborate_step(trace.children[1])  # demote under (y: src.param)
    return _sub_tree("All-<:-All", g, out, src, (params, bodies))


def _elab_s_axiom(rule: str):
    def handler(trace: StepTrace) -> DerivationTree:
        lhs, rhs = trace.parts
        return _sub_tree(rule, trace.env, lhs, rhs)

    return handler


def _elab_s_typ(trace: StepTrace) -> DerivationTree:
    lhs, rhs = trace.parts
    lowers = elaborate_step(trace.children[0])
    uppers = elaborate_step(trace.children[1])
    return _sub_tree("Typ-<:-Typ", trace.env, lhs, rhs, (lowers, uppers))


def _elab_s_all(trace: StepTrace) -> DerivationTree:
    lhs, rhs = trace.parts
    g = trace.env
    inner = elaborate_step(trace.children[0])
    # parameter types agree up to alpha in a step trace
    params = _sub_tree("Refl", g, rhs.param_type, lhs.param_type)
    return _sub_tree("All-<:-All", g, lhs, rhs, (params, inner))


def _elab_s_sel_left(trace: StepTrace) -> DerivationTree:
    # S-<:-Sel: x.A <: U through the exposed declaration's upper bound
    lhs, rhs = trace.parts
    g = trace.env
    head_trace, inner_trace = trace.children
    decl = head_trace.parts[1]
    typing = _var_at_decl(g, lhs.var, decl, elaborate_step(head_trace))
    to_upper = _sub_tree("Sel-<:", g, lhs, decl.upper, (typing,))
    inner = elaborate_step(inner_trace)  # upper <: rhs
    if alpha_eq_type(decl.upper, rhs):
        return to_upper
    return _trans(g, to_upper, inner)


def _elab_s_sel_right(trace: StepTrace) -> DerivationTree:
    # S-Sel-<:: U <: x.A through the exposed declaration's lower bound
    lhs, rhs = trace.parts
    g = trace.env
    head_trace, inner_trace = trace.children
    decl = head_trace.parts[1]
    typing = _var_at_decl(g, rhs.var, decl, elaborate_step(head_trace))
    from_lower = _sub_tree("<:-Sel", g, decl.lower, rhs, (typing,))
    inner = elaborate_step(inner_trace)  # lhs <: lower
    if alpha_eq_type(decl.lower, lhs):
        return from_lower
    return _trans(g, inner, from_lower)


def _elab_s_bot_left(trace: StepTrace) -> DerivationTree:
    # S-<:-Bot: x.A <: U because the head exposes to Bot
    lhs, rhs = trace.parts
    g = trace.env
    head = elaborate_step(trace.children[0])
    decl = Decl(lhs.label, Top(), rhs)
    typing = _bot_bridge(g, lhs.var, head, decl)
    return _sub_tree("Sel-<:", g, lhs, rhs, (typing,))


def _elab_s_bot_right(trace: StepTrace) -> DerivationTree:
    # S-Bot-<:: U <: x.A because the head exposes to Bot
    lhs, rhs = trace.parts
    g = trace.env
    head = elaborate_step(trace.children[0])
    decl = Decl(rhs.label, lhs, Top())
    typing = _bot_bridge(g, rhs.var, head, decl)
    return _sub_tree("<:-Sel", g, lhs, rhs, (typing,))


def _elab_t_var(trace: StepTrace) -> DerivationTree:
    term, ty = trace.parts
    return _typ_tree("Var", trace.env, term, ty)


def _elab_t_typ_i(trace: StepTrace) -> DerivationTree:
    term, ty = trace.parts
    return _typ_tree("Typ-I", trace.env, term, ty)


def _elab_t_all_i(trace: StepTrace) -> DerivationTree:
    term, ty = trace.parts
    body = elaborate_step(trace.children[0])
    return _typ_tree("All-I", trace.env, term, ty, (body,))


def _elab_t_all_e(trace: StepTrace) -> DerivationTree:
    term, ty = trace.parts
    g = trace.env
    fun_trace, head_trace, arg_trace, sub_trace = trace.children
    fun_ty = head_trace.parts[1]
    fun_deriv = elaborate_step(fun_trace)
    if not alpha_eq_type(fun_deriv.conclusion.ty, fun_ty):
        fun_deriv = _typ_tree("Sub", g, Var(term.fun), fun_ty, (fun_deriv, elaborate_step(head_trace)))
    arg_deriv = elaborate_step(arg_trace)
    param_ty = fun_ty.param_type
    if not alpha_eq_type(arg_deriv.conclusion.ty, param_ty):
        arg_deriv = _typ_tree("Sub", g, Var(term.arg), param_ty, (arg_deriv, elaborate_step(sub_trace)))
    return _typ_tree("All-E", g, term, ty, (fun_deriv, arg_deriv))


def _elab_t_app_bot(trace: StepTrace) -> DerivationTree:
    term, _ = trace.parts
    g = trace.env
    fun_trace, head_trace, arg_trace = trace.children
    arg_deriv = elaborate_step(arg_trace)
    arg_ty = arg_deriv.conclusion.ty
    z = fresh_name("z", g.dom())
    fun_ty = All(z, arg_ty, Bot())
    fun_deriv = elaborate_step(fun_trace)
    to_bot = elaborate_step(head_trace)  # stored <: Bot
    bot_to_fun = _sub_tree("Bot", g, Bot(), fun_ty)
    fun_at = _typ_tree("Sub", g, Var(term.fun), fun_ty, (fun_deriv, _trans(g, to_bot, bot_to_fun)))
    return _typ_tree("All-E", g, term, Bot(), (fun_at, arg_deriv))


def _elab_t_let(trace: StepTrace) -> DerivationTree:
    term, ty = trace.parts
    g = trace.env
    rhs_trace, body_trace, promote_trace = trace.children
    rhs_deriv = elaborate_step(rhs_trace)
    body_deriv = elaborate_step(body_trace)
    inner_env = body_trace.env
    body_term = body_trace.parts[0]
    if not alpha_eq_type(body_deriv.conclusion.ty, ty):
        widening = elaborate_step(promote_trace)  # body type <: promoted type
        body_deriv = _typ_tree("Sub", inner_env, body_term, ty, (body_deriv, widening))
    return _typ_tree("Let", g, term, ty, (rhs_deriv, body_deriv))


_ELABORATORS = {
    "X-Other": _elab_x_other,
    "X-Bot": _elab_x_bot,
    "X-Path": _elab_x_path,
    "P-Var": _elab_shift_identity,
    "P-Bot": _elab_shift_identity,
    "P-Top": _elab_shift_identity,
    "P-Cap": _elab_shift_identity,
    "D-Var": _elab_shift_identity,
    "D-Bot": _elab_shift_identity,
    "D-Top": _elab_shift_identity,
    "D-Cap": _elab_shift_identity,
    "P-Up": _elab_p_up,
    "P-Up-Bot": _elab_p_up_bot,
    "D-Down": _elab_d_down,
    "D-Down-Bot": _elab_d_down_bot,
    "P-Decl": _elab_p_decl,
    "D-Decl": _elab_d_decl,
    "P-Lam": _elab_p_lam,
    "D-Lam": _elab_d_lam,
    "S-Bot": _elab_s_axiom("Bot"),
    "S-Top": _elab_s_axiom("Top"),
    "S-Refl": _elab_s_axiom("Refl"),
    "S-Typ-<:-Typ": _elab_s_typ,
    "S-All-<:-All": _elab_s_all,
    "S-<:-Sel": _elab_s_sel_left,
    "S-Sel-<:": _elab_s_sel_right,
    "S-<:-Bot": _elab_s_bot_left,
    "S-Bot-<:": _elab_s_bot_right,
    "T-Var": _elab_t_var,
    "T-Typ-I": _elab_t_typ_i,
    "T-All-I": _elab_t_all_i,
    "T-All-E": _elab_t_all_e,
    "T-App-Bot": _elab_t_app_bot,
    "T-Let": _elab_t_let,
}


# ---------------------------------------------------------------------------
# JSON serialization


def judgment_to_json(j: Judgment) -> dict:
    env = [[x, print_type(t)] for x, t in j.env]
    if isinstance(j, SubJ):
        return {"kind": "sub", "env": env, "lhs": print_type(j.lhs), "rhs": print_type(j.rhs)}
    return {"kind": "typ", "env": env, "term": print_term(j.term), "type": print_type(j.ty)}


def derivation_to_json(tree: DerivationTree) -> dict:
    return {
        "rule": tree.rule,
        "judgment": judgment_to_json(tree.conclusion),
        "premises": [derivation_to_json(p) for p in tree.premises],
    }


def judgment_from_json(data: dict) -> Judgment:
    env = env_from_bindings((x, parse_type(t)) for x, t in data["env"])
    if data["kind"] == "sub":
        return SubJ(env, parse_type(data["lhs"]), parse_type(data["rhs"]))
    if data["kind"] == "typ":
        return TypJ(env, parse_term(data["term"]), parse_type(data["type"]))
    raise ValueError(f"unknown judgment kind {data['kind']!r}")


def derivation_from_json(data: dict) -> DerivationTree:
    rule = data["rule"]
    if rule not in SUB_RULES | TYP_RULES:
        raise ValueError(f"unknown rule {rule!r}")
    return DerivationTree(
        rule,
        judgment_from_json(data["judgment"]),
        tuple(derivation_from_json(p) for p in data.get("premises", ())),
    )
