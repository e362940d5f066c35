import json

import pytest

from dsub.declarative import (
    DeclSearcher,
    DerivationTree,
    SubJ,
    TypJ,
    decl_search,
    decl_verify,
    derivation_from_json,
    derivation_to_json,
    elaborate_step,
)
from dsub.environment import TypeEnv, env_from_bindings
from dsub.lab import (
    BAD_BOUNDS_DECL,
    DECL_V,
    FUN_VV,
    FUN_VZ,
    Enumerator,
    bad_bounds_env,
    body_typing_narrow,
    body_typing_wide,
    fun_bounds_bridge,
)
from dsub.step import Typed, step_subtype, step_type
from dsub.syntax import (
    All,
    Bot,
    Decl,
    Lam,
    Path,
    Tag,
    Top,
    Var,
    alpha_eq_type,
    parse_term,
)

EMPTY = TypeEnv.empty()


def _env(*pairs):
    return env_from_bindings(pairs)


# ---------------------------------------------------------------------------
# decl_verify


def test_verify_top_axiom():
    assert decl_verify(DerivationTree("Top", SubJ(EMPTY, Bot(), Top()))).ok


def test_verify_rejects_misapplied_axiom():
    result = decl_verify(DerivationTree("Top", SubJ(EMPTY, Top(), Bot())))
    assert not result.ok
    assert result.path == "root"


def test_verify_rejects_unknown_rule():
    tree = DerivationTree.__new__(DerivationTree)
    object.__setattr__(tree, "rule", "Guess")
    object.__setattr__(tree, "conclusion", SubJ(EMPTY, Bot(), Top()))
    object.__setattr__(tree, "premises", ())
    assert not decl_verify(tree).ok


def test_verify_bridge_through_member():
    assert decl_verify(fun_bounds_bridge()).ok


def test_verify_locates_broken_premise():
    g = bad_bounds_env()
    var_e = DerivationTree("Var", TypJ(g, Var("e"), BAD_BOUNDS_DECL))
    good = DerivationTree("<:-Sel", SubJ(g, FUN_VV, Path("e", "E")), (var_e,))
    bad_inner = DerivationTree("Sel-<:", SubJ(g, Path("e", "E"), FUN_VV), (var_e,))
    tree = DerivationTree("Trans", SubJ(g, FUN_VV, FUN_VV), (good, bad_inner))
    result = decl_verify(tree)
    assert not result.ok
    assert result.path == "root.premises[1]"


def test_verify_trans_midpoint_must_agree():
    top1 = DerivationTree("Top", SubJ(EMPTY, Bot(), Top()))
    bot1 = DerivationTree("Bot", SubJ(EMPTY, Bot(), Bot()))
    tree = DerivationTree("Trans", SubJ(EMPTY, Bot(), Bot()), (top1, bot1))
    result = decl_verify(tree)
    assert not result.ok and "midpoint" in result.message


def test_verify_var_requires_matching_type():
    g = _env(("x", Top()))
    assert decl_verify(DerivationTree("Var", TypJ(g, Var("x"), Top()))).ok
    assert not decl_verify(DerivationTree("Var", TypJ(g, Var("x"), Bot()))).ok


def test_verify_typ_i():
    tree = DerivationTree("Typ-I", TypJ(EMPTY, Tag("A", Top()), Decl("A", Top(), Top())))
    assert decl_verify(tree).ok
    bad = DerivationTree("Typ-I", TypJ(EMPTY, Tag("A", Top()), Decl("A", Bot(), Top())))
    assert not decl_verify(bad).ok


def test_verify_all_i_alpha_insensitive():
    lam = Lam("x", Top(), Var("x"))
    inner = DerivationTree("Var", TypJ(_env(("q", Top())), Var("q"), Top()))
    tree = DerivationTree("All-I", TypJ(EMPTY, lam, All("y", Top(), Top())), (inner,))
    assert decl_verify(tree).ok


def test_verify_let():
    # the bound variable's non-escape condition is subsumed by judgment
    # scoping: an escaping type could not appear in a well-scoped conclusion
    g = EMPTY
    rhs = DerivationTree("Typ-I", TypJ(g, Tag("A", Top()), Decl("A", Top(), Top())))
    g_x = g.extend("x", Decl("A", Top(), Top()))
    body = DerivationTree("Var", TypJ(g_x, Var("x"), Decl("A", Top(), Top())))
    term = parse_term("let x = {A = Top} in x")
    tree = DerivationTree("Let", TypJ(g, term, Decl("A", Top(), Top())), (rhs, body))
    assert decl_verify(tree).ok
    # binding the variable at a type other than the right-hand side's fails
    body_wrong = DerivationTree("Var", TypJ(g.extend("x", Top()), Var("x"), Top()))
    tree_wrong = DerivationTree("Let", TypJ(g, term, Top()), (rhs, body_wrong))
    assert not decl_verify(tree_wrong).ok


def test_verify_full_all_rule_contravariance():
    g = EMPTY
    lhs = All("x", Top(), Top())
    rhs = All("x", Bot(), Top())
    params = DerivationTree("Bot", SubJ(g, Bot(), Top()))
    bodies = DerivationTree("Top", SubJ(g.extend("x", Bot()), Top(), Top()))
    tree = DerivationTree("All-<:-All", SubJ(g, lhs, rhs), (params, bodies))
    assert decl_verify(tree).ok
    # body premise must live under the narrower (right) parameter type
    bodies_wrong = DerivationTree("Top", SubJ(g.extend("x", Top()), Top(), Top()))
    tree_wrong = DerivationTree("All-<:-All", SubJ(g, lhs, rhs), (params, bodies_wrong))
    assert not decl_verify(tree_wrong).ok


# ---------------------------------------------------------------------------
# decl_search


def test_search_axioms_at_fuel_one():
    tree = decl_search(SubJ(EMPTY, Bot(), Top()), 1)
    assert tree is not None and tree.rule == "Top"
    assert decl_verify(tree).ok


def test_search_finds_bridge_within_fuel_six():
    tree = decl_search(SubJ(bad_bounds_env(), FUN_VV, FUN_VZ), 6)
    assert tree is not None
    assert decl_verify(tree).ok
    assert tree.rule == "Trans"


def test_search_top_below_bot_unknown():
    assert decl_search(SubJ(EMPTY, Top(), Bot()), 8) is None


def test_search_typing_by_variable():
    g = bad_bounds_env()
    tree = decl_search(TypJ(g, Var("e"), BAD_BOUNDS_DECL), 3)
    assert tree is not None and tree.rule == "Var"


def test_search_monotone_in_fuel():
    goals = [
        SubJ(bad_bounds_env(), FUN_VV, FUN_VZ),
        SubJ(EMPTY, Bot(), Top()),
        SubJ(bad_bounds_env(), DECL_V, DECL_V),
        TypJ(bad_bounds_env(), Var("e"), BAD_BOUNDS_DECL),
    ]
    for goal in goals:
        found_at = None
        for fuel in range(1, 10):
            tree = decl_search(goal, fuel, DeclSearcher())
            if tree is not None:
                found_at = found_at or fuel
                assert decl_verify(tree).ok
            if found_at is not None:
                assert tree is not None, f"lost at fuel {fuel} after finding at {found_at}"


def test_search_results_always_verify():
    g = _env(("x", Decl("A", Bot(), Top())))
    enum = Enumerator(labels=("A", "B"))
    searcher = DeclSearcher()
    found = 0
    for s in enum.types(3, ("x",)):
        for t in enum.types(3, ("x",)):
            tree = searcher.search(SubJ(g, s, t), 4)
            if tree is not None:
                found += 1
                verdict = decl_verify(tree)
                assert verdict.ok, f"{verdict.path}: {verdict.message}"
    assert found > 100


def test_search_deterministic():
    goal = SubJ(bad_bounds_env(), FUN_VV, FUN_VZ)
    a = decl_search(goal, 6, DeclSearcher())
    b = decl_search(goal, 6, DeclSearcher())
    assert a == b


# ---------------------------------------------------------------------------
# Elaboration


def test_elaborate_bot_axiom():
    result = step_subtype(EMPTY, Bot(), Top())
    tree = elaborate_step(result.trace)
    assert tree.rule == "Bot"
    assert decl_verify(tree).ok


def test_elaborate_subtype_traces_on_enumerated_pairs():
    g = _env(("x", Decl("A", Bot(), Top())), ("y", Decl("B", Path("x", "A"), Top())))
    enum = Enumerator(labels=("A", "B"))
    types = list(enum.types(3, ("x", "y")))
    checked = 0
    for s in types:
        for t in types:
            result = step_subtype(g, s, t)
            if result.holds:
                tree = elaborate_step(result.trace)
                assert alpha_eq_type(tree.conclusion.lhs, s)
                assert alpha_eq_type(tree.conclusion.rhs, t)
                verdict = decl_verify(tree)
                assert verdict.ok, f"{verdict.path}: {verdict.message}"
                checked += 1
    assert checked > 900


def test_elaborate_typing_traces():
    cases = [
        (EMPTY, "lam(x: Top) x"),
        (EMPTY, "{A = Top}"),
        (EMPTY, "let x = {A = Top} in lam(y: x.A) y"),
        (EMPTY, "lam(x: Bot) lam(y: Top) x y"),
        (EMPTY, "lam(f: all(z: Top) z.A) lam(y: Top) f y"),
        (bad_bounds_env(), "let f = lam(b: {V: Top .. Top}) b in let b1 = {V = Top} in f b1"),
    ]
    for g, text in cases:
        outcome = step_type(g, parse_term(text))
        assert isinstance(outcome, Typed), text
        tree = elaborate_step(outcome.trace)
        assert alpha_eq_type(tree.conclusion.ty, outcome.ty)
        verdict = decl_verify(tree)
        assert verdict.ok, f"{text}: {verdict.path}: {verdict.message}"


def test_shipped_minimality_trees_verify():
    assert decl_verify(body_typing_narrow()).ok
    assert decl_verify(body_typing_wide()).ok


# ---------------------------------------------------------------------------
# JSON


def test_json_roundtrip():
    tree = fun_bounds_bridge()
    data = derivation_to_json(tree)
    back = derivation_from_json(json.loads(json.dumps(data)))
    assert decl_verify(back).ok
    assert back == tree


def test_json_rejects_unknown_rule():
    with pytest.raises(ValueError):
        derivation_from_json(
            {"rule": "Guess", "judgment": {"kind": "sub", "env": [], "lhs": "Top", "rhs": "Top"}}
        )


def test_judgment_validation_rejects_unbound():
    with pytest.raises(ValueError):
        SubJ(EMPTY, Path("x", "A"), Top())
