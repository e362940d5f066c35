import pytest

from dsub.declarative import decl_verify
from dsub.environment import TypeEnv, UnboundVariable, env_from_bindings
from dsub.errors import InternalLimit
from dsub.lab import (
    DECL_V,
    DECL_Z,
    FUN_VV,
    FUN_VZ,
    Enumerator,
    bad_bounds_env,
    fun_bounds_bridge,
    minimality_body,
    minimality_term,
)
from dsub.step import Typed, Untypable, step_subtype, step_type, weight
from dsub.syntax import (
    All,
    Bot,
    Decl,
    Path,
    Top,
    alpha_eq_type,
    parse_term,
    print_type,
)


def _env(*pairs):
    return env_from_bindings(pairs)


# ---------------------------------------------------------------------------
# Weight


def test_weight_constants():
    assert weight(TypeEnv.empty(), Top()) == 1
    assert weight(TypeEnv.empty(), Bot()) == 1


def test_weight_decl():
    assert weight(TypeEnv.empty(), Decl("A", Top(), Top())) == 2


def test_weight_path_uses_prefix():
    assert weight(_env(("x", Top())), Path("x", "A")) == 2


def test_weight_function_extends_env():
    assert weight(TypeEnv.empty(), All("x", Top(), Path("x", "A"))) == 3


def test_weight_unbound_path():
    with pytest.raises(UnboundVariable):
        weight(TypeEnv.empty(), Path("x", "A"))


def test_weight_positive_on_enumerated():
    enum = Enumerator()
    g = _env(("x", Decl("A", Bot(), Top())), ("y", Decl("B", Path("x", "A"), Top())))
    for t in enum.types(5, ("x", "y")):
        assert weight(g, t) >= 1


# ---------------------------------------------------------------------------
# Step subtyping


def test_bot_below_everything_and_top_above():
    g = TypeEnv.empty()
    assert step_subtype(g, Bot(), Top()).holds
    assert step_subtype(g, Bot(), Bot()).holds
    assert step_subtype(g, Top(), Top()).holds
    assert not step_subtype(g, Top(), Bot()).holds


def test_path_reflexivity_rule():
    g = _env(("x", Top()))
    # reflexivity applies even when the head is not exposable
    assert step_subtype(g, Path("x", "A"), Path("x", "A")).holds
    assert not step_subtype(g, Path("x", "A"), Path("x", "B")).holds


def test_declaration_bounds_variance():
    g = TypeEnv.empty()
    narrow = Decl("A", Top(), Top())
    wide = Decl("A", Bot(), Top())
    assert step_subtype(g, narrow, wide).holds
    assert not step_subtype(g, wide, narrow).holds
    assert not step_subtype(g, narrow, Decl("B", Top(), Top())).holds


def test_kernel_restriction_requires_equal_parameters():
    g = TypeEnv.empty()
    assert not step_subtype(g, All("x", Top(), Top()), All("x", Bot(), Top())).holds
    assert step_subtype(g, All("x", Top(), Bot()), All("y", Top(), Top())).holds


def test_function_below_member_selection():
    g = bad_bounds_env()
    result = step_subtype(g, FUN_VV, Path("e", "E"))
    assert result.holds
    assert result.trace.rule == "S-Sel-<:"


def test_selection_below_function():
    g = bad_bounds_env()
    assert step_subtype(g, Path("e", "E"), FUN_VZ).holds


def test_no_transitivity_through_member():
    g = bad_bounds_env()
    assert not step_subtype(g, DECL_V, DECL_Z).holds
    assert not step_subtype(g, FUN_VV, FUN_VZ).holds


def test_incompleteness_witness():
    # the step relation rejects a judgment the declarative checker accepts
    g = bad_bounds_env()
    assert not step_subtype(g, FUN_VV, FUN_VZ).holds
    assert decl_verify(fun_bounds_bridge()).ok


def test_bot_headed_paths_relate_both_ways():
    g = _env(("x", Bot()), ("y", Top()))
    assert step_subtype(g, Path("x", "A"), Path("x", "B")).holds
    assert step_subtype(g, Top(), Path("x", "A")).holds
    assert step_subtype(g, Path("x", "A"), Bot()).holds


def test_unbound_variable_yields_diagnostic_not_crash():
    result = step_subtype(TypeEnv.empty(), Path("x", "A"), Bot())
    assert not result.holds
    assert result.diagnostic and "unbound" in result.diagnostic


def test_reflexivity_on_enumerated_sample():
    enum = Enumerator()
    g = _env(("x", Decl("A", Bot(), Top())), ("y", Decl("B", Path("x", "A"), Top())))
    count = 0
    for t in enum.types(5, ("x", "y")):
        assert step_subtype(g, t, t).holds, print_type(t)
        count += 1
    assert count > 10000


def test_depth_valve_is_distinct():
    g = bad_bounds_env()
    with pytest.raises(InternalLimit):
        step_subtype(g, FUN_VV, Path("e", "E"), depth_limit=1)


# ---------------------------------------------------------------------------
# Step typing


def test_type_lambda_identity():
    out = step_type(TypeEnv.empty(), parse_term("lam(x: Top) x"))
    assert isinstance(out, Typed)
    assert alpha_eq_type(out.ty, All("x", Top(), Top()))


def test_type_tag():
    out = step_type(TypeEnv.empty(), parse_term("{A = Top}"))
    assert isinstance(out, Typed)
    assert out.ty == Decl("A", Top(), Top())


def test_type_let_promotes_bound_variable_away():
    out = step_type(TypeEnv.empty(), parse_term("let x = {A = Top} in lam(y: x.A) y"))
    assert isinstance(out, Typed)
    assert alpha_eq_type(out.ty, All("y", Top(), Top()))


def test_type_minimality_body():
    out = step_type(bad_bounds_env(), minimality_body())
    assert isinstance(out, Typed)
    assert alpha_eq_type(out.ty, DECL_V)


def test_type_minimality_term_closed():
    out = step_type(TypeEnv.empty(), minimality_term())
    assert isinstance(out, Typed)
    assert alpha_eq_type(out.ty, All("e", Decl("E", FUN_VV, FUN_VZ), DECL_V))


def test_type_application_of_bot():
    out = step_type(TypeEnv.empty(), parse_term("lam(x: Bot) lam(y: Top) x y"))
    assert isinstance(out, Typed)
    assert alpha_eq_type(out.ty, All("x", Bot(), All("y", Top(), Bot())))


def test_type_application_result_substitutes_argument():
    term = parse_term("lam(f: all(z: Top) z.A) lam(y: Top) f y")
    out = step_type(TypeEnv.empty(), term)
    assert isinstance(out, Typed)
    assert alpha_eq_type(
        out.ty, All("f", All("z", Top(), Path("z", "A")), All("y", Top(), Path("y", "A")))
    )


def test_untypable_application_of_top():
    out = step_type(TypeEnv.empty(), parse_term("lam(f: Top) f f"))
    assert isinstance(out, Untypable)
    assert "function position" in out.reason
    assert out.location == "body"


def test_untypable_argument_mismatch():
    term = parse_term("lam(f: all(z: {A: Top .. Top}) Top) lam(y: Top) f y")
    out = step_type(TypeEnv.empty(), term)
    assert isinstance(out, Untypable)
    assert "not a step subtype" in out.reason


def test_untypable_unbound_variable():
    out = step_type(TypeEnv.empty(), parse_term("x"))
    assert isinstance(out, Untypable)


def test_shadowing_binders_are_renamed():
    g = _env(("x", Decl("A", Bot(), Top())))
    out = step_type(g, parse_term("lam(x: x.A) x"))
    assert isinstance(out, Typed)
    # the parameter annotation refers to the outer x; the binder is freshened
    assert isinstance(out.ty, All)
    assert out.ty.param_type == Path("x", "A")
    assert out.ty.param != "x"


def test_step_typing_deterministic():
    g = bad_bounds_env()
    first = step_type(g, minimality_body())
    second = step_type(g, minimality_body())
    assert isinstance(first, Typed) and isinstance(second, Typed)
    assert alpha_eq_type(first.ty, second.ty)
    assert print_type(first.ty) == print_type(second.ty)


def test_trace_rule_names_are_canonical():
    from dsub.trace import TRACE_RULES

    out = step_type(bad_bounds_env(), minimality_body())

    def walk(node):
        assert node.rule in TRACE_RULES
        for child in node.children:
            walk(child)

    walk(out.trace)
