import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsub.syntax import (
    All,
    App,
    Bot,
    Decl,
    Lam,
    Let,
    ParseError,
    Path,
    Tag,
    Top,
    Var,
    alpha_eq_term,
    alpha_eq_type,
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
    term_size,
    type_size,
)

# ---------------------------------------------------------------------------
# Free variables


def test_fv_type_no_variables():
    assert fv_type(Top()) == frozenset()
    assert fv_type(Bot()) == frozenset()


def test_fv_type_path():
    assert fv_type(Path("x", "A")) == {"x"}


def test_fv_type_binder_scopes_result_not_param():
    # the param position is outside the binder's scope, the result inside
    assert fv_type(All("x", Path("x", "A"), Path("x", "B"))) == {"x"}
    assert fv_type(All("x", Top(), Path("x", "B"))) == frozenset()


def test_fv_term():
    assert fv_term(Var("x")) == {"x"}
    assert fv_term(Lam("x", Top(), Var("x"))) == frozenset()
    assert fv_term(Let("x", Var("y"), App("x", "z"))) == {"y", "z"}


# ---------------------------------------------------------------------------
# Substitution


def test_subst_path_head():
    assert subst_var_in_type(Path("z", "A"), "z", "y") == Path("y", "A")


def test_subst_identity_on_closed():
    assert subst_var_in_type(Top(), "z", "y") == Top()


def test_subst_avoids_capture():
    before = All("y", Top(), Path("z", "A"))
    after = subst_var_in_type(before, "z", "y")
    # the binder must be renamed before the substitution lands
    assert isinstance(after, All) and after.param != "y"
    assert alpha_eq_type(after, All("w", Top(), Path("y", "A")))


def test_subst_term_renames_shadowing_binder():
    before = Lam("y", Top(), App("z", "y"))
    after = subst_var_in_term(before, "z", "y")
    assert alpha_eq_term(after, Lam("w", Top(), App("y", "w")))


def test_fresh_name_least_counter():
    assert fresh_name("y", set()) == "y"
    assert fresh_name("y", {"y"}) == "y1"
    assert fresh_name("y", {"y", "y1", "y2"}) == "y3"


# ---------------------------------------------------------------------------
# Alpha equivalence


def test_alpha_eq_renamed_binder():
    assert alpha_eq_type(All("x", Top(), Path("x", "A")), All("y", Top(), Path("y", "A")))


def test_alpha_eq_distinguishes_constructors():
    assert not alpha_eq_type(Top(), Bot())


def test_alpha_eq_free_variable_fixed():
    assert alpha_eq_type(All("x", Top(), Path("z", "A")), All("y", Top(), Path("z", "A")))
    assert not alpha_eq_type(All("x", Top(), Path("x", "A")), All("y", Top(), Path("z", "A")))


def test_alpha_eq_shadowing():
    a = All("x", Top(), All("x", Top(), Path("x", "A")))
    b = All("y", Top(), All("z", Top(), Path("z", "A")))
    c = All("y", Top(), All("z", Top(), Path("y", "A")))
    assert alpha_eq_type(a, b)
    assert not alpha_eq_type(a, c)


# ---------------------------------------------------------------------------
# Parse and print


def test_parse_type_atoms():
    assert parse_type("Top") == Top()
    assert parse_type("Bot") == Bot()
    assert parse_type("x.A") == Path("x", "A")


def test_parse_type_decl():
    assert parse_type("{A: Bot .. Top}") == Decl("A", Bot(), Top())


def test_parse_all_extends_right():
    assert parse_type("all(x: Top) all(y: Top) x.A") == All(
        "x", Top(), All("y", Top(), Path("x", "A"))
    )


def test_print_type_all():
    assert print_type(All("x", Top(), Path("x", "A"))) == "all(x: Top) x.A"


def test_parse_term_forms():
    assert parse_term("x") == Var("x")
    assert parse_term("x y") == App("x", "y")
    assert parse_term("{A = Top}") == Tag("A", Top())
    assert parse_term("lam(x: Top) x y") == Lam("x", Top(), App("x", "y"))
    assert parse_term("let x = lam(y: Top) y in x x") == Let(
        "x", Lam("y", Top(), Var("y")), App("x", "x")
    )


def test_parse_comments_and_whitespace():
    text = """
    // leading comment
    {A:   Bot   ..Top}   // trailing
    """
    assert parse_type(text) == Decl("A", Bot(), Top())


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_type("{A: Bot ,, Top}")
    assert exc.value.line == 1
    assert exc.value.col > 1


def test_parse_error_on_trailing_input():
    with pytest.raises(ParseError):
        parse_type("Top Top")


def test_sizes():
    assert type_size(Path("x", "A")) == 1
    assert type_size(Decl("A", Bot(), Top())) == 3
    assert term_size(parse_term("let x = {A = Top} in x")) == 4


# ---------------------------------------------------------------------------
# Property tests

_vars = st.sampled_from(("x", "y", "z", "w"))
_labels = st.sampled_from(("A", "B", "C"))

_types = st.recursive(
    st.one_of(st.builds(Top), st.builds(Bot), st.builds(Path, _vars, _labels)),
    lambda inner: st.one_of(
        st.builds(Decl, _labels, inner, inner),
        st.builds(All, _vars, inner, inner),
    ),
    max_leaves=12,
)

_terms = st.recursive(
    st.one_of(st.builds(Var, _vars), st.builds(App, _vars, _vars), st.builds(Tag, _labels, _types)),
    lambda inner: st.one_of(
        st.builds(Lam, _vars, _types, inner),
        st.builds(Let, _vars, inner, inner),
    ),
    max_leaves=10,
)


def _rename_binders(t, suffix):
    """An alpha-variant with every binder renamed."""
    match t:
        case All(param=x, param_type=s, result=u):
            x2 = x + suffix
            u2 = subst_var_in_type(u, x, x2)
            return All(x2, _rename_binders(s, suffix), _rename_binders(u2, suffix))
        case Decl(label=a, lower=lo, upper=hi):
            return Decl(a, _rename_binders(lo, suffix), _rename_binders(hi, suffix))
        case _:
            return t


@given(_types)
def test_roundtrip_type(t):
    assert alpha_eq_type(parse_type(print_type(t)), t)


@given(_terms)
def test_roundtrip_term(t):
    assert alpha_eq_term(parse_term(print_term(t)), t)


@given(_types)
def test_subst_fv_bound(t):
    result = subst_var_in_type(t, "z", "y")
    assert fv_type(result) <= (fv_type(t) - {"z"}) | {"y"}


@given(_types)
def test_subst_self_is_identity(t):
    assert alpha_eq_type(subst_var_in_type(t, "z", "z"), t)


@given(_types)
def test_alpha_eq_reflexive(t):
    assert alpha_eq_type(t, t)


@given(_types, _types)
def test_alpha_eq_symmetric(a, b):
    assert alpha_eq_type(a, b) == alpha_eq_type(b, a)


@given(_types)
def test_alpha_eq_transitive_through_variants(t):
    b = _rename_binders(t, "0")
    c = _rename_binders(t, "1")
    assert alpha_eq_type(t, b)
    assert alpha_eq_type(b, c)
    assert alpha_eq_type(t, c)


@given(_types)
def test_canon_agrees_with_alpha_variants(t):
    assert canon_type(t) == canon_type(_rename_binders(t, "0"))


@settings(max_examples=50)
@given(_types)
def test_print_is_deterministic(t):
    assert print_type(t) == print_type(t)
