import pytest
from hypothesis import given, strategies as st

from grasslab.exprcore import ParseError, Rat, VarTable, parse, rat, rat_str, to_str

NAMES = ["a", "b", "p", "q", "lam"]
T = VarTable(NAMES)


def P(text):
    return T.parse(text)


def test_parse_cancels_common_factor():
    assert P("(a^2 - p^2)/(a - p)") == P("a + p")
    assert to_str(P("(a^2 - p^2)/(a - p)")) == "a + p"


def test_parse_cross_multiplies():
    e = P("b/p + p^2/a")
    assert to_str(e.numerator()) == "p^3 + a*b"
    assert to_str(e.denominator()) == "a*p"


def test_minor_prints_back():
    t = VarTable(["u1", "u2", "u3", "v1", "v2", "v3"])
    e = t.parse("u1*v2 - v1*u2")
    assert t.parse(to_str(e)) == e


def test_parse_errors():
    for bad in ["a +", "(a", "a ** 2", "a $ b", "a^b"]:
        with pytest.raises(ParseError):
            P(bad)


def test_unknown_variable_rejected():
    with pytest.raises(ParseError):
        P("zz + 1")


def test_diff():
    assert P("a*q - b*p").diff("a") == P("q")
    assert P("b/p + p^2/a").diff("p") == P("-b/p^2 + 2*p/a")
    assert P("7/3").diff("a").is_zero()


def test_subs():
    assert P("a + p").subs({"a": T.const(0), "p": T.const(0)}).is_zero()
    assert P("a*q - b*p").subs({"q": P("2*b*p/a")}) == P("b*p")
    alpha = Rat(4, 3)
    assert P("a*q - b*p").subs({"q": P("b*p/a") * alpha}) == P("b*p") * (alpha - 1)
    with pytest.raises(ZeroDivisionError):
        P("1/a").subs({"a": T.const(0)})


def test_is_zero():
    assert (P("a*q - b*p") - P("a*q - b*p")).is_zero()
    assert P("(a+p)^2 - a^2 - 2*a*p - p^2").is_zero()
    assert not P("a*q - b*p").is_zero()


def test_evaluate_and_constant():
    e = P("b/p + p^2/a")
    assert e.evaluate({"a": 1, "b": 2, "p": 3}) == Rat(2, 3) + 9
    assert P("3/4").constant_value() == Rat(3, 4)
    assert list(P("a*b/a").free_vars()) == ["b"]


def test_rat_literals():
    assert rat("-3/2") == Rat(-3, 2)
    assert rat_str(Rat(6, 4)) == "3/2"
    with pytest.raises(ValueError):
        rat("1.5")
    with pytest.raises(ZeroDivisionError):
        rat("1/0")


small = st.integers(-4, 4)


@st.composite
def polys(draw):
    e = T.const(draw(small))
    for _ in range(draw(st.integers(1, 4))):
        term = T.const(draw(st.integers(-5, 5)))
        for _ in range(draw(st.integers(0, 4))):
            term = term * T.var(draw(st.sampled_from(NAMES)))
        e = e + term
    return e


@st.composite
def rational_functions(draw):
    den = draw(polys())
    if den.is_zero():
        den = T.const(1)
    return draw(polys()) / den


points = st.fixed_dictionaries(
    {n: st.fractions(min_value=-5, max_value=5, max_denominator=7) for n in NAMES})


@given(polys(), polys())
def test_ring_laws(e1, e2):
    assert e1 * e2 == e2 * e1
    assert (e1 + (-e1)).is_zero()
    assert e1 + e2 == e2 + e1


@given(polys(), polys(), st.sampled_from(NAMES))
def test_leibniz(e1, e2, x):
    assert (e1 * e2).diff(x) == e1.diff(x) * e2 + e1 * e2.diff(x)


@given(rational_functions())
def test_parse_print_roundtrip(e):
    assert parse(to_str(e), T) == e


@given(polys(), polys(), points)
def test_evaluation_homomorphism(e1, e2, pt):
    pt = {k: rat(v) for k, v in pt.items()}
    assert (e1 + e2).evaluate(pt) == e1.evaluate(pt) + e2.evaluate(pt)
    assert (e1 * e2).evaluate(pt) == e1.evaluate(pt) * e2.evaluate(pt)
