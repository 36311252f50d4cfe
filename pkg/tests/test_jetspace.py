import pytest
from hypothesis import given, strategies as st

from grasslab.exprcore import Rat, to_str
from grasslab.jetspace import (
    BASE, Germ, implicit_table, JetContext, OrderOverflow, SingularJacobian, SystemEvol, SystemImplicit,
    canonical_jet_name, evol_germs, extract_coefficients, implicit_jets,
    reduce_on_solution,
)

CTX = JetContext(4)
DKP = SystemEvol.parse("p", "b - a^2/2", "dkp")
J = CTX.parse


def test_jet_names():
    assert canonical_jet_name("u_x") == "a"
    assert canonical_jet_name("v_xyt") == "v_xyt"
    assert canonical_jet_name("u_yx") is None
    assert J("u_x") == J("a")


def test_total_derivative_examples():
    assert CTX.total_derivative(J("u_y"), "x") == J("u_xy")
    assert CTX.total_derivative(J("-u_x"), "x") == J("-u_xx")
    assert CTX.total_derivative(J("a*q"), "y") == J("u_xy*q + a*v_yy")
    assert CTX.total_derivative(J("3"), "t").is_zero()


def test_total_derivative_order_overflow():
    small = JetContext(2)
    with pytest.raises(OrderOverflow):
        small.total_derivative(small.parse("u_xx"), "y")


def test_reduce_examples():
    lin = SystemEvol.parse("p", "b")
    assert reduce_on_solution(J("u_t"), lin, CTX) == J("p")
    assert reduce_on_solution(J("u_xt"), lin, CTX) == J("v_xx")
    assert reduce_on_solution(J("u_tt"), DKP, CTX) == J("u_xy - a*u_xx")


def test_extract_coefficients():
    co = extract_coefficients(J("u_xx*a + v_xx*b"), 1)
    assert co == {(("u_xx", 1),): J("a"), (("v_xx", 1),): J("b")}
    assert extract_coefficients(J("a*q + 1"), 1) == {(): J("a*q + 1")}


def test_implicit_jets_linear():
    d = implicit_jets(SystemImplicit.parse("u3 - v1", "v3 - u2"))
    nonzero = {k: to_str(v) for k, v in d.items() if not v.is_zero()}
    assert nonzero == {"f_p": "1", "g_b": "1"}


def test_implicit_jets_type_32():
    d = implicit_jets(SystemImplicit.parse("u3 - v1*v2", "v3 - v2"))
    nonzero = {k: to_str(v) for k, v in d.items() if not v.is_zero()}
    assert nonzero == {"f_p": "v2", "f_q": "v1", "f_pq": "1", "g_q": "1"}


def test_implicit_jets_singular():
    with pytest.raises(SingularJacobian):
        implicit_jets(SystemImplicit.parse("u1*v2 - 4/3*u2*v1", "u1*v3 - 3/2*u3*v1"))


low_jets = ["u_xx", "u_xy", "u_yy", "v_xx", "v_xy", "v_yy", "a", "b", "p", "q"]


@st.composite
def jet_polys(draw, names=low_jets):
    e = CTX.table.const(draw(st.integers(-3, 3)))
    for _ in range(draw(st.integers(1, 3))):
        term = CTX.table.const(draw(st.integers(-4, 4)))
        for _ in range(draw(st.integers(1, 2))):
            term = term * CTX.var(draw(st.sampled_from(names)))
        e = e + term
    return e


@given(jet_polys())
def test_total_derivatives_commute(e):
    dx, dy, dt = (lambda h, k=k: CTX.total_derivative(h, k) for k in "xyt")
    assert dx(dy(e)) == dy(dx(e))
    assert dx(dt(e)) == dt(dx(e))


@given(jet_polys(["u_xt", "v_xt", "u_t", "v_t", "a", "p", "u_xx"]),
       jet_polys(["u_yt", "u_tt", "b", "q", "v_xy"]))
def test_reduce_is_homomorphism(e1, e2):
    def red(e):
        return reduce_on_solution(e, DKP, CTX)
    assert red(red(e1)) == red(e1)
    assert red(e1 * e2) == red(red(e1) * red(e2))
    assert red(e1 + e2) == red(e1) + red(e2)


@given(jet_polys(["a", "b", "p", "q", "u_xx", "v_xy"]))
def test_prolongation_order_consistent(e):
    def red(h):
        return reduce_on_solution(h, DKP, CTX)
    dx = lambda h: CTX.total_derivative(h, "x")
    dt = lambda h: CTX.total_derivative(h, "t")
    assert red(dt(dx(e))) == red(dx(red(dt(e))))


IT = implicit_table()


@st.composite
def base_polys(draw):
    t = IT
    names = ["u1", "u2", "v1", "v2"]
    e = t.const(draw(st.integers(-3, 3)))
    for _ in range(draw(st.integers(1, 3))):
        term = t.const(draw(st.integers(-4, 4)))
        for _ in range(draw(st.integers(1, 3))):
            term = term * t.var(draw(st.sampled_from(names)))
        e = e + term
    return e


@given(base_polys(), base_polys())
def test_implicit_jets_match_explicit(f, g):
    sys = SystemImplicit(f.table.var("u3") - f, f.table.var("v3") - g)
    d = implicit_jets(sys)
    rename = {"a": "u1", "b": "u2", "p": "v1", "q": "v2"}
    for fn, h in (("f", f), ("g", g)):
        for idx in ("a", "bq", "apq"):
            expect = h
            for c in idx:
                expect = expect.diff(rename[c])
            assert d[f"{fn}_{idx}"] == expect


germ_coeffs = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@st.composite
def germs(draw, order=3):
    derivs = {}
    for exps in [(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1), (2, 0, 0, 0), (1, 1, 1, 0)]:
        v = draw(germ_coeffs)
        derivs[exps] = Rat(v.numerator, v.denominator)
    return Germ.from_derivatives(BASE, order, derivs)


@given(germs(), germs())
def test_germ_leibniz(g1, g2):
    lhs = (g1 * g2).diff("a")
    rhs = g1.diff("a") * g2 + g1 * g2.diff("a")
    assert (lhs - rhs).truncate(2).is_zero()


@given(germs())
def test_germ_reciprocal(g):
    if g.constant_term() == 0:
        return
    one = g * g.reciprocal()
    assert one.constant_term() == 1
    assert (one - 1).is_zero()


def test_germ_derivative_roundtrip():
    g = Germ.from_derivatives(BASE, 3, {(2, 0, 1, 0): Rat(6), (0, 0, 0, 1): Rat(-1, 2)})
    assert g.derivative((2, 0, 1, 0)) == 6
    assert g.derivative((0, 0, 0, 1)) == Rat(-1, 2)
    assert g.derivative((1, 0, 0, 0)) == 0


def test_evol_germs_match_symbolic_derivatives():
    sys = SystemEvol.parse("b/p + p^2/a", "a*q^2")
    pt = {"a": Rat(2), "b": Rat(1, 3), "p": Rat(-1), "q": Rat(5)}
    f, g = evol_germs(sys, pt, 3)
    assert f.derivative((1, 0, 1, 0)) == sys.f.diff("a").diff("p").evaluate(pt)
    assert g.derivative((1, 0, 0, 2)) == 2
