import random

import pytest

from grasslab import classify as cl
from grasslab import weylgeom as wg
from grasslab.exprcore import Rat, to_str
from grasslab.jetspace import GermAlgebra, JetContext, SystemEvol, SystemImplicit

CTX = JetContext(4)
DKP_IMPLICIT = SystemImplicit.parse("u3 - u1^2/2 - v2", "v1 - u2", "dkp")
DKP = SystemEvol.parse("p", "b - a^2/2", "dkp")
LINEAR = SystemEvol.parse("p", "b", "linear")


def strs(m):
    return [[to_str(x) for x in row] for row in m]


def all_zero(t):
    if isinstance(t, list):
        return all(all_zero(x) for x in t)
    return t.is_zero()


def test_dkp_metric_golden():
    m = wg.symbol_metric(DKP_IMPLICIT)
    assert strs(m.g_up) == [["-u1", "0", "1/2"], ["0", "-1", "0"], ["1/2", "0", "0"]]
    # 4 dx dt - dy^2 + 4 u_x dt^2
    assert strs(m.g_down) == [["0", "0", "2"], ["0", "-1", "0"], ["2", "0", "4*u1"]]


def test_dkp_weyl_covector_golden():
    m = wg.metric_in_jets(wg.symbol_metric(DKP_IMPLICIT), CTX)
    assert [to_str(w) for w in wg.weyl_covector(m, CTX)] == ["0", "0", "-4*u_xx"]


def test_linear_symbol_determinant():
    assert wg.symbol_metric(LINEAR).det_up == LINEAR.table.const(Rat(-1, 4))


def test_degenerate_symbol_rejected():
    with pytest.raises(wg.DegenerateSymbol):
        wg.symbol_metric(SystemEvol.parse("a*p + q", "a*p + q"))


def test_constant_metric_has_zero_covector():
    m = wg.metric_in_jets(wg.symbol_metric(LINEAR), CTX)
    assert all(w.is_zero() for w in wg.weyl_covector(m, CTX))


def test_covector_gauge_shift():
    m = wg.metric_in_jets(wg.symbol_metric(DKP_IMPLICIT), CTX)
    lam = CTX.parse("u_x^2")
    scaled = wg._metric([[x / lam for x in row] for row in m.g_up])
    w0 = wg.weyl_covector(m, CTX)
    w1 = wg.weyl_covector(scaled, CTX)
    for k in "xyt":
        i = "xyt".index(k)
        assert w1[i] - w0[i] == CTX.total_derivative(lam, k) / lam


@pytest.mark.parametrize("sys", [DKP_IMPLICIT, SystemImplicit.parse("u1*v2 - 4/3*u2*v1", "u1*v3 - 3/2*u3*v1")])
def test_metric_inverse(sys):
    m = wg.symbol_metric(sys)
    for i in range(3):
        for j in range(3):
            s = sum((m.g_up[i][k] * m.g_down[k][j] for k in range(3)), sys.table.const(0))
            assert s == sys.table.const(1 if i == j else 0)


def test_weyl_compatibility():
    alg = wg.JetAlgebra(CTX, SystemEvol.parse("a*q + p^2", "b - a*p"))
    metric = wg.metric_from_algebra(alg)
    omega = wg.covector(alg, metric)
    gam = wg.weyl_connection(alg, metric, omega)
    g = metric.g_down
    for k in range(3):
        for i in range(3):
            for j in range(i, 3):
                nab = alg.D(g[i][j], k)
                for a in range(3):
                    nab = nab - gam[a][k][i] * g[a][j] - gam[a][k][j] * g[i][a]
                assert nab == omega[k] * g[i][j]


def test_residual_trace_free():
    sys = SystemEvol.parse("p + a*q", "b + a^3")
    alg = wg.JetAlgebra(CTX, sys)
    res, metric, _, _ = wg.ew_residual(alg)
    tr = sum((metric.g_up[i][j] * res[i][j] for i in range(3) for j in range(3)), alg.zero())
    assert tr.is_zero()


def test_dkp_einstein_weyl():
    assert all_zero(wg.einstein_weyl_residual(DKP, CTX))


def test_linear_einstein_weyl():
    assert all_zero(wg.einstein_weyl_residual(LINEAR, CTX))


def test_non_integrable_residual_golden():
    res = wg.einstein_weyl_residual(SystemEvol.parse("p", "b + a^3"), CTX)
    assert to_str(res[1][1]) == "36*a^2*u_xx^2 + 12*u_xx*u_xy - 12*v_xx^2"
    assert sum(1 for row in res for x in row if not x.is_zero()) == 1


def test_third_order_coefficients_vanish():
    rng = random.Random(3)
    systems = ["b + a^3", "q*a + p^2*b", "b/p + a*p^2", "a*b + q^2", "p*q - a^2*b"]
    for g in systems:
        sys = SystemEvol.parse("p + a*q", g)
        point = {c: cl.random_rat(rng) for c in "abpq"}
        alg = wg.point_algebra(sys, point)
        res = wg.ew_residual(alg)[0]
        coeffs = wg.nonzero_coefficients(alg, res)
        assert coeffs, g
        for _, mono, _ in coeffs:
            assert all(len(name.split("_")[1]) == 2 for name in mono if "_" in name)


def test_cotton_linear_zero():
    assert all_zero(wg.cotton_tensor(LINEAR))


def test_cotton_dkp_nonzero():
    alg = wg.point_algebra(DKP, {"a": Rat(1), "b": Rat(2), "p": Rat(-1), "q": Rat(3)}, order=4)
    assert wg.nonzero_coefficients(alg, wg.cotton_components(alg))


def test_cotton_monge_ampere_zero():
    ma = cl.make_monge_ampere((1, 0, -1), (2, 0, 1), (0, -1, 3), 1,
                              (0, 1, 2), (1, 1, 0), (-2, 0, 1), 0)
    sys, _ = cl.prepare(ma)
    for jp in cl.jet_points(sys, 3, 0, order=4):
        alg = GermAlgebra(jp.f, jp.g)
        assert not wg.nonzero_coefficients(alg, wg.cotton_components(alg))


def test_conformal_rescaling_keeps_verdicts():
    h = "(1 + u1^2)"
    for F, G, expect in [("u1 - v2 + v1^2", "u2 - v3 + v1*v2", True),
                         ("u3 - v1", "v3 - u2 - u1^3", False)]:
        plain = SystemImplicit.parse(F, G)
        scaled = SystemImplicit.parse(f"{h}*({F})", f"{h}*({G})")
        for sys in (plain, scaled):
            v = cl.test_integrable(sys, n=10, seeds=(0, 1))
            assert v.passed is expect
