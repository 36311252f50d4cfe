import json
import random
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from grasslab import classify as cl
from grasslab import laxverify as lv
from grasslab.exprcore import Rat
from grasslab.jetspace import SystemEvol

SYSTEMS = {fx.name: fx.system for fx in cl.corpus()}
LINEAR = SYSTEMS["linear"]
LAX_FIXTURES = ["lax_dkp", "lax_dkp_pair", "lax_linear"]


def fixture(name):
    data = json.loads((resources.files("grasslab") / "fixtures" / f"{name}.json").read_text())
    return lv.lax_from_json(data, SYSTEMS)


@pytest.mark.parametrize("name", LAX_FIXTURES)
def test_fixture_pairs(name):
    sys, lax = fixture(name)
    assert lv.check_lax_relations(sys, lax).status == cl.SYMBOLIC_PROVEN
    assert lv.check_dispersion_identity(sys, lax).status == cl.SYMBOLIC_PROVEN
    assert lv.check_lax_relations(sys, lax, mode="points").status == cl.POINTWISE_VERIFIED


def test_linear_arbitrary_univariate_pair():
    lax = lv.LaxPair.parse("lam^5 - 2*lam", "3/7*lam^2 + lam")
    assert lv.check_lax_relations(LINEAR, lax)


@pytest.mark.parametrize("name", ["lax_dkp", "lax_dkp_pair"])
def test_mutated_pair_refuted(name):
    sys, lax = fixture(name)
    bad = lv.LaxPair(lax.P, lax.Q + lax.table.parse("lam*a"))
    v = lv.check_lax_relations(sys, bad)
    assert v.status == cl.REFUTED and v.witness.value != 0
    v = lv.check_lax_relations(sys, bad, mode="points")
    assert v.status == cl.REFUTED and v.witness.value != 0


def test_dispersion_identity_examples():
    assert lv.check_dispersion_identity(LINEAR, lv.LaxPair.parse("lam^3/3", "lam^2/2"))
    v = lv.check_dispersion_identity(LINEAR, lv.LaxPair.parse("lam^2", "-lam"))
    assert v.status == cl.REFUTED
    zero = lv.LaxPair.parse("0", "0", strict=False)
    assert lv.check_dispersion_identity(SYSTEMS["dkp"], zero).status == cl.REFUTED


def test_constant_pair_rejected():
    with pytest.raises(ValueError):
        lv.LaxPair.parse("a", "p")


def test_relations_imply_dispersion_identity():
    for name in LAX_FIXTURES:
        sys, lax = fixture(name)
        if lv.check_lax_relations(sys, lax):
            assert lv.check_dispersion_identity(sys, lax)


def test_dkp_vector_fields_commute():
    rules, fields = fixture("lax_dkp_fields")
    assert lv.check_vf_commute(rules, fields).status == cl.SYMBOLIC_PROVEN


def test_equal_fields_commute():
    X = {"dx": "-lam", "dy": "1", "dt": "0", "dlam": "u_xx"}
    fields = lv.LaxVectorFields.parse(X, {"dx": "-lam", "dy": "0", "dt": "1", "dlam": "u_xx"})
    br = lv.bracket(fields.X, fields.X, fields.ctx)
    assert all(v.is_zero() for v in br.values())


def test_mutated_vector_field_refuted():
    rules, fields = fixture("lax_dkp_fields")
    data = json.loads((resources.files("grasslab") / "fixtures" / "lax_dkp_fields.json").read_text())
    data["Y"]["dlam"] = "u_xx*lam"
    _, bad = lv.lax_from_json(data, SYSTEMS)
    v = lv.check_vf_commute(rules, bad)
    assert v.status == cl.REFUTED and v.witness.value != 0


def test_unnormalised_fields_rejected():
    with pytest.raises(ValueError):
        lv.LaxVectorFields.parse({"dx": "1", "dy": "2", "dt": "0", "dlam": "0"},
                                 {"dx": "0", "dy": "0", "dt": "1", "dlam": "0"})


jets = st.sampled_from(["u_xx", "u_xy", "lam", "u_x", "v_xx", "lam*u_xx", "u_x^2", "1"])


@given(jets, jets, jets)
def test_bracket_bilinear(x, y, z):
    ctx = lv.vf_context()
    X = {"dx": ctx.parse(x), "dy": ctx.parse("1"), "dt": ctx.parse("0"), "dlam": ctx.parse(y)}
    Y = {"dx": ctx.parse(y), "dy": ctx.parse("0"), "dt": ctx.parse("1"), "dlam": ctx.parse(z)}
    Z = {"dx": ctx.parse(z), "dy": ctx.parse(x), "dt": ctx.parse("0"), "dlam": ctx.parse(x)}
    YZ = {k: Y[k] + Z[k] for k in Y}
    lhs = lv.bracket(X, YZ, ctx)
    a, b = lv.bracket(X, Y, ctx), lv.bracket(X, Z, ctx)
    assert all(lhs[k] == a[k] + b[k] for k in lhs)


def test_dispersion_parametrisation_identity():
    rng = random.Random(6)
    for _ in range(3):
        co = [cl.random_rat(rng) for _ in range(8)]
        f = " + ".join(f"({c})*{v}" for c, v in zip(co[:4], "abpq"))
        g = " + ".join(f"({c})*{v}" for c, v in zip(co[4:], "abpq"))
        sys = SystemEvol.parse(f + " + a*q", g + " + p^2")
        mu, lam = lv.dispersion_parametrisation(sys)
        assert lv.dispersion_relation(sys, mu, lam).is_zero()


def test_dispersion_parametrisation_linear():
    mu, lam = lv.dispersion_parametrisation(LINEAR)
    phi = Rat(3)
    m, l = mu.evaluate({"phi": phi}), lam.evaluate({"phi": phi})
    # for f = p, g = b the relation reads lam^2 = mu
    assert l * l == m


def test_dispersion_parametrisation_degenerate():
    with pytest.raises(ValueError):
        lv.dispersion_parametrisation(SystemEvol.parse("p + a", "a*p"))


def test_null_geodesic_dkp():
    sys, lax = fixture("lax_dkp")
    for seed in range(5):
        assert lv.check_null_geodesic(sys, lax, point={}, seed=seed).status == cl.POINTWISE_VERIFIED


def test_null_geodesic_random_pair():
    v = lv.check_null_geodesic(SYSTEMS["dkp"], lv.LaxPair.parse("lam^2 + a*lam", "lam*p"), point={})
    assert v.status == cl.REFUTED and v.witness.value != 0


def test_null_geodesic_linear_matches_dispersion():
    for P, Q in [("lam^3/3", "lam^2/2"), ("lam^2", "-lam")]:
        lax = lv.LaxPair.parse(P, Q)
        null = lv.check_null_geodesic(LINEAR, lax, point={}).passed
        assert null == lv.check_dispersion_identity(LINEAR, lax).passed
