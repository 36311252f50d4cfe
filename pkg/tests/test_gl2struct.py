import random

import pytest

from grasslab import _linalg as la
from grasslab import classify as cl
from grasslab import gl2struct as gs
from grasslab.exprcore import Rat, VarTable
from grasslab.jetspace import SystemEvol

DKP = SystemEvol.parse("p", "b - a^2/2", "dkp")
LINEAR = SystemEvol.parse("p", "b", "linear")
PT = {"a": Rat(2), "b": Rat(1, 3), "p": Rat(-1), "q": Rat(5)}


def frame_at(seed, integrable=False):
    rng = random.Random(seed)
    while True:
        try:
            return gs.build_frame_germs(*gs.germs_from_derivatives(gs.random_jet(rng, integrable)))
        except gs.DegenerateFrame:
            continue


def conn_at(seed, integrable=False):
    rng = random.Random(seed)
    while True:
        try:
            derivs = gs.random_jet(rng, integrable)
            return gs.bryant_connection(germs=gs.germs_from_derivatives(derivs))
        except (gs.DegenerateFrame, gs.Inconsistent):
            continue


def zero_vec(v):
    return all(x == 0 for x in v)


def test_twisted_cubic_is_lagrangian():
    t = VarTable(["t"])
    s = t.var("t")
    gamma = [t.const(1), s, s * s, s * s * s]
    dgamma = [x.diff("t") for x in gamma]
    w0 = gs.OMEGA0
    tot = sum((gamma[i] * dgamma[j] * w0[i][j] for i in range(4) for j in range(4)), t.const(0))
    assert tot.is_zero()


def test_dkp_symplectic_determinant():
    symp = gs.symplectic_data(DKP)
    assert (symp.det_omega * symp.detA * symp.detA).constant_value() == 9


def test_casimir_on_vectors():
    for seed in range(3):
        C = gs.casimir_on_vectors(frame_at(seed))
        assert C == la.identity(4) * 15


def test_sl2_closure():
    fr = frame_at(4)
    A = [M.c0 for M in fr.A_alpha]
    span = [[A[a][i, j] for i in range(4) for j in range(4)] for a in range(3)]
    assert la.rank(la.mat(span)) == 3
    for a in range(3):
        for b in range(3):
            com = A[a] * A[b] - A[b] * A[a]
            row = [com[i, j] for i in range(4) for j in range(4)]
            assert la.rank(la.mat(span + [row])) == 3


def test_spectrum_dimensions():
    fr = frame_at(1)
    cur = gs.eigen_dims(fr.casimir("curvature").c0, gs.CURVATURE_WEIGHTS)
    assert [cur[l] for l in (0, 2, 4, 6, 8, 10)] == [2, 12, 25, 28, 18, 11]
    assert sum(cur.values()) == 96
    tor = gs.eigen_dims(fr.casimir("torsion").c0, gs.TORSION_WEIGHTS)
    assert [tor[l] for l in (1, 3, 5, 7)] == [2, 8, 6, 8]


@pytest.mark.parametrize("space, weights", [("torsion", gs.TORSION_WEIGHTS),
                                            ("curvature", gs.CURVATURE_WEIGHTS)])
def test_projectors(space, weights):
    fr = frame_at(2)
    P = gs.projectors(fr.casimir(space).c0, weights)
    n = len(gs.SPACES[space])
    total = la.zeros(n, n)
    for l, Pl in P.items():
        total = total + Pl
        assert Pl * Pl == Pl
        for m, Pm in P.items():
            if m != l:
                assert la.is_zero_mat(Pl * Pm)
    assert total == la.identity(n)


def test_weight_project_sums_back():
    fr = frame_at(3)
    rng = random.Random(0)
    K = [cl.random_rat(rng) for _ in range(96)]
    parts = [gs.weight_project(fr, K, l) for l in gs.CURVATURE_WEIGHTS]
    assert [sum(col, Rat(0)) for col in zip(*parts)] == K
    with pytest.raises(ValueError):
        gs.weight_project(fr, K, 3)


def test_bryant_uniqueness_counts():
    fr = gs.build_frame(DKP, PT)
    E, _ = gs.bryant_system(fr)
    E0 = E.c0
    assert (E0.nrows(), E0.ncols()) == (144, 100)
    assert la.rank(E0) == 100
    cond_i = la.mat([[E0[i, j] for j in range(100)] for i in range(120)])
    assert 100 - la.rank(cond_i) == 16


def test_bryant_conditions_hold():
    conn = gs.bryant_connection(DKP, PT)
    E, r = gs.bryant_system(conn.frame)
    assert la.is_zero_mat(E.c0 * conn.solution.c0 - r.c0)


def test_dkp_torsion_in_top_module():
    conn = gs.bryant_connection(DKP, PT)
    T = conn.torsion_vector()
    assert not zero_vec(T)
    C = conn.frame.casimir("torsion").c0
    lhs = C * la.mat([[x] for x in T])
    assert [lhs[i, 0] for i in range(24)] == [63 * x for x in T]
    assert conn.curvature_is_zero()


def test_linear_connection_trivial():
    conn = gs.bryant_connection(LINEAR, PT)
    assert conn.torsion_is_zero() and conn.curvature_is_zero()


@pytest.mark.parametrize("seed", [0, 1])
def test_table1_5_bryant_flat(seed):
    conn = gs.bryant_connection(cl.corpus_entry("table1_5").analysed, seed=seed)
    assert conn.torsion_is_zero() and conn.curvature_is_zero()


def test_symmetric_connection():
    conn = gs.symmetric_connection(cl.corpus_entry("table1_32").analysed)
    assert conn is not None and conn.curvature_is_zero() and conn.torsion_is_zero()
    assert gs.symmetric_connection(DKP, PT) is None
    lin = gs.symmetric_connection(LINEAR, PT)
    assert lin is not None
    assert all(x == 0 for a in lin.gamma for row in a for x in row)


def test_torsion_squares_of_zero():
    fr = gs.build_frame(DKP, PT)
    zero = [[[Rat(0)] * 4 for _ in range(4)] for _ in range(4)]
    for t in gs.torsion_squares(fr, zero).values():
        assert zero_vec(gs.to_vector(t))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_universal_identities(seed):
    conn = conn_at(seed)
    assert not conn.torsion_is_zero()
    for name, v in gs.universal_identities(conn).items():
        assert zero_vec(v), name


def test_theorem3_integrable():
    assert gs.check_theorem3(seed=0, points=1).status == cl.POINTWISE_VERIFIED


def test_theorem3_random_jets_refuted():
    v = gs.check_theorem3(seed=0, points=1, integrable=False)
    assert v.status == cl.REFUTED and v.witness.value != 0


def test_theorem3_linearly_degenerate_point():
    conn = gs.bryant_connection(cl.corpus_entry("table1_5").analysed)
    for v in gs.invariant_relations(conn).values():
        assert zero_vec(v)
    assert zero_vec(gs.to_vector(conn.R)) and zero_vec(conn.torsion_vector())


def test_lee_form_constant_omega():
    phi, dphi = gs.lee_form(gs.symplectic_data(LINEAR))
    assert all(x.is_zero() for x in phi)
    assert all(x.is_zero() for row in dphi for x in row)


@pytest.mark.parametrize("f", ["a^2", "a^3 + a", "1/a"])
def test_lee_form_closed_family(f):
    phi, dphi = gs.lee_form(gs.symplectic_data(SystemEvol.parse("p", f"b - ({f})")))
    assert all(x.is_zero() for row in dphi for x in row)


def test_lee_form_not_closed():
    _, dphi = gs.lee_form(gs.symplectic_data(SystemEvol.parse("q", "b + a^4")))
    assert any(not x.is_zero() for row in dphi for x in row)


def test_lee_form_point_matches_symbolic():
    sys = SystemEvol.parse("q", "b + a^4")
    phi, dphi = gs.lee_form(gs.symplectic_data(sys))
    p_pt, d_pt = gs.lee_form_values(gs.build_frame(sys, PT))
    assert p_pt == [x.evaluate(PT) for x in phi]
    assert d_pt == [[x.evaluate(PT) for x in row] for row in dphi]


@pytest.mark.parametrize("name", ["dkp", "table1_5", "table1_32"])
def test_omega_conformally_parallel(name):
    sys = cl.corpus_entry(name).analysed
    conn = gs.bryant_connection(sys, PT if name == "dkp" else None)
    assert gs.omega_parallel_check(conn)
