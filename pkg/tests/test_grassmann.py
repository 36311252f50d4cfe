import random

import pytest
from hypothesis import given, strategies as st

from grasslab import _linalg as la
from grasslab import classify as cl
from grasslab.exprcore import Rat, VarTable
from grasslab.grassmann import (
    ChartBoundary, SL5Element, act, act_tangent, combine, generators,
    prolonged_generator_rank, segre_directions, stabilizes, transform_system,
)
from grasslab.jetspace import SystemImplicit, implicit_jets

LINEAR = SystemImplicit.parse("u3 - v1", "v3 - u2", "linear")

STABILIZERS = [
    {"U1": 1}, {"V2": 1}, {"U2": 1, "V3": 1}, {"U3": 1, "V1": 1},
    {"X13": 1, "X32": 2, "L12": 1}, {"X23": 1, "X31": 2, "L21": 1},
    {"X11": 1, "X22": 1, "X33": 1}, {"X11": 1, "X22": -1, "L11": 1},
]


def rand_U(rng):
    return [[cl.random_rat(rng) for _ in range(3)] for _ in range(2)]


def rank(M):
    return la.rank(la.mat(M))


def matmul(A, B):
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), Rat(0)) for j in range(len(B[0]))]
            for i in range(len(A))]


def test_identity_action():
    U = [[Rat(1), Rat(2), Rat(3)], [Rat(-1), Rat(0), Rat(1, 2)]]
    assert act(SL5Element.identity(), U) == U
    dU = [[Rat(1), Rat(0), Rat(0)], [Rat(2), Rat(0), Rat(0)]]
    assert act_tangent(SL5Element.identity(), U, dU) == dU


def test_block_permutation():
    swap = [[int(i == j) for j in range(5)] for i in range(5)]
    swap[0][0] = swap[2][2] = 0
    swap[0][2] = swap[2][0] = 1
    U = [[Rat(2), Rat(0), Rat(0)], [Rat(0), Rat(0), Rat(0)]]
    assert act(SL5Element(swap), U)[0][0] == Rat(1, 2)


def test_chart_boundary():
    M = SL5Element.from_blocks(C=[[1, 0], [0, 0], [0, 0]])
    with pytest.raises(ChartBoundary):
        act(M, [[Rat(-1), Rat(0), Rat(0)], [Rat(0), Rat(0), Rat(0)]])


def test_linear_dependent_action():
    A = [[2, 1], [1, 1]]
    U = [[Rat(1), Rat(2), Rat(3)], [Rat(-1), Rat(0), Rat(5)]]
    assert act(SL5Element.from_blocks(A=A), U) == matmul([[Rat(x) for x in r] for r in A], U)


@given(st.integers(0, 10**6))
def test_group_law(seed):
    rng = random.Random(seed)
    M1, M2 = SL5Element.random(rng), SL5Element.random(rng)
    U, dU = rand_U(rng), rand_U(rng)
    try:
        lhs = act(M1, act(M2, U))
        lhs_t = act_tangent(M1, act(M2, U), act_tangent(M2, U, dU))
        rhs = act(M1 @ M2, U)
    except ChartBoundary:
        return
    assert lhs == rhs
    assert lhs_t == act_tangent(M1 @ M2, U, dU)


def test_tangent_preserves_rank_one():
    rng = random.Random(11)
    done = 0
    while done < 100:
        M, U = SL5Element.random(rng), rand_U(rng)
        col = [cl.random_rat(rng), cl.random_rat(rng)]
        row = [cl.random_rat(rng) for _ in range(3)]
        dU = [[c * r for r in row] for c in col]
        try:
            out = act_tangent(M, U, dU)
        except ChartBoundary:
            continue
        assert rank(out) == 1
        assert act_tangent(M, U, [[Rat(0)] * 3] * 2) == [[Rat(0)] * 3] * 2
        done += 1


def _coeffs(e, monos):
    d = e.numerator().num.to_dict()
    return [Rat(d.get(m, 0)) for m in monos]


def test_segre_quadrics_preserved():
    t = VarTable(["du1", "du2", "du3", "dv1", "dv2", "dv3"])
    dU = [[t.var(f"du{i}") for i in (1, 2, 3)], [t.var(f"dv{i}") for i in (1, 2, 3)]]

    def minors(M):
        return [M[0][i] * M[1][j] - M[0][j] * M[1][i] for i, j in ((0, 1), (0, 2), (1, 2))]

    rng = random.Random(5)
    base = minors(dU)
    for _ in range(5):
        M, U = SL5Element.random(rng), rand_U(rng)
        try:
            new = minors(act_tangent(M, U, dU))
        except ChartBoundary:
            continue
        monos = sorted({m for q in base + new for m in q.numerator().num.to_dict()})
        span = [_coeffs(q, monos) for q in base]
        for q in new:
            assert rank(span + [_coeffs(q, monos)]) == 3


def test_transform_identity_and_roundtrip():
    sys = SystemImplicit.parse("u1*v2 - 4/3*u2*v1", "u1*v3 - 3/2*u3*v1")
    assert transform_system(sys, SL5Element.identity()) is sys
    M = SL5Element.random(random.Random(2))
    back = transform_system(transform_system(sys, M), M.inverse())
    assert back.F == sys.F and back.G == sys.G


def test_transformed_alpha_beta_system_is_solvable():
    sys = SystemImplicit.parse("u1*v2 - 4/3*u2*v1", "u1*v3 - 3/2*u3*v1")
    d = implicit_jets(transform_system(sys, cl.mixing_transform(0)), max_order=1)
    assert len(d) == 8


def test_generators():
    gens = generators()
    assert len(gens) == 25
    lhs = combine(gens, {"X11": 1, "X22": 1, "X33": 1})
    rhs = combine(gens, {"L11": 1, "L22": 1})
    assert all((a - b).is_zero() for a, b in zip(lhs, rhs))
    monos = sorted({m for vf in gens.values() for c in vf for m in c.numerator().num.to_dict()})
    rows = [sum((_coeffs(c, monos) for c in vf), []) for vf in gens.values()]
    assert rank(rows) == 24


def test_stabilizers_of_linear_system():
    gens = generators(LINEAR.table)
    for combo in STABILIZERS:
        assert stabilizes(combine(gens, combo), LINEAR)
    assert not stabilizes(gens["P1"], LINEAR)


def test_prolonged_rank_generic():
    rng = random.Random(0)
    for _ in range(10):
        assert prolonged_generator_rank([cl.random_rat(rng) for _ in range(14)]) == 14


def test_prolonged_rank_degenerate():
    rng = random.Random(1)
    for _ in range(5):
        pt = [cl.random_rat(rng) for _ in range(10)]
        pt += pt[6:10]
        assert prolonged_generator_rank(pt) < 14


def test_prolonged_rank_linear_origin():
    pt = [0] * 14
    pt[8] = 1
    pt[11] = 1
    assert prolonged_generator_rank(pt) <= 14


def test_segre_coordinate_plane():
    E11 = [[1, 0, 0], [0, 0, 0]]
    E22 = [[0, 0, 0], [0, 1, 0]]
    dirs, _ = segre_directions(E11, E22)
    assert sorted(dirs) == [(Rat(0), Rat(1)), (Rat(1), Rat(0))]


def test_segre_bisecant_reduction_plane():
    # two rank-one tangent vectors of the linear fourfold du3 = dv1, dv3 = du2
    M1 = [[1, 1, 1], [1, 1, 1]]
    M2 = [[1, 1, -1], [-1, -1, 1]]
    dirs, _ = segre_directions(M1, M2)
    assert (Rat(1), Rat(0)) in dirs and (Rat(0), Rat(1)) in dirs


def test_segre_random_plane():
    rng = random.Random(4)
    for _ in range(10):
        dirs, (_, deg) = segre_directions(rand_U(rng), rand_U(rng))
        assert len(dirs) <= deg <= 3


def test_segre_degenerate_pencil():
    with pytest.raises(ValueError):
        segre_directions([[1, 0, 0], [0, 0, 0]], [[0, 1, 0], [0, 0, 0]])


def test_sl5_json_roundtrip():
    M = SL5Element.random(random.Random(9))
    assert SL5Element.from_json(M.to_json()) == M
    with pytest.raises(ValueError):
        SL5Element([[0] * 5] * 5)
