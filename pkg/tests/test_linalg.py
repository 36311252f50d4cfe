import pytest
from hypothesis import given, strategies as st

from grasslab import _linalg as la
from grasslab.exprcore import Rat

entries = st.integers(-6, 6)


def matrices(n, m):
    return st.lists(st.lists(entries, min_size=m, max_size=m), min_size=n, max_size=n)


@given(matrices(4, 4), st.lists(entries, min_size=4, max_size=4))
def test_bareiss_solve_matches_flint(rows, x):
    M = la.mat(rows)
    if la.rank(M) < 4:
        return
    rhs = [sum(r[j] * x[j] for j in range(4)) for r in rows]
    assert la.bareiss_solve(rows, rhs) == [Rat(v) for v in x]


@given(matrices(3, 5))
def test_nullspace_dimension_and_kernel(rows):
    M = la.mat(rows)
    basis = la.nullspace(M)
    assert len(basis) == 5 - la.rank(M)
    for v in basis:
        assert la.is_zero_mat(M * la.mat([[c] for c in v]))


@given(matrices(5, 3))
def test_bareiss_rank(rows):
    _, piv = la.bareiss(rows)
    assert len(piv) == la.rank(la.mat(rows))


def test_bareiss_solve_rejects_inconsistent():
    with pytest.raises(ValueError):
        la.bareiss_solve([[1, 0], [0, 1], [1, 1]], [1, 1, 3])
    with pytest.raises(ValueError):
        la.bareiss_solve([[1, 2], [2, 4]], [1, 2])


def test_solve_consistent():
    M = la.mat([[1, 0], [0, 2], [1, 1]])
    x = la.solve_consistent(M, la.mat([[1], [4], [3]]))
    assert [x[0, 0], x[1, 0]] == [1, 2]
    assert la.solve_consistent(M, la.mat([[1], [4], [0]])) is None
