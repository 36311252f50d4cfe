"""Exact linear algebra helpers over Q (flint) plus a fraction-free elimination."""

from math import lcm

import flint

from .exprcore import Rat


def mat(rows, ncols=None):
    rows = [list(r) for r in rows]
    n = len(rows)
    m = ncols if ncols is not None else (len(rows[0]) if rows else 0)
    return flint.fmpq_mat(n, m, [x for r in rows for x in r])


def zeros(n, m):
    return flint.fmpq_mat(n, m)


def identity(n):
    M = flint.fmpq_mat(n, n)
    for i in range(n):
        M[i, i] = 1
    return M


def rows_of(M):
    return [[M[i, j] for j in range(M.ncols())] for i in range(M.nrows())]


def is_zero_mat(M):
    return all(x == 0 for x in M.entries())


def rank(M):
    if not isinstance(M, flint.fmpq_mat):
        M = mat(M)
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return M.rank()


def pivots(M):
    """Pivot columns of the reduced row echelon form."""
    R, r = M.rref()
    out = []
    j = 0
    for i in range(r):
        while R[i, j] == 0:
            j += 1
        out.append(j)
        j += 1
    return out


def independent_rows(M):
    """Indices of a maximal set of linearly independent rows."""
    return pivots(M.transpose())


def nullspace(M):
    """Basis of {x : M x = 0} as a list of column vectors (lists of Rat)."""
    n = M.ncols()
    R, r = M.rref()
    piv = pivots(M)
    free = [j for j in range(n) if j not in piv]
    basis = []
    for fj in free:
        v = [Rat(0)] * n
        v[fj] = Rat(1)
        for i, pj in enumerate(piv):
            v[pj] = -R[i, fj]
        basis.append(v)
    return basis


def solve_consistent(M, rhs):
    """Solve M x = rhs for full-column-rank M; None when inconsistent."""
    n = M.ncols()
    rows = independent_rows(M)
    if len(rows) < n:
        raise ValueError(f"rank {len(rows)} < {n}")
    sq = mat([[M[i, j] for j in range(n)] for i in rows])
    b = mat([[rhs[i, 0]] for i in rows])
    x = sq.solve(b)
    if not is_zero_mat(M * x - rhs):
        return None
    return x


def bareiss(rows):
    """Fraction-free Gaussian elimination over an integral domain.

    Works on a copy of ``rows`` (entries: ints, Rats or flint polynomials
    with exact division).  Returns ``(echelon rows, pivot columns)``.
    """
    A = [list(r) for r in rows]
    n = len(A)
    m = len(A[0]) if A else 0
    prev = 1
    piv_cols = []
    r = 0
    for c in range(m):
        p = next((i for i in range(r, n) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        for i in range(r + 1, n):
            for j in range(c + 1, m):
                v = A[r][c] * A[i][j] - A[i][c] * A[r][j]
                A[i][j] = _exact_div(v, prev)
            A[i][c] = 0 * A[i][c]
        prev = A[r][c]
        piv_cols.append(c)
        r += 1
        if r == n:
            break
    return A, piv_cols


def _exact_div(v, d):
    if isinstance(d, int) and d == 1:
        return v
    if isinstance(v, int) and isinstance(d, int):
        q, rem = divmod(v, d)
        assert rem == 0
        return q
    return v / d


def bareiss_solve(rows, rhs):
    """Solve a full-column-rank rational system by Bareiss on integer rows.

    Each row is scaled to integers first.  Returns a list of Rats or
    raises ValueError when rank-deficient or inconsistent.
    """
    aug = []
    for r, b in zip(rows, rhs):
        vals = [Rat(x) for x in r] + [Rat(b)]
        den = lcm(*(int(v.q) for v in vals))
        aug.append([int(v.p) * (den // int(v.q)) for v in vals])
    n = len(rows[0])
    E, piv = bareiss(aug)
    if len(piv) < n or (piv and piv[-1] == n):
        raise ValueError("rank-deficient or inconsistent system")
    for i in range(n, len(E)):
        if E[i][n] != 0:
            raise ValueError("inconsistent system")
    x = [Rat(0)] * n
    for i in reversed(range(n)):
        s = Rat(E[i][n])
        for j in range(i + 1, n):
            s -= E[i][j] * x[j]
        x[i] = s / E[i][i]
    return x

