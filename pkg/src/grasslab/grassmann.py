"""Affine chart of Gr(3,5), the SL(5) action and its infinitesimal generators."""

import json
from dataclasses import dataclass

import flint

from . import _linalg as la
from .exprcore import Expr, Rat, rat, rat_str
from .jetspace import IMPLICIT_VARS, SystemImplicit, implicit_table


class ChartBoundary(ValueError):
    """CU + D is singular: the image leaves the affine chart."""


def _det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _adj3(m):
    adj = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [x for x in range(3) if x != j]
            c = [x for x in range(3) if x != i]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            adj[i][j] = minor if (i + j) % 2 == 0 else -minor
    return adj


def _sum(it):
    tot = None
    for t in it:
        tot = t if tot is None else tot + t
    return tot


def _is_zero(x):
    if hasattr(x, "constant_term"):
        return x.constant_term() == 0
    if isinstance(x, Expr):
        return x.is_zero()
    return x == 0


@dataclass(frozen=True)
class SL5Element:
    """5x5 matrix [[A, B], [C, D]] acting on (p; x); stored unnormalized."""

    m: tuple

    def __post_init__(self):
        rows = tuple(tuple(rat(x) for x in r) for r in self.m)
        if len(rows) != 5 or any(len(r) != 5 for r in rows):
            raise ValueError("expected a 5x5 matrix")
        object.__setattr__(self, "m", rows)
        if self.det() == 0:
            raise ValueError("singular matrix")

    @classmethod
    def identity(cls):
        return cls(tuple(tuple(int(i == j) for j in range(5)) for i in range(5)))

    @classmethod
    def from_blocks(cls, A=None, B=None, C=None, D=None):
        A = A or [[1, 0], [0, 1]]
        B = B or [[0] * 3 for _ in range(2)]
        C = C or [[0] * 2 for _ in range(3)]
        D = D or [[int(i == j) for j in range(3)] for i in range(3)]
        top = [list(A[i]) + list(B[i]) for i in range(2)]
        bot = [list(C[i]) + list(D[i]) for i in range(3)]
        return cls(tuple(map(tuple, top + bot)))

    @classmethod
    def random(cls, rng, lo=-3, hi=3):
        while True:
            m = [[rng.randint(lo, hi) for _ in range(5)] for _ in range(5)]
            if la.mat(m).det() != 0:
                return cls(tuple(map(tuple, m)))

    @property
    def A(self):
        return [list(r[:2]) for r in self.m[:2]]

    @property
    def B(self):
        return [list(r[2:]) for r in self.m[:2]]

    @property
    def C(self):
        return [list(r[:2]) for r in self.m[2:]]

    @property
    def D(self):
        return [list(r[2:]) for r in self.m[2:]]

    def det(self):
        return la.mat(self.m).det()

    def __matmul__(self, other):
        return SL5Element(tuple(map(tuple, la.rows_of(la.mat(self.m) * la.mat(other.m)))))

    def inverse(self):
        return SL5Element(tuple(map(tuple, la.rows_of(la.mat(self.m).inv()))))

    def to_json(self):
        return json.dumps([[rat_str(x) for x in r] for r in self.m])

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        return cls(tuple(tuple(rat(x) for x in r) for r in data))


def act(M, U):
    """(AU + B)(CU + D)^{-1}; entries may be Rats, Exprs or germs."""
    A, B, C, D = M.A, M.B, M.C, M.D
    N = [[_sum(A[i][k] * U[k][j] for k in range(2)) + B[i][j] for j in range(3)] for i in range(2)]
    K = [[_sum(C[i][k] * U[k][j] for k in range(2)) + D[i][j] for j in range(3)] for i in range(3)]
    det = _det3(K)
    if _is_zero(det):
        raise ChartBoundary("chart boundary: CU + D is singular")
    adj = _adj3(K)
    inv_det = 1 / det
    return [[_sum(N[i][k] * adj[k][j] for k in range(3)) * inv_det for j in range(3)]
            for i in range(2)]


def act_tangent(M, U, dU):
    """Differential of ``act`` at U: (A - Ũ C) dU (CU + D)^{-1}."""
    A, C, D = M.A, M.C, M.D
    K = [[_sum(C[i][k] * U[k][j] for k in range(2)) + D[i][j] for j in range(3)] for i in range(3)]
    det = _det3(K)
    if _is_zero(det):
        raise ChartBoundary("chart boundary: CU + D is singular")
    Ut = act(M, U)
    L = [[A[i][k] - _sum(Ut[i][m] * C[m][k] for m in range(3)) for k in range(2)] for i in range(2)]
    adj = _adj3(K)
    inv_det = 1 / det
    LdU = [[_sum(L[i][k] * dU[k][j] for k in range(2)) for j in range(3)] for i in range(2)]
    return [[_sum(LdU[i][k] * adj[k][j] for k in range(3)) * inv_det for j in range(3)]
            for i in range(2)]


def chart_matrix(vals):
    """(u1, u2, u3, v1, v2, v3) -> 2x3 matrix."""
    vals = list(vals)
    return [vals[:3], vals[3:]]


def chart_values(U):
    return list(U[0]) + list(U[1])


def point_dict(U):
    return dict(zip(IMPLICIT_VARS, chart_values(U)))


def transform_system(sys, M):
    """Image of the fourfold of ``sys`` under ``M``: F~(U) = F(act(M^-1, U))."""
    if isinstance(M, SL5Element) and M.m == SL5Element.identity().m:
        return sys
    t = sys.table
    Minv = M.inverse()
    U = chart_matrix([t.var(n) for n in IMPLICIT_VARS])
    pre = chart_values(act(Minv, U))
    binds = dict(zip(IMPLICIT_VARS, pre))
    F = sys.F.subs(binds)
    G = sys.G.subs(binds)
    return SystemImplicit(F, G, sys.name, origin=(sys, M))


# -- jointly linear pairs and fourfold points ----------------------------------

def _linear_in(e, pair):
    idx = [e.table.index(n) for n in pair]
    for mono in e.numerator().num.monoms():
        if sum(int(mono[i]) for i in idx) > 1:
            return False
    for mono in e.denominator().num.monoms():
        if any(int(mono[i]) for i in idx):
            return False
    return True


def linear_pairs(sys):
    """Variable pairs in which F and G are jointly linear (and independent)."""
    out = []
    names = IMPLICIT_VARS
    for i in range(6):
        for j in range(i + 1, 6):
            pair = (names[i], names[j])
            if _linear_in(sys.F, pair) and _linear_in(sys.G, pair):
                J = [[sys.F.diff(pair[0]), sys.F.diff(pair[1])],
                     [sys.G.diff(pair[0]), sys.G.diff(pair[1])]]
                if not _det2(J).is_zero():
                    out.append(pair)
    return out


def solve_pair(sys, pair):
    """Cramer solution of F = G = 0 for a jointly linear pair, as Exprs."""
    x, y = pair
    zero = {x: sys.table.const(0), y: sys.table.const(0)}
    F1, F2, G1, G2 = sys.F.diff(x), sys.F.diff(y), sys.G.diff(x), sys.G.diff(y)
    F0, G0 = sys.F.subs(zero), sys.G.subs(zero)
    det = F1 * G2 - F2 * G1
    return {x: (F2 * G0 - G2 * F0) / det, y: (G1 * F0 - F1 * G0) / det}


# -- infinitesimal generators ---------------------------------------------------

def generators(table=None):
    """The 24 generators as ``{name: [coefficients on d/du1..d/dv3]}``."""
    t = table or implicit_table()
    u = [t.var(f"u{i}") for i in (1, 2, 3)]
    v = [t.var(f"v{i}") for i in (1, 2, 3)]
    zero, one = t.const(0), t.const(1)
    out = {}

    def field(du, dv):
        return list(du) + list(dv)

    for i in range(3):
        out[f"U{i + 1}"] = field([one if k == i else zero for k in range(3)], [zero] * 3)
    for i in range(3):
        out[f"V{i + 1}"] = field([zero] * 3, [one if k == i else zero for k in range(3)])
    for i in range(3):
        for j in range(3):
            out[f"X{i + 1}{j + 1}"] = field([u[i] if k == j else zero for k in range(3)],
                                            [v[i] if k == j else zero for k in range(3)])
    out["L11"] = field(u, [zero] * 3)
    out["L12"] = field([zero] * 3, u)
    out["L21"] = field(v, [zero] * 3)
    out["L22"] = field([zero] * 3, v)
    for i in range(3):
        out[f"P{i + 1}"] = field([u[i] * u[k] for k in range(3)], [v[i] * u[k] for k in range(3)])
    for i in range(3):
        out[f"Q{i + 1}"] = field([u[i] * v[k] for k in range(3)], [v[i] * v[k] for k in range(3)])
    return out


def combine(gens, coeffs):
    """Linear combination ``{name: c}`` of generators."""
    out = None
    for name, c in coeffs.items():
        vf = [x * rat(c) for x in gens[name]]
        out = vf if out is None else [a + b for a, b in zip(out, vf)]
    return out


def apply_field(vf, e):
    """Directional derivative of an Expr in (u1..v3) along a generator."""
    tot = e.table.const(0)
    for name, c in zip(IMPLICIT_VARS, vf):
        if not c.is_zero():
            if c.table is not e.table:
                c = c.to_table(e.table)
            tot = tot + c * e.diff(name)
    return tot


def stabilizes(vf, sys, pair=None):
    """True when the field is tangent to the fourfold (checked modulo F = G = 0)."""
    pairs = [pair] if pair else linear_pairs(sys)
    if not pairs:
        raise ValueError("no jointly linear variable pair to eliminate")
    sol = solve_pair(sys, pairs[0])
    return all(apply_field(vf, h).subs(sol).is_zero() for h in (sys.F, sys.G))


JET_COORDS = ("u1", "u2", "v1", "v2", "f", "g",
              "f_a", "f_b", "f_p", "f_q", "g_a", "g_b", "g_p", "g_q")


def prolonged_matrix(point):
    """24 x 14 matrix of the generators prolonged to 1-jets of (f, g).

    ``point`` lists (u1, u2, v1, v2, f, g, f_a, f_b, f_p, f_q, g_a, g_b, g_p, g_q)
    or maps those names to values.
    """
    if isinstance(point, dict):
        point = [point[k] for k in JET_COORDS]
    vals = [rat(x) for x in point]
    u1, u2, v1, v2, f, g = vals[:6]
    df = vals[6:10]
    dg = vals[10:14]
    at = {"u1": u1, "u2": u2, "u3": f, "v1": v1, "v2": v2, "v3": g}
    indep = ("u1", "u2", "v1", "v2")
    gens = generators()
    rows = []
    for name, vf in gens.items():
        xi = dict(zip(IMPLICIT_VARS, vf))

        def D(e, j):
            return (e.diff(indep[j]) + e.diff("u3") * df[j] + e.diff("v3") * dg[j]).evaluate(at)

        row = [xi[n].evaluate(at) for n in indep]
        row += [xi["u3"].evaluate(at), xi["v3"].evaluate(at)]
        for dep, grad in (("u3", df), ("v3", dg)):
            for j in range(4):
                val = D(xi[dep], j) - _sum(grad[i] * D(xi[indep[i]], j) for i in range(4))
                row.append(val)
        rows.append(row)
    return la.mat(rows)


def prolonged_generator_rank(point):
    return la.rank(prolonged_matrix(point))


# -- Segre cone -------------------------------------------------------------------

def _minors(M):
    return [M[0][i] * M[1][j] - M[0][j] * M[1][i] for i, j in ((0, 1), (0, 2), (1, 2))]


def segre_directions(M1, M2):
    """Rank-one members of the pencil s*M1 + t*M2.

    Returns ``(directions, form)``: the rational directions ``(s, t)`` and
    the gcd of the three binary quadratic minors as a polynomial in
    ``z = s/t`` together with its degree in homogeneous form.
    """
    M1 = [[rat(x) for x in r] for r in M1]
    M2 = [[rat(x) for x in r] for r in M2]
    z = flint.fmpq_poly([0, 1])
    pencil = [[M1[i][j] * z + M2[i][j] for j in range(3)] for i in range(2)]
    minors = [m for m in _minors(pencil)]
    if all(m == 0 for m in minors):
        raise ValueError("degenerate input: pencil is identically rank one")
    g = flint.fmpq_poly(0)
    for m in minors:
        g = m if g == 0 else g.gcd(m)
    # homogeneous degree: the minors are binary quadratics; t = 0 is a root
    # exactly when every minor has formal degree < 2 in z
    at_infinity = all(m.degree() < 2 for m in minors if m != 0)
    dirs = []
    if at_infinity:
        dirs.append((Rat(1), Rat(0)))
    for fac, _ in g.factor()[1]:
        if fac.degree() == 1:
            c0, c1 = fac[0], fac[1]
            dirs.append((-c0 / c1, Rat(1)))
    hom_deg = g.degree() + (1 if at_infinity else 0)
    return dirs, (g, hom_deg)
