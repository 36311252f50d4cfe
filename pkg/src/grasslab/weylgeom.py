"""Conformal structure, Weyl covector, Einstein-Weyl residual and Cotton tensor.

The geometry is written once against a small "on-solution differential
algebra" protocol: elements support ``+ - *``, division by functions of the
first-order jets, and ``alg.D(e, k)`` is the total derivative in direction
``k`` (0, 1, 2 = x, y, t).  Two algebras implement it:
:class:`JetAlgebra` (Exprs in a :class:`~grasslab.jetspace.JetContext`) and
:class:`~grasslab.jetspace.GermAlgebra` (fiber polynomials over Exprs or
Taylor germs).
"""

from dataclasses import dataclass

from .exprcore import Rat
from .jetspace import (
    BASE, GermAlgebra, JetContext, Rewriter, SystemEvol, SystemImplicit,
    evol_germs, extract_coefficients, on_solution_rules,
)

R3 = range(3)


class DegenerateSymbol(ValueError):
    pass


@dataclass
class Metric3:
    g_up: list
    g_down: list
    det_up: object


def det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def inverse3(m):
    d = det3(m)
    inv_d = 1 / d
    cof = [[None] * 3 for _ in R3]
    for i in R3:
        for j in R3:
            r = [x for x in R3 if x != j]
            c = [x for x in R3 if x != i]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            cof[i][j] = minor * inv_d if (i + j) % 2 == 0 else -(minor * inv_d)
    return cof, d


def evol_metric_entries(fd):
    """Contravariant symbol in evolutionary form from first derivatives.

    ``fd(fn, c)`` returns the partial derivative of f or g along c.
    """
    fa, fb, fp, fq = (fd("f", c) for c in BASE)
    ga, gb, gp, gq = (fd("g", c) for c in BASE)
    half = Rat(1, 2)
    g11 = fa * gp - fp * ga
    g12 = (fa * gq - fq * ga + fb * gp - fp * gb) * half
    g13 = -(fa + gp) * half
    g22 = fb * gq - fq * gb
    g23 = -(fb + gq) * half
    one = g11 * 0 + 1
    return [[g11, g12, g13], [g12, g22, g23], [g13, g23, one]]


def implicit_metric_entries(F, G):
    names_u = ("u1", "u2", "u3")
    names_v = ("v1", "v2", "v3")
    Fu = [F.diff(n) for n in names_u]
    Fv = [F.diff(n) for n in names_v]
    Gu = [G.diff(n) for n in names_u]
    Gv = [G.diff(n) for n in names_v]
    half = Rat(1, 2)
    return [[(Fu[i] * Gv[j] + Fu[j] * Gv[i] - Fv[i] * Gu[j] - Fv[j] * Gu[i]) * half
             for j in R3] for i in R3]


def _vanishes(d):
    if hasattr(d, "constant_term"):
        return d.constant_term() == 0
    return d == 0 if isinstance(d, (Rat, int)) else d.is_zero()


def _metric(up):
    d = det3(up)
    if _vanishes(d):
        raise DegenerateSymbol("degenerate symbol: det g^{ij} vanishes identically")
    down, _ = inverse3(up)
    return Metric3(up, down, d)


def symbol_metric(sys):
    """Contravariant conformal metric g^{ij} of the system, in axes (x, y, t)."""
    if isinstance(sys, SystemEvol):
        up = evol_metric_entries(lambda fn, c: (sys.f if fn == "f" else sys.g).diff(c))
    elif isinstance(sys, SystemImplicit):
        up = implicit_metric_entries(sys.F, sys.G)
    else:
        raise TypeError("expected SystemEvol or SystemImplicit")
    return _metric(up)


IMPLICIT_TO_JET = {"u1": "a", "u2": "b", "u3": "u_t", "v1": "p", "v2": "q", "v3": "v_t"}


def metric_in_jets(metric, ctx):
    """Re-express metric entries (in a, b, p, q or u1..v3) over a JetContext."""
    def conv(e):
        return e.to_table(ctx.table, IMPLICIT_TO_JET)
    up = [[conv(x) for x in row] for row in metric.g_up]
    return _metric(up)


class JetAlgebra:
    """Exprs over a JetContext; with a system, t-derivatives are reduced on-solution."""

    def __init__(self, ctx, sys=None):
        self.ctx = ctx
        self.sys = sys
        self.rewriter = Rewriter(ctx, on_solution_rules(sys, ctx)) if sys is not None else None
        self._fd = {}

    def const(self, c):
        return self.ctx.table.const(c)

    def zero(self):
        return self.const(0)

    def one(self):
        return self.const(1)

    def D(self, e, k):
        out = self.ctx.total_derivative(e, k)
        return self.rewriter.reduce(out) if self.rewriter else out

    def fd(self, fn, c):
        key = (fn, c)
        if key not in self._fd:
            h = self.sys.f if fn == "f" else self.sys.g
            self._fd[key] = self.ctx.lift(h.diff(c))
        return self._fd[key]

    def wrap(self, e):
        return e

    def coefficients(self, e):
        return {tuple(n for n, k in m for _ in range(k)): c
                for m, c in extract_coefficients(e, 1).items() if not c.is_zero()}


def metric_from_algebra(alg):
    m = _metric(evol_metric_entries(alg.fd))
    w = alg.wrap
    return Metric3([[w(x) for x in r] for r in m.g_up], [[w(x) for x in r] for r in m.g_down],
                   w(m.det_up))


def covector(alg, metric):
    """Eq. for the Weyl covector: 2 g_kj D_s g^{js} + D_k ln det g_{ij}."""
    up, down, det = metric.g_up, metric.g_down, metric.det_up
    div = [None] * 3
    for j in R3:
        tot = None
        for s in R3:
            t = alg.D(up[j][s], s)
            tot = t if tot is None else tot + t
        div[j] = tot
    inv_det = 1 / det
    out = []
    for k in R3:
        tot = alg.D(det, k) * inv_det * (-1)
        for j in R3:
            tot = tot + down[k][j] * div[j] * 2
        out.append(tot)
    return out


def weyl_covector(metric, ctx):
    """Weyl covector of a metric given over a JetContext (no on-solution reduction)."""
    return covector(JetAlgebra(ctx), metric)


def levi_civita(alg, metric):
    """Gamma[k][i][j] = 1/2 g^{kl} (D_i g_lj + D_j g_li - D_l g_ij)."""
    up, down = metric.g_up, metric.g_down
    dg = [[[alg.D(down[i][j], l) if i <= j else None for j in R3] for i in R3] for l in R3]
    for l in R3:
        for i in R3:
            for j in range(i):
                dg[l][i][j] = dg[l][j][i]
    half = Rat(1, 2)
    low = [[[(dg[i][l][j] + dg[j][l][i] - dg[l][i][j]) * half for j in R3] for i in R3]
           for l in R3]
    gam = [[[None] * 3 for _ in R3] for _ in R3]
    for k in R3:
        for i in R3:
            for j in R3:
                if j < i:
                    gam[k][i][j] = gam[k][j][i]
                    continue
                tot = None
                for l in R3:
                    t = up[k][l] * low[l][i][j]
                    tot = t if tot is None else tot + t
                gam[k][i][j] = tot
    return gam


def weyl_connection(alg, metric, omega):
    """Weyl connection: Levi-Civita minus 1/2 (d^k_i w_j + d^k_j w_i - g_ij w^k)."""
    lc = levi_civita(alg, metric)
    up, down = metric.g_up, metric.g_down
    w_up = [sum((up[k][l] * omega[l] for l in range(1, 3)), up[k][0] * omega[0]) for k in R3]
    half = Rat(1, 2)
    gam = [[[None] * 3 for _ in R3] for _ in R3]
    for k in R3:
        for i in R3:
            for j in R3:
                corr = down[i][j] * w_up[k] * (-1)
                if k == i:
                    corr = corr + omega[j]
                if k == j:
                    corr = corr + omega[i]
                gam[k][i][j] = lc[k][i][j] - corr * half
    return gam


def ricci(alg, gam):
    """R_lj = R^a_{laj} with R^k_{lij} = D_i G^k_lj - D_j G^k_li + G^a_lj G^k_ai - G^a_li G^k_aj."""
    dgam = {}

    def d(k, i, j, m):
        key = (k, i, j, m)
        if key not in dgam:
            dgam[key] = alg.D(gam[k][i][j], m)
        return dgam[key]

    tr = [None] * 3
    for b in R3:
        tot = None
        for a in R3:
            t = gam[a][b][a]
            tot = t if tot is None else tot + t
        tr[b] = tot
    ric = [[None] * 3 for _ in R3]
    for l in R3:
        for j in R3:
            tot = None
            for a in R3:
                t = d(a, l, j, a) - d(a, l, a, j)
                tot = t if tot is None else tot + t
            for b in R3:
                tot = tot + gam[b][l][j] * tr[b]
                for a in R3:
                    tot = tot - gam[b][l][a] * gam[a][b][j]
            ric[l][j] = tot
    return ric


def trace_free_sym(metric, ric):
    up, down = metric.g_up, metric.g_down
    half = Rat(1, 2)
    sym = [[(ric[i][j] + ric[j][i]) * half for j in R3] for i in R3]
    tr = None
    for a in R3:
        for b in R3:
            t = up[a][b] * sym[a][b]
            tr = t if tr is None else tr + t
    third = tr * Rat(1, 3)
    return [[sym[i][j] - down[i][j] * third for j in R3] for i in R3]


def ew_residual(alg):
    metric = metric_from_algebra(alg)
    omega = covector(alg, metric)
    gam = weyl_connection(alg, metric, omega)
    return trace_free_sym(metric, ricci(alg, gam)), metric, omega, gam


def einstein_weyl_residual(sys, ctx=None):
    """Trace-free symmetrized Ricci of the Weyl connection, reduced on-solution."""
    ctx = ctx or JetContext(4)
    symbol_metric(sys)
    res, _, _, _ = ew_residual(JetAlgebra(ctx, sys))
    return res


def cotton_components(alg):
    """C_pqr = nabla_r S_pq - nabla_q S_pr for the Levi-Civita connection of g."""
    metric = metric_from_algebra(alg)
    up, down = metric.g_up, metric.g_down
    gam = levi_civita(alg, metric)
    ric = ricci(alg, gam)
    scal = None
    for a in R3:
        for b in R3:
            t = up[a][b] * ric[a][b]
            scal = t if scal is None else scal + t
    quarter = scal * Rat(1, 4)
    S = [[ric[p][q] - down[p][q] * quarter for q in R3] for p in R3]

    def nabla(r, p, q):
        tot = alg.D(S[p][q], r)
        for a in R3:
            tot = tot - gam[a][p][r] * S[a][q] - gam[a][q][r] * S[p][a]
        return tot

    nab = {}
    for r in R3:
        for p in R3:
            for q in range(p, 3):
                nab[(r, p, q)] = nabla(r, p, q)

    def N(r, p, q):
        return nab[(r, min(p, q), max(p, q))]

    return [[[N(r, p, q) - N(q, p, r) for r in R3] for q in R3] for p in R3]


def cotton_tensor(sys, ctx=None):
    ctx = ctx or JetContext(4)
    return cotton_components(JetAlgebra(ctx, sys))


def point_algebra(sys, point, order=3):
    f, g = evol_germs(sys, point, order)
    return GermAlgebra(f, g)


def symbolic_algebra(sys):
    return GermAlgebra(sys.f, sys.g)


def nonzero_coefficients(alg, tensor):
    """Nonzero fiber coefficients of a tensor of algebra elements.

    Returns ``[(component index, monomial, value)]``; in point mode values are
    the exact Rats at the base point.
    """
    out = []

    def walk(t, idx):
        if isinstance(t, list):
            for i, x in enumerate(t):
                walk(x, idx + (i,))
            return
        for mono, c in alg.coefficients(t).items():
            v = c.constant_term() if hasattr(c, "constant_term") else c
            if not (v == 0 if isinstance(v, (Rat, int)) else v.is_zero()):
                out.append((idx, mono, v))

    walk(tensor, ())
    return out
