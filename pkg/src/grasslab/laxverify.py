"""Verification of dispersionless Lax pairs and lambda-dependent vector fields."""

import random
from dataclasses import dataclass, field

from .classify import (
    POINTWISE_VERIFIED, REFUTED, SYMBOLIC_PROVEN, Verdict, Witness, random_rat,
)
from .exprcore import Expr, VarTable, parse, rat
from .jetspace import BASE, DIRS, JetContext, Rewriter
from .weylgeom import JetAlgebra, covector, metric_from_algebra, weyl_connection

LAM = "lam"
LAX_VARS = (LAM,) + BASE


def lax_table():
    return VarTable(LAX_VARS)


@dataclass
class LaxPair:
    """S_y = P(S_x, a, b, p, q), S_t = Q(S_x, a, b, p, q) with S_x = lam."""

    P: Expr
    Q: Expr
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.strict and self.P.diff(LAM).is_zero() and self.Q.diff(LAM).is_zero():
            raise ValueError("P and Q do not depend on lam")

    @classmethod
    def parse(cls, P, Q, strict=True):
        t = lax_table()
        return cls(parse(str(P), t), parse(str(Q), t), strict)

    @property
    def table(self):
        return self.P.table


def _lift_system(sys, table):
    return sys.f.to_table(table), sys.g.to_table(table)


def lax_relations(sys, lax):
    """The six first-order compatibility relations (each should vanish)."""
    t = lax.table
    f, g = _lift_system(sys, t)
    P, Q = lax.P, lax.Q
    Pl, Ql = P.diff(LAM), Q.diff(LAM)
    d = {(h, c): e.diff(c) for h, e in (("f", f), ("g", g), ("P", P), ("Q", Q)) for c in BASE}
    return [
        d["f", "a"] * d["P", "a"] + d["g", "a"] * d["P", "p"] + Pl * d["Q", "a"] - Ql * d["P", "a"],
        d["f", "p"] * d["P", "a"] + d["g", "p"] * d["P", "p"] + Pl * d["Q", "p"] - Ql * d["P", "p"],
        d["Q", "a"] - (d["f", "b"] * d["P", "a"] + d["f", "a"] * d["P", "b"] + d["g", "b"] * d["P", "p"]
                       + d["g", "a"] * d["P", "q"] + Pl * d["Q", "b"] - Ql * d["P", "b"]),
        d["Q", "p"] - (d["f", "q"] * d["P", "a"] + d["f", "p"] * d["P", "b"] + d["g", "q"] * d["P", "p"]
                       + d["g", "p"] * d["P", "q"] + Pl * d["Q", "q"] - Ql * d["P", "q"]),
        d["Q", "b"] - (d["f", "b"] * d["P", "b"] + d["g", "b"] * d["P", "q"]),
        d["Q", "q"] - (d["f", "q"] * d["P", "b"] + d["g", "q"] * d["P", "q"]),
    ]


def dispersion_determinant(sys, lax):
    t = lax.table
    f, g = _lift_system(sys, t)
    Pl, Ql = lax.P.diff(LAM), lax.Q.diff(LAM)
    m11 = f.diff("a") + f.diff("b") * Pl - Ql
    m12 = f.diff("p") + f.diff("q") * Pl
    m21 = g.diff("a") + g.diff("b") * Pl
    m22 = g.diff("p") + g.diff("q") * Pl - Ql
    return m11 * m22 - m12 * m21


def _verdict_for(exprs, mode, n, seed, labels=None):
    """Symbolic zero test or evaluation at random rational points."""
    labels = labels or [f"relation {i}" for i in range(len(exprs))]
    if mode == "symbolic":
        for e, lab in zip(exprs, labels):
            if not e.is_zero():
                pt, val = _nonzero_point(e, seed)
                return Verdict(REFUTED, 0, seed, Witness(pt, val, lab), (seed,))
        return Verdict(SYMBOLIC_PROVEN, 0, seed, None, (seed,))
    rng = random.Random(seed)
    checked = 0
    while checked < n:
        names = sorted({v for e in exprs for v in e.free_vars()})
        pt = {v: random_rat(rng) for v in names}
        try:
            vals = [e.evaluate({k: pt[k] for k in e.free_vars()}) for e in exprs]
        except ZeroDivisionError:
            continue
        checked += 1
        for v, lab in zip(vals, labels):
            if v != 0:
                return Verdict(REFUTED, checked, seed, Witness(pt, v, lab), (seed,))
    return Verdict(POINTWISE_VERIFIED, checked, seed, None, (seed,))


def _nonzero_point(e, seed, tries=50):
    rng = random.Random(seed)
    for _ in range(tries):
        pt = {v: random_rat(rng) for v in e.free_vars()}
        try:
            val = e.evaluate(pt)
        except ZeroDivisionError:
            continue
        if val != 0:
            return pt, val
    return {}, e


def check_lax_relations(sys, lax, mode="symbolic", n=7, seed=0):
    return _verdict_for(lax_relations(sys, lax), mode, n, seed)


def check_dispersion_identity(sys, lax, mode="symbolic", n=7, seed=0):
    return _verdict_for([dispersion_determinant(sys, lax)], mode, n, seed, ["dispersion"])


# -- dispersion conic -------------------------------------------------------------

def dispersion_parametrisation(sys):
    """Rational parametrisation (mu(phi), lam(phi)) of the dispersion relation."""
    t = VarTable(("phi",) + BASE)
    f, g = _lift_system(sys, t)
    phi = t.var("phi")
    fa, fb, fp, fq = (f.diff(c) for c in BASE)
    ga, gb, gp, gq = (g.diff(c) for c in BASE)
    den = fq + (fb - gq) * phi - gb * phi * phi
    if den.is_zero():
        raise ValueError("denominator vanishes identically; reparametrise")
    mu = -(fp + (fa - gp) * phi - ga * phi * phi) / den
    lam = ((fq + fb * phi) * (gp + ga * phi) - (fp + fa * phi) * (gq + gb * phi)) / den
    return mu, lam


def dispersion_relation(sys, mu, lam):
    """(lam - f_a - mu f_b)(lam - g_p - mu g_q) - (f_p + mu f_q)(g_a + mu g_b)."""
    t = mu.table
    f, g = _lift_system(sys, t)
    fa, fb, fp, fq = (f.diff(c) for c in BASE)
    ga, gb, gp, gq = (g.diff(c) for c in BASE)
    return (lam - fa - mu * fb) * (lam - gp - mu * gq) - (fp + mu * fq) * (ga + mu * gb)


# -- vector fields on (x, y, t, lam) -------------------------------------------------

VF_KEYS = ("dx", "dy", "dt", "dlam")


def vf_context(max_order=4):
    ctx = JetContext(max_order)
    ctx.table.add(LAM, "auxiliary")
    return ctx


@dataclass
class LaxVectorFields:
    X: dict
    Y: dict
    ctx: JetContext

    def __post_init__(self):
        one = self.ctx.table.const(1)
        if self.X["dy"] != one or self.Y["dt"] != one:
            raise ValueError("fields must be normalised: X = d/dy + ..., Y = d/dt + ...")

    @classmethod
    def parse(cls, X, Y, ctx=None):
        ctx = ctx or vf_context()
        conv = {k: {c: ctx.parse(str(v.get(c, "0"))) for c in VF_KEYS} for k, v in (("X", X), ("Y", Y))}
        return cls(conv["X"], conv["Y"], ctx)


def apply_vf(V, h, ctx):
    tot = ctx.table.const(0)
    for k, key in enumerate(VF_KEYS[:3]):
        c = V[key]
        if not c.is_zero():
            tot = tot + c * ctx.total_derivative(h, k)
    if not V["dlam"].is_zero():
        tot = tot + V["dlam"] * h.diff(LAM)
    return tot


def bracket(X, Y, ctx):
    return {key: apply_vf(X, Y[key], ctx) - apply_vf(Y, X[key], ctx) for key in VF_KEYS}


def check_vf_commute(rules, fields, seed=0):
    """[X, Y] reduces to zero modulo the oriented rules ``{lead jet: Expr}``."""
    ctx = fields.ctx
    rules = {k: (ctx.parse(v) if isinstance(v, str) else v) for k, v in rules.items()}
    rw = Rewriter(ctx, rules)
    br = bracket(fields.X, fields.Y, ctx)
    for key in VF_KEYS:
        r = rw.reduce(br[key])
        if not r.is_zero():
            pt, val = _nonzero_point(r, seed)
            return Verdict(REFUTED, 0, seed, Witness(pt, val, f"[X,Y] {key} = {r}"), (seed,))
    return Verdict(SYMBOLIC_PROVEN, 0, seed, None, (seed,))


# -- null and totally geodesic checks ------------------------------------------------------

def _weyl_data(sys, ctx):
    alg = JetAlgebra(ctx, sys)
    metric = metric_from_algebra(alg)
    omega = covector(alg, metric)
    return alg, metric, weyl_connection(alg, metric, omega)


def null_geodesic_conditions(sys, lax, ctx=None):
    """g(theta, theta) and the 2x2 minors of D_X theta, D_Y theta against theta.

    Exprs over the jet context extended by lam and lam_x.
    """
    ctx = ctx or vf_context(4)
    if "lam_x" not in ctx.table:
        ctx.table.add("lam_x", "auxiliary")
    alg, metric, gam = _weyl_data(sys, ctx)
    P = lax.P.to_table(ctx.table)
    Q = lax.Q.to_table(ctx.table)
    Pl, Ql = P.diff(LAM), Q.diff(LAM)
    one = ctx.table.const(1)
    theta = [one, Pl, Ql]
    lam_x = ctx.table.var("lam_x")
    second = {"a": "u_xx", "b": "u_xy", "p": "v_xx", "q": "v_xy"}

    def lam_d(H):
        tot = H.diff(LAM) * lam_x
        for c in BASE:
            tot = tot + H.diff(c) * ctx.var(second[c])
        return tot

    lam_i = [lam_x, lam_d(P), lam_d(Q)]

    def d(h, i):
        return alg.D(h, i) + h.diff(LAM) * lam_i[i]

    nab = [[d(theta[j], i) - sum((gam[k][j][i] * theta[k] for k in range(3)), ctx.table.const(0))
            for j in range(3)] for i in range(3)]
    up = metric.g_up
    null = sum((up[i][j] * theta[i] * theta[j] for i in range(3) for j in range(3)),
               ctx.table.const(0))
    out = {"null": null}
    for name, vec in (("X", [-Pl, one, ctx.table.const(0)]), ("Y", [-Ql, ctx.table.const(0), one])):
        Dth = [sum((vec[i] * nab[i][j] for i in range(3)), ctx.table.const(0)) for j in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                out[f"D_{name} theta ^ theta [{DIRS[i]}{DIRS[j]}]"] = Dth[i] * theta[j] - Dth[j] * theta[i]
    return out


def check_null_geodesic(sys, lax, point=None, seed=0):
    """Null and totally geodesic conditions, exactly at a point or symbolically.

    ``point`` maps names (lam, lam_x, jets) to Rats; missing names are drawn
    from ``random.Random(seed)``.  Without a point the Exprs are tested for
    identical vanishing.
    """
    conds = null_geodesic_conditions(sys, lax)
    if point is None:
        return _verdict_for(list(conds.values()), "symbolic", 0, seed, list(conds))
    rng = random.Random(seed)
    pt = {k: rat(v) for k, v in point.items()}
    for e in conds.values():
        for v in e.free_vars():
            pt.setdefault(v, random_rat(rng))
    for lab, e in conds.items():
        try:
            val = e.evaluate({k: pt[k] for k in e.free_vars()})
        except ZeroDivisionError as exc:
            raise ValueError("pole at point") from exc
        if val != 0:
            return Verdict(REFUTED, 1, seed, Witness(pt, val, lab), (seed,))
    return Verdict(POINTWISE_VERIFIED, 1, seed, None, (seed,))


def lax_from_json(data, systems):
    """Lax fixture: ``{"system": name, "P": .., "Q": ..}`` gives (system, LaxPair);
    the vector-field form ``{"X": .., "Y": .., "rules": ..}`` gives (rules, fields)."""
    if "P" in data:
        sys = systems[data["system"]] if isinstance(data.get("system"), str) else data.get("system")
        return sys, LaxPair.parse(data["P"], data["Q"])
    return data.get("rules", {}), LaxVectorFields.parse(data["X"], data["Y"])
