"""Decision procedures: non-degeneracy, integrability, linearisability and
linear degeneracy, plus the Monge-Ampere and Chasles constructors.

Point mode works with Taylor germs of the evolutionary functions (f, g) at
random rational points of the fourfold.  Implicit systems are solved for a
derivative direction by a chord iteration on germs; systems produced by the
SL(5) action are evaluated through their origin.
"""

import itertools
import json
import random
from dataclasses import dataclass, field
from importlib import resources

from . import _linalg as la
from .exprcore import Expr, Rat, VarTable, rat, rat_str
from .grassmann import (
    ChartBoundary, SL5Element, act, chart_matrix, chart_values, linear_pairs,
    solve_pair, transform_system,
)
from .jetspace import (
    BASE, DIRS, IMPLICIT_VARS, Germ, GermAlgebra, SystemEvol, SystemImplicit,
    deriv_symbol, eval_expr_germs, evol_germs, evolutionary_names,
    implicit_table,
)
from .weylgeom import (
    cotton_components, det3, evol_metric_entries, ew_residual, nonzero_coefficients,
)

SYMBOLIC_PROVEN = "SymbolicProven"
POINTWISE_VERIFIED = "PointwiseVerified"
REFUTED = "Refuted"

DEFAULT_POINTS = 7
DEFAULT_SEEDS = (0, 1)
MAX_DRAWS = 200


class DegenerateSystem(ValueError):
    pass


class NoSampler(ValueError):
    pass


@dataclass
class Witness:
    point: dict
    value: object
    detail: str = ""

    def to_json(self):
        return {"point": {k: _json_value(v) for k, v in self.point.items()},
                "value": _json_value(self.value), "detail": self.detail}


@dataclass
class Verdict:
    status: str
    points_checked: int = 0
    seed: int = None
    witness: Witness = None
    seeds: tuple = ()

    def __post_init__(self):
        if self.status == REFUTED and self.witness is None:
            raise ValueError("a refutation needs a witness")

    @property
    def passed(self):
        return self.status != REFUTED

    def __bool__(self):
        return self.passed

    def to_json(self):
        out = {"status": self.status, "points_checked": self.points_checked,
               "seed": self.seed, "seeds": list(self.seeds)}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _json_value(v):
    if isinstance(v, Rat):
        return rat_str(v)
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, (int, str)) or v is None:
        return v
    return str(v)


def random_rat(rng, num=9, den=5):
    """Nonzero rational with bounded numerator and denominator."""
    n = rng.randint(1, num) * rng.choice((-1, 1))
    return Rat(n, rng.randint(1, den))


# -- fourfold points and jets ------------------------------------------------------

def implicit_residual(sys, values, order=None):
    """(F, G) at six values (Rats or germs), evaluated through ``origin``."""
    if sys.origin is not None:
        orig, M = sys.origin
        pre = chart_values(act(M.inverse(), chart_matrix(values)))
        if isinstance(orig, SystemEvol):
            orig = orig.to_implicit()
        return implicit_residual(orig, pre, order)
    if isinstance(values[0], Germ) or any(isinstance(v, Germ) for v in values):
        names = next(v for v in values if isinstance(v, Germ)).names
        args = {}
        for n, v in zip(IMPLICIT_VARS, values):
            args[n] = v if isinstance(v, Germ) else Germ.const(names, v, order)
        return tuple(eval_expr_germs(h, args, names, order) for h in (sys.F, sys.G))
    pt = dict(zip(IMPLICIT_VARS, values))
    return tuple(h.evaluate({k: pt[k] for k in h.free_vars()}) for h in (sys.F, sys.G))


def implicit_jacobian(sys, values):
    """2 x 6 Jacobian of (F, G) at a point, from order-1 germs."""
    germs = [Germ.variable(IMPLICIT_VARS, i, v, 1) for i, v in enumerate(values)]
    F, G = implicit_residual(sys, germs, 1)
    unit = [tuple(int(i == j) for j in range(6)) for i in range(6)]
    return [[h.derivative(unit[i]) for i in range(6)] for h in (F, G)]


def choose_direction(jac, order=(2, 0, 1)):
    for k in order:
        d = jac[0][k] * jac[1][k + 3] - jac[0][k + 3] * jac[1][k]
        if d != 0:
            return k
    return None


def implicit_germs(sys, values, k, order):
    """Germs of (f, g) solving F = G = 0 for (u_k, v_k) near a fourfold point."""
    names = evolutionary_names(k)
    jac = implicit_jacobian(sys, values)
    J = [[jac[0][k], jac[0][k + 3]], [jac[1][k], jac[1][k + 3]]]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    if det == 0:
        raise ValueError("singular Jacobian in the chosen direction")
    Jinv = [[J[1][1] / det, -J[0][1] / det], [-J[1][0] / det, J[0][0] / det]]
    pos = {n: IMPLICIT_VARS.index(n) for n in IMPLICIT_VARS}
    base_args = [None] * 6
    for i, c in enumerate(BASE):
        j = pos[names[c]]
        base_args[j] = Germ.variable(BASE, i, values[j], order)
    f = Germ.const(BASE, values[k], order)
    g = Germ.const(BASE, values[k + 3], order)
    for _ in range(order + 1):
        args = list(base_args)
        args[k], args[k + 3] = f, g
        RF, RG = implicit_residual(sys, args, order)
        f = f - (RF * Jinv[0][0] + RG * Jinv[0][1])
        g = g - (RF * Jinv[1][0] + RG * Jinv[1][1])
    args = list(base_args)
    args[k], args[k + 3] = f, g
    RF, RG = implicit_residual(sys, args, order)
    if not (RF.is_zero() and RG.is_zero()):
        raise ArithmeticError("implicit germ iteration did not converge")
    return f, g


class Sampler:
    """Random rational points of the fourfold of a system."""

    def __init__(self, sys):
        self.sys = sys
        self.solved = None
        if isinstance(sys, SystemImplicit) and sys.origin is None:
            pairs = linear_pairs(sys)
            if not pairs:
                raise NoSampler("no jointly linear variable pair to solve for")
            self.pair = pairs[0]
            self.solved = solve_pair(sys, self.pair)
        elif isinstance(sys, SystemImplicit):
            self.inner = Sampler(sys.origin[0])

    def draw(self, rng):
        for _ in range(MAX_DRAWS):
            try:
                return self._draw(rng)
            except (ZeroDivisionError, ChartBoundary):
                continue
        raise NoSampler("could not find a regular point")

    def _draw(self, rng):
        sys = self.sys
        if isinstance(sys, SystemEvol):
            pt = {c: random_rat(rng) for c in BASE}
            f = sys.f.evaluate({k: pt[k] for k in sys.f.free_vars()})
            g = sys.g.evaluate({k: pt[k] for k in sys.g.free_vars()})
            return [pt["a"], pt["b"], f, pt["p"], pt["q"], g]
        if sys.origin is not None:
            U0 = self.inner.draw(rng)
            return chart_values(act(sys.origin[1], chart_matrix(U0)))
        pt = {n: random_rat(rng) for n in IMPLICIT_VARS if n not in self.pair}
        for n in self.pair:
            e = self.solved[n]
            pt[n] = e.evaluate({k: pt[k] for k in e.free_vars()})
        return [pt[n] for n in IMPLICIT_VARS]


@dataclass
class JetPoint:
    values: list
    direction: int
    f: Germ
    g: Germ

    def d(self, fn, index):
        """Partial derivative of f or g along BASE letters at the point."""
        h = self.f if fn == "f" else self.g
        return h.derivative(tuple(index.count(c) for c in BASE))

    def label(self):
        out = {n: v for n, v in zip(IMPLICIT_VARS, self.values)}
        out["direction"] = DIRS[self.direction]
        return out


def metric_det(jp):
    ent = evol_metric_entries(lambda fn, c: jp.d(fn, c))
    return det3(ent)


def jet_at(sys, values, order):
    if isinstance(sys, SystemEvol):
        base = {"a": values[0], "b": values[1], "p": values[3], "q": values[4]}
        f, g = evol_germs(sys, base, order)
        return JetPoint(list(values), 2, f, g)
    k = choose_direction(implicit_jacobian(sys, values))
    if k is None:
        return None
    f, g = implicit_germs(sys, values, k, order)
    return JetPoint(list(values), k, f, g)


def mixing_transform(seed=0):
    """A fixed random SL(5) element mixing the independent variables only."""
    rng = random.Random(1000 + seed)
    while True:
        D = [[rng.randint(-2, 2) for _ in range(3)] for _ in range(3)]
        if la.mat(D).det() != 0:
            return SL5Element.from_blocks(D=D)


def prepare(sys):
    """A presentation of the system admitting a solvable direction somewhere.

    Returns ``(system, transform or None)``; when no derivative direction is
    solvable at sampled points, the independent variables are mixed.
    """
    if isinstance(sys, SystemEvol):
        return sys, None
    rng = random.Random(7)
    sampler = Sampler(sys)
    for _ in range(5):
        U = sampler.draw(rng)
        if choose_direction(implicit_jacobian(sys, U)) is not None:
            return sys, None
    M = mixing_transform()
    return transform_system(sys, M), M


def jet_points(sys, n, seed, order=3, nondegenerate=True):
    """``n`` jet points of a system (prepared) drawn with ``random.Random(seed)``."""
    rng = random.Random(seed)
    sampler = Sampler(sys)
    out = []
    draws = 0
    while len(out) < n:
        draws += 1
        if draws > MAX_DRAWS:
            raise NoSampler("too many rejected points")
        U = sampler.draw(rng)
        try:
            jp = jet_at(sys, U, order)
        except (ZeroDivisionError, ChartBoundary):
            continue
        if jp is None:
            continue
        if nondegenerate and metric_det(jp) == 0:
            continue
        out.append(jp)
    return out


def _as_system(sys):
    if isinstance(sys, (SystemEvol, SystemImplicit)):
        return sys
    raise TypeError("expected SystemEvol or SystemImplicit")


def _points_verdict(sys, check, n, seeds, order):
    sys, _ = prepare(_as_system(sys))
    checked = 0
    for s in seeds:
        for jp in jet_points(sys, n, s, order):
            bad = check(jp)
            checked += 1
            if bad is not None:
                value, detail = bad
                return Verdict(REFUTED, checked, seeds[0], Witness(jp.label(), value, detail),
                               tuple(seeds))
    return Verdict(POINTWISE_VERIFIED, checked, seeds[0], None, tuple(seeds))


# -- non-degeneracy -------------------------------------------------------------

def test_nondegenerate(sys, point=None, mode="points", n=3, seed=0):
    """det of the symbol is not identically zero."""
    sys = _as_system(sys)
    if mode == "symbolic":
        if isinstance(sys, SystemEvol):
            d = det3(evol_metric_entries(lambda fn, c: (sys.f if fn == "f" else sys.g).diff(c)))
            if d.is_zero():
                return Verdict(REFUTED, 0, None, Witness({}, Rat(0), "det g vanishes identically"))
            return Verdict(SYMBOLIC_PROVEN, 0, None)
        mode = "points"
    psys, M = prepare(sys)
    if point is not None:
        point = list(point)
        if M is not None:
            point = chart_values(act(M, chart_matrix(point)))
        jp = jet_at(psys, point, 1)
        pts = [jp] if jp is not None else []
    else:
        pts = jet_points(psys, n, seed, 1, nondegenerate=False)
    # a single nonzero value proves det g is not identically zero
    if not pts or all(metric_det(jp) == 0 for jp in pts):
        label = pts[-1].label() if pts else {}
        return Verdict(REFUTED, len(pts), seed, Witness(label, Rat(0), "det g = 0"), (seed,))
    return Verdict(POINTWISE_VERIFIED, len(pts), seed, None, (seed,))


# -- integrability ----------------------------------------------------------------

def _first_nonzero(alg, tensor):
    bad = nonzero_coefficients(alg, tensor)
    if not bad:
        return None
    idx, mono, v = bad[0]
    return v, f"component {idx} coefficient of {'*'.join(mono) or '1'}"


def integrability_residual(jp):
    alg = GermAlgebra(jp.f, jp.g)
    res, _, _, _ = ew_residual(alg)
    return alg, res


def _symbolic_evol(sys):
    """Evolutionary form of an implicit system when it is jointly linear in (u3, v3)."""
    if isinstance(sys, SystemEvol):
        return sys
    if sys.origin is not None:
        return None
    for k in (2, 0, 1):
        pair = (f"u{k + 1}", f"v{k + 1}")
        if pair in linear_pairs(sys):
            sol = solve_pair(sys, pair)
            names = evolutionary_names(k)
            ren = {names[c]: c for c in BASE}
            t = SystemEvol.parse("0", "0").table
            return SystemEvol(sol[pair[0]].to_table(t, ren), sol[pair[1]].to_table(t, ren), sys.name)
    return None


def test_integrable(sys, mode="points", n=DEFAULT_POINTS, seeds=DEFAULT_SEEDS):
    """Einstein-Weyl residual vanishes on solutions."""
    sys = _as_system(sys)
    if mode == "symbolic":
        ev = _symbolic_evol(sys)
        if ev is not None:
            if not test_nondegenerate(ev, mode="symbolic"):
                raise DegenerateSystem("degenerate symbol")
            alg = GermAlgebra(ev.f, ev.g)
            res, _, _, _ = ew_residual(alg)
            bad = _first_nonzero(alg, res)
            if bad is None:
                return Verdict(SYMBOLIC_PROVEN, 0, None)
            return Verdict(REFUTED, 0, None, Witness({}, bad[0], bad[1]))

    def check(jp):
        alg, res = integrability_residual(jp)
        return _first_nonzero(alg, res)

    return _points_verdict(sys, check, n, tuple(seeds), 3)


# -- derivative relations ------------------------------------------------------------

_LETTER = {("u", 1): "a", ("u", 2): "b", ("v", 1): "p", ("v", 2): "q"}


def _accessor(jp):
    def d(fn, *vars_):
        return jp.d(fn, "".join(_LETTER[v] for v in vars_))
    return d


def _mirror(rel):
    """The f <-> g, u <-> v image of a relation builder."""
    sw = {"f": "g", "g": "f", "u": "v", "v": "u"}

    def out(d, *args):
        def d2(fn, *vs):
            return d(sw[fn], *((sw[k], i) for k, i in vs))
        return rel(d2, *args)
    return out


def _lin_rel(d, i, j):
    """Cleared-denominator linearisability relations for the index pair (i, j)."""
    ui, vi, uj, vj = ("u", i), ("v", i), ("u", j), ("v", j)
    ci = d("g", vi) - d("f", ui)
    cj = d("g", vj) - d("f", uj)
    if i == j:
        return [ci * d("f", ui, ui) - 2 * d("g", ui) * d("f", ui, vi),
                -ci * d("f", vi, vi) - 2 * d("f", vi) * d("f", ui, vi)]
    return [
        d("f", ui, uj) * ci * cj - d("g", uj) * cj * d("f", ui, vi) - d("g", ui) * ci * d("f", uj, vj),
        d("f", vi, vj) * ci * cj + d("f", vj) * cj * d("f", ui, vi) + d("f", vi) * ci * d("f", uj, vj),
        (d("f", ui, vj) + d("f", uj, vi)) * ci * cj - cj * cj * d("f", ui, vi)
        - ci * ci * d("f", uj, vj),
    ]


def linearisability_relations(d):
    """All relations (with mirrors) from a derivative accessor ``d(fn, *vars)``."""
    out = []
    for rel in (_lin_rel, _mirror(_lin_rel)):
        for i, j in ((1, 1), (2, 2), (1, 2)):
            out.extend(rel(d, i, j))
    return out


def _ld_term(d, i, j, k):
    ui, vi, uj, vj, uk, vk = ("u", i), ("v", i), ("u", j), ("v", j), ("u", k), ("v", k)
    return ((d("f", uk) - d("g", vk)) * d("f", ui, uj)
            + d("g", uk) * (d("f", ui, vj) + d("f", uj, vi))
            + d("f", vk) * d("g", ui, uj) + d("g", uk) * d("g", vi, vj))


def _sym_relation(d, multiset):
    tot = None
    for i, j, k in sorted(set(itertools.permutations(multiset))):
        if (j, i, k) < (i, j, k):
            continue
        t = _ld_term(d, i, j, k)
        if i != j:
            t = t * 2
        tot = t if tot is None else tot + t
    return tot


def ld_relations(d, dim=3):
    """Symmetrised linear-degeneracy relations for a ``dim``-dimensional system.

    The symmetrisation sums over distinct arrangements of each multiset
    {i, j, k}; with ``dim = 2`` this is the pair of 2D relations, with
    ``dim = 3`` the eight relations.
    """
    n = dim - 1
    out = []
    for rel in (_sym_relation, _mirror(_sym_relation)):
        for ms in itertools.combinations_with_replacement(range(1, n + 1), 3):
            out.append(rel(d, ms))
    return out


def ld_relations_pairs(d):
    """The eight relations indexed by (i, j) in {1, 2}^2 as in the paired form."""
    def one(dd, i, j):
        return _ld_term(dd, i, i, j) + 2 * _ld_term(dd, i, j, i)
    out = []
    for rel in (one, _mirror(one)):
        for i in (1, 2):
            for j in (1, 2):
                out.append(rel(d, i, j))
    return out


def _relations_check(builder):
    def check(jp):
        for r, v in enumerate(builder(_accessor(jp))):
            if v != 0:
                return v, f"relation {r}"
        return None
    return check


def _lin_denominators(d):
    return [d("g", ("v", i)) - d("f", ("u", i)) for i in (1, 2)]


def _cotton_check(jp):
    alg = GermAlgebra(jp.f, jp.g)
    bad = _first_nonzero(alg, cotton_components(alg))
    return None if bad is None else (bad[0], "cotton " + bad[1])


def test_linearisable(sys, mode="points", n=DEFAULT_POINTS, seeds=DEFAULT_SEEDS, cotton=False):
    """Second-order linearisability relations, with the Cotton tensor as cross-check.

    The relations are used in cleared-denominator form; at points where a
    denominator g_vi - f_ui vanishes they carry no information and the
    Cotton tensor decides instead.  ``cotton=True`` always cross-checks.
    """
    sys = _as_system(sys)
    rels = _relations_check(linearisability_relations)

    def check(jp):
        d = _accessor(jp)
        bad = None
        if all(x != 0 for x in _lin_denominators(d)):
            bad = rels(jp)
            if bad is not None or not cotton:
                return bad
        return _cotton_check(jp)

    if mode == "symbolic":
        ev = _symbolic_evol(sys)
        if ev is not None:
            d = _symbolic_accessor(ev)
            if all(not x.is_zero() for x in _lin_denominators(d)):
                for r, v in enumerate(linearisability_relations(d)):
                    if not v.is_zero():
                        return Verdict(REFUTED, 0, None, Witness({}, v, f"relation {r}"))
            alg = GermAlgebra(ev.f, ev.g)
            bad = _first_nonzero(alg, cotton_components(alg))
            if bad is not None:
                return Verdict(REFUTED, 0, None, Witness({}, bad[0], "cotton " + bad[1]))
            return Verdict(SYMBOLIC_PROVEN, 0, None)
    return _points_verdict(sys, check, n, tuple(seeds), 4)


def _symbolic_accessor(ev):
    memo = {}

    def d(fn, *vars_):
        key = (fn,) + vars_
        if key not in memo:
            h = ev.f if fn == "f" else ev.g
            for v in vars_:
                h = h.diff(_LETTER[v])
            memo[key] = h
        return memo[key]
    return d


def test_linearly_degenerate(sys, d=3, mode="points", n=DEFAULT_POINTS, seeds=DEFAULT_SEEDS):
    if d != 3:
        raise ValueError("fourfold systems are three-dimensional; use ld_relations for other d")
    sys = _as_system(sys)
    if mode == "symbolic":
        ev = _symbolic_evol(sys)
        if ev is not None:
            for r, v in enumerate(ld_relations(_symbolic_accessor(ev))):
                if not v.is_zero():
                    return Verdict(REFUTED, 0, None, Witness({}, v, f"relation {r}"))
            return Verdict(SYMBOLIC_PROVEN, 0, None)
    return _points_verdict(sys, _relations_check(ld_relations), n, tuple(seeds), 2)


# -- integrability conditions --------------------------------------------------------

IDX1 = list(BASE)
IDX2 = ["".join(c) for c in itertools.combinations_with_replacement(BASE, 2)]
IDX3 = ["".join(c) for c in itertools.combinations_with_replacement(BASE, 3)]
FIRST_NAMES = [deriv_symbol(fn, i) for fn in "fg" for i in IDX1]
SECOND_NAMES = [deriv_symbol(fn, i) for fn in "fg" for i in IDX2]
THIRD_NAMES = [deriv_symbol(fn, i) for fn in "fg" for i in IDX3]
# the trace-free residual has one dependent component, R_tt
RESIDUAL_COMPONENTS = [(i, j) for i in range(3) for j in range(i, 3) if (i, j) != (2, 2)]


def _exps(index):
    return tuple(index.count(c) for c in BASE)


class RankDeficient(ArithmeticError):
    pass


@dataclass
class IntegrabilityConditions:
    first: dict
    table: VarTable
    rows: list
    rhs: list
    rank: int
    solved: dict = field(default_factory=dict)
    second: dict = None
    attempts: int = 1

    def evaluate(self, second):
        """Third derivatives at numeric second derivatives ``{name: Rat}``."""
        return {k: v.evaluate({n: second[n] for n in v.free_vars()}) for k, v in self.solved.items()}

    def to_json(self):
        return {"first": {k: rat_str(v) for k, v in self.first.items()},
                "rank": self.rank, "equations": len(self.rows),
                "third": {k: str(v) for k, v in self.solved.items()}}


def residual_system(first, second=None):
    """Linear system in the 40 third-derivative symbols from the residual.

    ``first`` maps the 8 first-derivative names to Rats; ``second`` optionally
    fixes the second derivatives (otherwise they stay symbolic).  Returns
    ``(table, rows, rhs)`` with rows of Rats and rhs polynomials.
    """
    sym_names = (SECOND_NAMES if second is None else []) + THIRD_NAMES
    table = VarTable(sym_names)
    gens = dict(zip(sym_names, table.ctx.gens()))

    def germ(fn):
        derivs = {(0, 0, 0, 0): Rat(0)}
        for ix in IDX1:
            derivs[_exps(ix)] = rat(first[deriv_symbol(fn, ix)])
        for ix in IDX2:
            nm = deriv_symbol(fn, ix)
            derivs[_exps(ix)] = gens[nm] if second is None else rat(second[nm])
        for ix in IDX3:
            derivs[_exps(ix)] = gens[deriv_symbol(fn, ix)]
        return Germ.from_derivatives(BASE, 3, derivs)

    alg = GermAlgebra(germ("f"), germ("g"))
    res, _, _, _ = ew_residual(alg)
    rows, rhs = [], []
    third = [gens[n] for n in THIRD_NAMES]
    for i, j in RESIDUAL_COMPONENTS:
        for _, c in sorted(alg.coefficients(res[i][j]).items()):
            v = c.constant_term()
            if not hasattr(v, "derivative"):
                v = table.ctx.constant(v)
            if v.is_zero():
                continue
            row = []
            lin = table.ctx.constant(0)
            for nm, s in zip(THIRD_NAMES, third):
                co = v.derivative(nm)
                r = co.leading_coefficient() if not co.is_zero() else Rat(0)
                row.append(Rat(r))
                lin += s * r
            rows.append(row)
            rhs.append(-(v - lin))
    return table, rows, rhs


def derive_integrability_conditions(specialize_first_order=None, seed=0, second=None,
                                    max_retries=10):
    """Third derivatives of f, g as functions of the second derivatives.

    ``specialize_first_order`` gives the 8 first derivatives (list in the
    order f_a..f_q, g_a..g_q, or a dict); otherwise they are drawn from
    ``random.Random(seed)`` and redrawn while the rank drops below 40.
    """
    rng = random.Random(seed)
    for attempt in range(max_retries):
        if specialize_first_order is None:
            first = {n: random_rat(rng) for n in FIRST_NAMES}
        elif isinstance(specialize_first_order, dict):
            first = {n: rat(specialize_first_order[n]) for n in FIRST_NAMES}
        else:
            vals = list(specialize_first_order)
            if len(vals) != 8:
                raise ValueError("expected 8 first derivatives")
            first = dict(zip(FIRST_NAMES, (rat(v) for v in vals)))
        table, rows, rhs = residual_system(first, second)
        aug = [list(r) + [b] for r, b in zip(rows, rhs)]
        ech, piv = la.bareiss(aug)
        rank = sum(1 for c in piv if c < 40)
        if rank < 40:
            if specialize_first_order is not None:
                raise RankDeficient(f"rank {rank} < 40 at the given specialization")
            continue
        if len(piv) > 40 or any(not _poly_zero(ech[i][40]) for i in range(40, len(ech))):
            raise ArithmeticError("inconsistent residual system")
        x = [None] * 40
        for i in reversed(range(40)):
            s = ech[i][40]
            for j in range(i + 1, 40):
                if ech[i][j] != 0:
                    s = s - x[j] * ech[i][j]
            x[i] = s * (1 / Rat(ech[i][i]))
        solved = {n: Expr(table, _as_poly(v, table)) for n, v in zip(THIRD_NAMES, x)}
        return IntegrabilityConditions(first, table, rows, rhs, rank, solved, second,
                                       attempt + 1)
    raise RankDeficient("rank < 40 after retries")


def _poly_zero(v):
    return v == 0 if isinstance(v, (int, Rat)) else v.is_zero()


def _as_poly(v, table):
    if isinstance(v, (int, Rat)):
        return table.ctx.constant(v)
    return v


# -- constructors ----------------------------------------------------------------------

_PAIRS = ((1, 2), (1, 3), (2, 3))


def _minor_coeffs(a):
    if isinstance(a, dict):
        return {p: rat(a.get(p, a.get(f"{p[0]}{p[1]}", 0))) for p in _PAIRS}
    a = list(a)
    if len(a) == 3 and not isinstance(a[0], (list, tuple)):
        return {p: rat(x) for p, x in zip(_PAIRS, a)}
    return {p: rat(a[p[0] - 1][p[1] - 1]) for p in _PAIRS}


def _ma_expr(t, a, b, c, m):
    a = _minor_coeffs(a)
    u = {i: t.var(f"u{i}") for i in (1, 2, 3)}
    v = {i: t.var(f"v{i}") for i in (1, 2, 3)}
    e = t.const(rat(m))
    for (i, j), k in a.items():
        if k != 0:
            e = e + (u[i] * v[j] - u[j] * v[i]) * k
    for i in (1, 2, 3):
        e = e + u[i] * rat(b[i - 1]) + v[i] * rat(c[i - 1])
    return e


def make_monge_ampere(a, b, c, m, alpha, beta, gamma, mu, name="monge-ampere"):
    """F, G linear in the 2x2 minors of U and in its entries."""
    t = implicit_table()
    F = _ma_expr(t, a, b, c, m)
    G = _ma_expr(t, alpha, beta, gamma, mu)
    cf = _coeff_vector(F)
    cg = _coeff_vector(G)
    if la.rank(la.mat([cf, cg])) < 2:
        raise ValueError("dependent pair")
    return SystemImplicit(F, G, name)


def _coeff_vector(e):
    terms = dict(zip((tuple(int(x) for x in m) for m in e.num.monoms()), e.num.coeffs()))
    keys = [(0,) * 6]
    for i in range(6):
        keys.append(tuple(int(j == i) for j in range(6)))
    for i, j in itertools.combinations(range(6), 2):
        keys.append(tuple(int(k in (i, j)) for k in range(6)))
    return [Rat(terms.get(k, 0)) for k in keys]


@dataclass
class ChaslesResult:
    parametrisation: dict
    table: VarTable
    alpha: Rat = None
    beta: Rat = None
    system: SystemImplicit = None


def _plucker(xi, eta, i, j):
    return xi[i - 1] * eta[j - 1] - xi[j - 1] * eta[i - 1]


def chasles_generate(A=None, eigenvalues=None):
    """Quadratic parametrisation of the fourfold of lines joining xi to xi*A.

    For a diagonal matrix (or a list of eigenvalues) the (alpha, beta)
    system is returned as well; its points are u_i = p^{1,i+2}/p^{12},
    v_i = p^{i+2,2}/p^{12}.
    """
    if eigenvalues is not None:
        lam = [rat(x) for x in eigenvalues]
        if len(lam) != 5:
            raise ValueError("expected five eigenvalues")
        if len(set(lam)) < 5:
            raise ValueError("coincident eigenvalues")
        A = [[lam[i] if i == j else Rat(0) for j in range(5)] for i in range(5)]
    if A is None:
        raise ValueError("give A or eigenvalues")
    A = [[rat(x) for x in r] for r in A]
    t = VarTable([f"xi{i}" for i in range(1, 6)])
    xi = [t.var(f"xi{i}") for i in range(1, 6)]
    eta = [sum((xi[k] * A[k][j] for k in range(5)), t.const(0)) for j in range(5)]
    p12 = _plucker(xi, eta, 1, 2)
    if p12.is_zero():
        raise ChartBoundary("p12 vanishes identically")
    par = {}
    for i in (1, 2, 3):
        par[f"u{i}"] = _plucker(xi, eta, 1, i + 2) / p12
        par[f"v{i}"] = _plucker(xi, eta, i + 2, 2) / p12
    res = ChaslesResult(par, t)
    diag = all(A[i][j] == 0 for i in range(5) for j in range(5) if i != j)
    if diag:
        lam = [A[i][i] for i in range(5)]
        if len(set(lam)) < 5:
            raise ValueError("coincident eigenvalues")
        l1, l2, l3, l4, l5 = lam
        res.alpha = (l2 - l4) * (l3 - l1) / ((l2 - l3) * (l4 - l1))
        res.beta = (l2 - l5) * (l3 - l1) / ((l2 - l3) * (l5 - l1))
        res.system = alpha_beta_system(res.alpha, res.beta)
    return res


def alpha_beta_system(alpha, beta, name="table1_11111"):
    t = implicit_table()
    u1, u2, u3, v1, v2, v3 = (t.var(n) for n in IMPLICIT_VARS)
    return SystemImplicit(u1 * v2 - u2 * v1 * rat(alpha), u1 * v3 - u3 * v1 * rat(beta), name)


# -- corpus ------------------------------------------------------------------------------

@dataclass
class Fixture:
    name: str
    system: object
    transform: SL5Element = None
    expected: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    @property
    def analysed(self):
        """The system as analysed: transformed when a fixture transform is set."""
        if self.transform is None:
            return self.system
        sys = self.system
        if isinstance(sys, SystemEvol):
            sys = sys.to_implicit()
        return transform_system(sys, self.transform)


def system_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    name = data.get("name", "")
    form = data.get("form")
    if form == "evolutionary":
        sys = SystemEvol.parse(data["f"], data["g"], name)
    elif form == "implicit":
        sys = SystemImplicit.parse(data["F"], data["G"], name)
    else:
        raise ValueError(f"unknown form {form!r}")
    M = SL5Element.from_json(data["transform"]) if data.get("transform") else None
    return Fixture(name, sys, M, dict(data.get("expected", {})), data)


def corpus():
    root = resources.files("grasslab") / "fixtures"
    out = []
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json") and not entry.name.startswith("lax_"):
            out.append(system_from_json(entry.read_text()))
    return out


def corpus_entry(name):
    for fx in corpus():
        if fx.name == name:
            return fx
    raise KeyError(name)


def classify(sys, mode="points", n=DEFAULT_POINTS, seeds=DEFAULT_SEEDS):
    """All four verdicts for a system."""
    nd = test_nondegenerate(sys, mode=mode, seed=seeds[0])
    out = {"nondegenerate": nd}
    if not nd:
        return out
    out["integrable"] = test_integrable(sys, mode, n, seeds)
    out["linearisable"] = test_linearisable(sys, mode, n, seeds)
    out["linearly_degenerate"] = test_linearly_degenerate(sys, 3, mode, n, seeds)
    return out
